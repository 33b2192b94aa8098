"""Graph hypersurfaces over domains in R^n and their second-order jets.

The upper half-space carries the hyperbolic metric, and every surface here is the
vertical graph of a positive function f over an axis-aligned box (minus optional
excised balls).  The catalog kinds have exact closed-form jets:

* ``horosphere``          f = c                       (flat level set)
* ``geodesic_sphere_cap`` f = a -/+ sqrt(b^2 - |x|^2)  (Euclidean sphere, a > b > 0)
* ``equidistant_cone``    f = s|x|                    (tube about the vertical axis)
* ``tilted_plane``        f = s*x_1                   (tube about a vertical plane)
* ``sampled_grid``        lattice samples + local tensor-product interpolation

Jets from closed forms are cross-validated against central differences by
:func:`fd_validate_jet`, which is the module's independent oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .gridfn import GridFunction, box_face_mask, load_grid_function

__all__ = [
    "Jet2", "Box", "BallMask", "HeightField",
    "Horosphere", "GeodesicSphereCap", "EquidistantCone", "TiltedPlane", "SampledGridField",
    "make_catalog_surface", "field_from_descriptor", "field_from_json", "field_to_descriptor",
    "fd_validate_jet", "JetValidation", "sample_height_grid", "CATALOG_KINDS",
]

#: default finite-difference step before the max(1, |x|) scaling
FD_STEP = 1e-4
#: default radius of the mandatory excised ball at a cone apex
CONE_MASK_RADIUS = 1e-3
#: default tensor-product interpolation order (polynomial degree) for sampled grids
INTERP_ORDER = 4

CATALOG_KINDS = ("horosphere", "geodesic_sphere_cap", "equidistant_cone",
                 "tilted_plane", "sampled_grid")


@dataclass(frozen=True)
class Jet2:
    """Point value, gradient and Hessian of the graph function f at x."""

    x: np.ndarray
    f: float
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=float))
        object.__setattr__(self, "hess", np.asarray(self.hess, dtype=float))
        if not self.f > 0:
            raise ParameterError(f"graph value must be positive, got f={self.f}")
        asym = float(np.max(np.abs(self.hess - self.hess.T))) if self.hess.size else 0.0
        scale = max(1.0, float(np.max(np.abs(self.hess)))) if self.hess.size else 1.0
        if asym > 1e-12 * scale:
            raise ParameterError(f"Hessian not symmetric (max asymmetry {asym:g})")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def grad_norm_sq(self) -> float:
        return float(self.grad @ self.grad)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo >= self.hi):
            raise ParameterError("box needs lo < hi componentwise")

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo + margin) and np.all(x <= self.hi - margin))


@dataclass(frozen=True)
class BallMask:
    """Excised open ball (singularity mask)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ParameterError("mask radius must be positive")

    def covers(self, x) -> bool:
        d = np.asarray(x, dtype=float) - self.center
        return bool(d @ d < self.radius ** 2)


class HeightField:
    """Base class: a positive graph function with exact or interpolated jets."""

    kind = "abstract"
    #: does the natural domain of f extend beyond any analysis box?
    unbounded = False

    def __init__(self, n: int, domain: Box, masks=()):
        if n < 2:
            raise ParameterError(f"dimension must be >= 2, got n={n}")
        self.n = int(n)
        self.domain = domain
        self.masks = tuple(masks)

    # closed-form pieces supplied by subclasses -------------------------------------
    def _value(self, x) -> float:
        raise NotImplementedError

    def _gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def _hessian(self, x) -> np.ndarray:
        raise NotImplementedError

    # public surface -----------------------------------------------------------------
    def contains(self, x) -> bool:
        """Is x in the box and outside every mask ball?"""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            return False
        if not self.domain.contains(x):
            return False
        return not any(m.covers(x) for m in self.masks)

    def _require(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DomainError(f"point has dimension {x.shape}, field has n={self.n}")
        if not self.domain.contains(x):
            raise DomainError(f"point {x} outside domain box")
        for m in self.masks:
            if m.covers(x):
                raise DomainError(f"point {x} inside excised ball at {m.center}")
        return x

    def value(self, x) -> float:
        return self._value(self._require(x))

    def jet(self, x) -> Jet2:
        """Second-order jet of f at x (exact for catalog kinds)."""
        x = self._require(x)
        return Jet2(x, self._value(x), self._gradient(x), self._hessian(x))

    def height(self, x) -> float:
        """h = log f; -inf inside a mask ball (where f degenerates)."""
        x = np.asarray(x, dtype=float)
        if not self.domain.contains(x):
            raise DomainError(f"point {x} outside domain box")
        if any(m.covers(x) for m in self.masks):
            return -math.inf
        v = self._value(x)
        return math.log(v) if v > 0 else -math.inf

    def value_array(self, X: np.ndarray) -> np.ndarray:
        """Vectorized f over points X of shape (..., n); subclasses may override."""
        X = np.asarray(X, dtype=float)
        flat = X.reshape(-1, self.n)
        return np.array([self._value(x) for x in flat]).reshape(X.shape[:-1])

    def height_array(self, X: np.ndarray) -> np.ndarray:
        """Vectorized h = log f with -inf at masked points; no domain-box check."""
        X = np.asarray(X, dtype=float)
        vals = self.value_array(X)
        masked = np.zeros(X.shape[:-1], dtype=bool)
        for m in self.masks:
            d = X - m.center
            masked |= np.einsum("...i,...i->...", d, d) < m.radius ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(masked | (vals <= 0), -np.inf, np.log(np.maximum(vals, 1e-300)))
        return out

    def sample_points(self, count: int, rng, r_min: float = None, r_max: float = None,
                      margin: float = 0.0) -> np.ndarray:
        """Rejection-sample points from the domain box, optionally within a radius band."""
        out = np.empty((count, self.n))
        lo, hi = self.domain.lo + margin, self.domain.hi - margin
        got = 0
        attempts = 0
        while got < count:
            attempts += 1
            if attempts > 100000 * count:
                raise ParameterError("sampling region too small for the domain")
            x = rng.uniform(lo, hi)
            r = float(np.linalg.norm(x))
            if r_min is not None and r < r_min:
                continue
            if r_max is not None and r > r_max:
                continue
            if not self.contains(x):
                continue
            out[got] = x
            got += 1
        return out

    def params(self) -> dict:
        return {}


class Horosphere(HeightField):
    """Constant graph f = c: the umbilic level set with all curvatures 1."""

    kind = "horosphere"
    unbounded = True

    def __init__(self, c: float, n: int, domain: Box = None):
        if not c > 0:
            raise ParameterError(f"horosphere height must be positive, got c={c}")
        if domain is None:
            domain = Box(-2.0 * np.ones(n), 2.0 * np.ones(n))
        super().__init__(n, domain)
        self.c = float(c)

    def _value(self, x):
        return self.c

    def _gradient(self, x):
        return np.zeros(self.n)

    def _hessian(self, x):
        return np.zeros((self.n, self.n))

    def value_array(self, X):
        X = np.asarray(X, dtype=float)
        return np.full(X.shape[:-1], self.c)

    def params(self):
        return {"c": self.c}


class GeodesicSphereCap(HeightField):
    """Cap of the Euclidean sphere centered at height a with radius b (a > b > 0).

    The full sphere is a geodesic sphere of hyperbolic radius artanh(b/a); the lower
    cap (f = a - sqrt(b^2 - |x|^2)) is the convex-oriented piece under the upward
    normal, with principal curvatures coth of the radius.
    """

    kind = "geodesic_sphere_cap"
    unbounded = False

    def __init__(self, center_height: float, euclidean_radius: float, cap: str = "lower",
                 n: int = 3, domain: Box = None):
        a, b = float(center_height), float(euclidean_radius)
        if not (a > b > 0):
            raise ParameterError(f"sphere cap needs a > b > 0, got a={a}, b={b}")
        if cap not in ("lower", "upper"):
            raise ParameterError(f"cap must be 'lower' or 'upper', got {cap!r}")
        if domain is None:
            half = 0.6 * b / math.sqrt(n)
            domain = Box(-half * np.ones(n), half * np.ones(n))
        super().__init__(n, domain)
        self.a, self.b, self.cap = a, b, cap

    def hyperbolic_radius(self) -> float:
        return math.atanh(self.b / self.a)

    def _w(self, x) -> float:
        w2 = self.b ** 2 - float(x @ x)
        if w2 <= 0:
            raise DomainError(f"point {x} outside the cap chart |x| < b")
        return math.sqrt(w2)

    def _value(self, x):
        w = self._w(x)
        return self.a - w if self.cap == "lower" else self.a + w

    def _gradient(self, x):
        w = self._w(x)
        sgn = 1.0 if self.cap == "lower" else -1.0
        return sgn * x / w

    def _hessian(self, x):
        w = self._w(x)
        sgn = 1.0 if self.cap == "lower" else -1.0
        return sgn * (np.eye(self.n) / w + np.outer(x, x) / w ** 3)

    def value_array(self, X):
        X = np.asarray(X, dtype=float)
        w2 = self.b ** 2 - np.einsum("...i,...i->...", X, X)
        w = np.sqrt(np.maximum(w2, 0.0))
        vals = self.a - w if self.cap == "lower" else self.a + w
        return np.where(w2 > 0, vals, -1.0)

    def params(self):
        return {"center_height": self.a, "euclidean_radius": self.b, "cap": self.cap}


class EquidistantCone(HeightField):
    """Cone f = s|x|: the surface at constant distance arcsinh(1/s) from the vertical axis.

    f is not differentiable at the axis and h -> -inf there, so a ball around the
    origin is always excised.
    """

    kind = "equidistant_cone"
    unbounded = True

    def __init__(self, slope: float, n: int, mask_radius: float = CONE_MASK_RADIUS,
                 domain: Box = None):
        if not slope > 0:
            raise ParameterError(f"cone slope must be positive, got s={slope}")
        if not mask_radius > 0:
            raise ParameterError("cone requires a positive mask radius at the apex")
        if domain is None:
            domain = Box(-2.0 * np.ones(n), 2.0 * np.ones(n))
        super().__init__(n, domain, masks=(BallMask(np.zeros(n), mask_radius),))
        self.slope = float(slope)

    def tube_distance(self) -> float:
        return math.asinh(1.0 / self.slope)

    def _value(self, x):
        return self.slope * float(np.linalg.norm(x))

    def _gradient(self, x):
        r = float(np.linalg.norm(x))
        return self.slope * x / r

    def _hessian(self, x):
        r = float(np.linalg.norm(x))
        return self.slope * (np.eye(self.n) / r - np.outer(x, x) / r ** 3)

    def value_array(self, X):
        X = np.asarray(X, dtype=float)
        return self.slope * np.sqrt(np.einsum("...i,...i->...", X, X))

    def params(self):
        return {"slope": self.slope, "mask_radius": self.masks[0].radius}


class TiltedPlane(HeightField):
    """Plane f = s*x_1 over the half-space x_1 > 0: umbilic with curvature 1/sqrt(1+s^2)."""

    kind = "tilted_plane"
    unbounded = True

    def __init__(self, slope: float, n: int, domain: Box = None):
        if not slope > 0:
            raise ParameterError(f"plane slope must be positive, got s={slope}")
        if domain is None:
            lo = np.full(n, -1.0)
            hi = np.full(n, 1.0)
            lo[0], hi[0] = 0.5, 2.5
            domain = Box(lo, hi)
        if domain.lo[0] <= 0:
            raise ParameterError("tilted plane domain must satisfy x_1 > 0")
        super().__init__(n, domain)
        self.slope = float(slope)

    def _value(self, x):
        return self.slope * float(x[0])

    def _gradient(self, x):
        g = np.zeros(self.n)
        g[0] = self.slope
        return g

    def _hessian(self, x):
        return np.zeros((self.n, self.n))

    def value_array(self, X):
        X = np.asarray(X, dtype=float)
        return self.slope * X[..., 0]

    def params(self):
        return {"slope": self.slope}


# -- sampled grids -------------------------------------------------------------------

def _lagrange_weight_table(npts: int):
    """Monomial coefficients of the Lagrange basis on nodes 0..npts-1 and derivatives."""
    offs = np.arange(npts, dtype=float)
    c0, c1, c2 = [], [], []
    for j in range(npts):
        roots = np.delete(offs, j)
        coeff = np.poly(roots) / np.prod(offs[j] - roots)
        c0.append(coeff)
        c1.append(np.polyder(coeff))
        c2.append(np.polyder(coeff, 2))
    return c0, c1, c2


class SampledGridField(HeightField):
    """Height field backed by lattice samples with local polynomial interpolation.

    Jets come from tensor-product Lagrange interpolation of the configured order on a
    window of (order+1)^n nodes around the query point; derivatives differentiate the
    1D basis.  Windows containing excised (-inf) nodes raise DomainError.
    """

    kind = "sampled_grid"
    unbounded = False

    def __init__(self, grid: GridFunction, order: int = INTERP_ORDER):
        if order < 2:
            raise ParameterError("interpolation order must be >= 2 for curvature jets")
        if any(d < order + 1 for d in grid.dims):
            raise ParameterError(f"grid too small for order {order} interpolation")
        n = grid.ndim
        lo = grid.origin
        hi = grid.origin + grid.spacing * (np.asarray(grid.dims) - 1)
        super().__init__(n, Box(lo, hi))
        self.grid = grid
        self.order = int(order)
        self._tables = _lagrange_weight_table(order + 1)

    @classmethod
    def from_field(cls, field: HeightField, box: Box, nodes_per_axis: int,
                   order: int = INTERP_ORDER) -> "SampledGridField":
        """Sample a field's graph values on a lattice covering ``box``."""
        gf = _sample_values_grid(field, box, nodes_per_axis)
        return cls(gf, order=order)

    def _window(self, x):
        t = (np.asarray(x, float) - self.grid.origin) / self.grid.spacing
        starts = []
        for d in range(self.n):
            s = int(math.floor(t[d])) - (self.order - 1) // 2
            s = min(max(s, 0), self.grid.dims[d] - 1 - self.order)
            starts.append(s)
        block = self.grid.values[tuple(slice(s, s + self.order + 1) for s in starts)]
        if not np.all(np.isfinite(block)):
            raise DomainError(f"interpolation window at {x} touches excised nodes")
        local = t - np.asarray(starts)
        return block, local

    def _weights(self, local):
        c0, c1, c2 = self._tables
        h = self.grid.spacing
        w = np.array([[np.polyval(c, xi) for c in c0] for xi in local])
        dw = np.array([[np.polyval(c, xi) / h for c in c1] for xi in local])
        ddw = np.array([[np.polyval(c, xi) / h ** 2 for c in c2] for xi in local])
        return w, dw, ddw

    @staticmethod
    def _contract(block, weights):
        out = block
        for wv in weights:
            out = np.tensordot(wv, out, axes=(0, 0))
        return float(out)

    def _value(self, x):
        block, local = self._window(x)
        w, _, _ = self._weights(local)
        return self._contract(block, [w[d] for d in range(self.n)])

    def _gradient(self, x):
        block, local = self._window(x)
        w, dw, _ = self._weights(local)
        g = np.empty(self.n)
        for d in range(self.n):
            rows = [dw[k] if k == d else w[k] for k in range(self.n)]
            g[d] = self._contract(block, rows)
        return g

    def _hessian(self, x):
        block, local = self._window(x)
        w, dw, ddw = self._weights(local)
        H = np.empty((self.n, self.n))
        for d in range(self.n):
            for e in range(d, self.n):
                rows = []
                for k in range(self.n):
                    if k == d and k == e:
                        rows.append(ddw[k])
                    elif k in (d, e):
                        rows.append(dw[k])
                    else:
                        rows.append(w[k])
                H[d, e] = H[e, d] = self._contract(block, rows)
        return H

    def jet(self, x) -> Jet2:
        x = self._require(x)
        H = self._hessian(x)
        return Jet2(x, self._value(x), self._gradient(x), 0.5 * (H + H.T))

    def params(self):
        return {"order": self.order, "dims": list(self.grid.dims),
                "spacing": self.grid.spacing, "origin": self.grid.origin.tolist()}


def _mesh_points(lo, dims, spacing):
    axes = [lo[d] + spacing * np.arange(dims[d]) for d in range(len(dims))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _masked_points(field: HeightField, X) -> np.ndarray:
    masked = np.zeros(X.shape[:-1], dtype=bool)
    for m in field.masks:
        d = X - m.center
        masked |= np.einsum("...i,...i->...", d, d) < m.radius ** 2
    return masked


def _sample_values_grid(field: HeightField, box: Box, nodes_per_axis: int) -> GridFunction:
    """Graph values f on a lattice; masked points get -inf and a boundary flag."""
    n = field.n
    spacing = float((box.hi[0] - box.lo[0]) / (nodes_per_axis - 1))
    dims = tuple(int(round((box.hi[d] - box.lo[d]) / spacing)) + 1 for d in range(n))
    X = _mesh_points(box.lo, dims, spacing)
    vals = field.value_array(X)
    good = ~_masked_points(field, X) & (vals > 0)
    values = np.where(good, vals, -np.inf)
    mask = box_face_mask(dims) | ~good
    return GridFunction(dims, spacing, box.lo.copy(), values, mask)


def sample_height_grid(field: HeightField, lo, hi, spacing: float) -> GridFunction:
    """Heights h = log f on a lattice over [lo, hi]; -inf at masked nodes.

    The window must sit inside the field's domain box.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    n = field.n
    if not (field.domain.contains(lo) and field.domain.contains(hi)):
        raise DomainError("analysis window exits the field domain")
    dims = tuple(int(round((hi[d] - lo[d]) / spacing)) + 1 for d in range(n))
    if any(d < 3 for d in dims):
        raise ParameterError("analysis window too small for the requested spacing")
    X = _mesh_points(lo, dims, spacing)
    values = field.height_array(X)
    mask = box_face_mask(dims) | np.isneginf(values)
    return GridFunction(dims, spacing, lo.copy(), values, mask)


# -- construction and descriptors ------------------------------------------------------

def make_catalog_surface(kind: str, params: dict, n: int) -> HeightField:
    """Build a catalog surface from keyword parameters.

    Raises ParameterError for an unknown kind or invalid parameters.
    """
    params = dict(params)
    domain = params.pop("domain", None)
    if domain is not None and not isinstance(domain, Box):
        domain = Box(np.asarray(domain["lo"], float), np.asarray(domain["hi"], float))
    if kind == "horosphere":
        return Horosphere(params.pop("c", 1.0), n, domain=domain)
    if kind == "geodesic_sphere_cap":
        return GeodesicSphereCap(params.pop("center_height"), params.pop("euclidean_radius"),
                                 params.pop("cap", "lower"), n, domain=domain)
    if kind == "equidistant_cone":
        return EquidistantCone(params.pop("slope"), n,
                               mask_radius=params.pop("mask_radius", CONE_MASK_RADIUS),
                               domain=domain)
    if kind == "tilted_plane":
        return TiltedPlane(params.pop("slope"), n, domain=domain)
    raise ParameterError(f"unknown catalog kind {kind!r}")


def field_from_descriptor(desc: dict, base_dir: str = ".") -> HeightField:
    """Instantiate a field from its JSON descriptor (see README for the schema)."""
    if "kind" not in desc:
        raise ParameterError("descriptor missing 'kind'")
    kind = desc["kind"]
    if kind == "sampled_grid":
        import os
        order = int(desc.get("order", INTERP_ORDER))
        grid = load_grid_function(os.path.join(base_dir, desc["values_csv"]),
                                  os.path.join(base_dir, desc["header_json"]))
        return SampledGridField(grid, order=order)
    if "n" not in desc:
        raise ParameterError("descriptor missing 'n'")
    params = {k: v for k, v in desc.items() if k not in ("kind", "n")}
    return make_catalog_surface(kind, params, int(desc["n"]))


def field_from_json(path: str) -> HeightField:
    import os
    with open(path) as fh:
        desc = json.load(fh)
    return field_from_descriptor(desc, base_dir=os.path.dirname(os.path.abspath(path)))


def field_to_descriptor(field: HeightField) -> dict:
    desc = {"kind": field.kind, "n": field.n}
    desc.update(field.params())
    desc["domain"] = {"lo": field.domain.lo.tolist(), "hi": field.domain.hi.tolist()}
    return desc


# -- finite-difference oracle ----------------------------------------------------------

@dataclass(frozen=True)
class JetValidation:
    """Componentwise deviation of closed-form derivatives from central differences."""

    grad_residual: float
    hess_residual: float
    step: float

    @property
    def max(self) -> float:
        return max(self.grad_residual, self.hess_residual)


def fd_validate_jet(field: HeightField, x, step: float = None) -> JetValidation:
    """Compare the field's jet against 3-point gradient / 5-point-stencil Hessian differences.

    The default step 1e-4 is scaled by max(1, |x|); all stencil points must lie in the
    field's domain or DomainError is raised.
    """
    x = np.asarray(x, dtype=float)
    n = field.n
    if step is None:
        step = FD_STEP * max(1.0, float(np.linalg.norm(x)))
    jet = field.jet(x)

    def val(y):
        if not field.contains(y):
            raise DomainError(f"finite-difference stencil exits domain at {y}")
        return field._value(y)

    f0 = val(x)
    e = np.eye(n) * step
    grad_fd = np.empty(n)
    hess_fd = np.empty((n, n))
    for i in range(n):
        fp, fm = val(x + e[i]), val(x - e[i])
        grad_fd[i] = (fp - fm) / (2 * step)
        hess_fd[i, i] = (fp - 2 * f0 + fm) / step ** 2
    for i in range(n):
        for j in range(i + 1, n):
            fpp = val(x + e[i] + e[j])
            fpm = val(x + e[i] - e[j])
            fmp = val(x - e[i] + e[j])
            fmm = val(x - e[i] - e[j])
            hess_fd[i, j] = hess_fd[j, i] = (fpp - fpm - fmp + fmm) / (4 * step ** 2)
    return JetValidation(
        grad_residual=float(np.max(np.abs(jet.grad - grad_fd))),
        hess_residual=float(np.max(np.abs(jet.hess - hess_fd))),
        step=step,
    )
