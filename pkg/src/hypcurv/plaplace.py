"""Discrete p-Dirichlet energy minimization and the viscosity-subharmonicity probe.

The energy of a grid function u is the cell sum

    E(u) = sum_cells (|Du_cell|^2 + eps^2)^(p/2) * spacing^n

where Du_cell averages the forward differences along each axis over the cell.  Cells
with an excised (-inf) corner contribute nothing.  The minimizer over interior nodes
is found by gradient descent with a backtracking (Armijo) line search, so the recorded
energy trace is monotonically non-increasing.  For p = 2 the stationarity condition is
linear and an independently assembled sparse system provides the oracle solution.

The viscosity probe samples h = log f on a box, solves the p = n Dirichlet problem
with boundary h, and reports whether the p-harmonic solution dominates h up to a
discretization tolerance of 10 * spacing^2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import DataError, ParameterError, PreconditionError
from .gridfn import GridFunction, box_face_mask
from .heightfield import HeightField, sample_height_grid

__all__ = [
    "SolverConfig", "PHarmonicResult", "ComparisonReport", "ProbeResult",
    "p_dirichlet_energy", "solve_p_harmonic", "solve_laplace_linear",
    "comparison_check", "viscosity_probe", "tighten_boundary", "annulus_grid",
]

#: default grid spacing for the viscosity probe
PROBE_SPACING = 1.0 / 16


@dataclass(frozen=True)
class SolverConfig:
    """Optimizer settings for the p-Dirichlet minimization."""

    p: float
    epsilon: float = 1e-8
    max_iterations: int = 20000
    tolerance: float = 1e-13       # relative energy decrease considered stalled
    armijo: float = 1e-4           # sufficient-decrease parameter
    backtrack: float = 0.5         # step halving factor
    max_backtracks: int = 60
    stall_iterations: int = 5      # consecutive stalled iterations before stopping

    def __post_init__(self):
        if self.p < 2:
            raise ParameterError(f"solver requires p >= 2, got p={self.p}")
        if not self.epsilon > 0:
            raise ParameterError("regularization epsilon must be positive")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")


# -- cell-based energy ------------------------------------------------------------------

def _forward_diff(values, spacing, axis):
    sl1 = [slice(None)] * values.ndim
    sl0 = [slice(None)] * values.ndim
    sl1[axis] = slice(1, None)
    sl0[axis] = slice(None, -1)
    return (values[tuple(sl1)] - values[tuple(sl0)]) / spacing


def _cell_average(d, axis):
    sl1 = [slice(None)] * d.ndim
    sl0 = [slice(None)] * d.ndim
    sl1[axis] = slice(1, None)
    sl0[axis] = slice(None, -1)
    return 0.5 * (d[tuple(sl0)] + d[tuple(sl1)])


def _adjoint_average(y, axis):
    shape = list(y.shape)
    shape[axis] += 1
    out = np.zeros(shape, dtype=y.dtype)
    sl0 = [slice(None)] * y.ndim
    sl1 = [slice(None)] * y.ndim
    sl0[axis] = slice(None, -1)
    sl1[axis] = slice(1, None)
    out[tuple(sl0)] += 0.5 * y
    out[tuple(sl1)] += 0.5 * y
    return out


def _adjoint_diff(y, spacing, axis):
    shape = list(y.shape)
    shape[axis] += 1
    out = np.zeros(shape, dtype=y.dtype)
    sl0 = [slice(None)] * y.ndim
    sl1 = [slice(None)] * y.ndim
    sl0[axis] = slice(None, -1)
    sl1[axis] = slice(1, None)
    out[tuple(sl0)] -= y / spacing
    out[tuple(sl1)] += y / spacing
    return out


def _complete_cells(active):
    ca = active
    for axis in range(active.ndim):
        sl1 = [slice(None)] * active.ndim
        sl0 = [slice(None)] * active.ndim
        sl1[axis] = slice(1, None)
        sl0[axis] = slice(None, -1)
        ca = np.logical_and(ca[tuple(sl0)], ca[tuple(sl1)])
    return ca


def _cell_gradients(values, spacing):
    n = values.ndim
    comps = []
    for axis in range(n):
        d = _forward_diff(values, spacing, axis)
        for other in range(n):
            if other != axis:
                d = _cell_average(d, other)
        comps.append(d)
    return comps


def _energy_and_grad(values, spacing, p, eps, cell_mask, want_grad=True):
    n = values.ndim
    comps = _cell_gradients(values, spacing)
    sq = sum(c * c for c in comps)
    w = sq + eps * eps
    vol = spacing ** n
    dens = np.where(cell_mask, w ** (p / 2.0), 0.0)
    energy = float(np.sum(dens)) * vol
    if not want_grad:
        return energy, None
    coef = np.where(cell_mask, p * w ** (p / 2.0 - 1.0), 0.0) * vol
    grad = np.zeros_like(values)
    for axis in range(n):
        y = coef * comps[axis]
        for other in range(n):
            if other != axis:
                y = _adjoint_average(y, other)
        grad += _adjoint_diff(y, spacing, axis)
    return energy, grad


def p_dirichlet_energy(u: GridFunction, p: float, epsilon: float) -> float:
    """Regularized p-Dirichlet energy over the complete cells of u.

    Raises DataError (via grid validation) if a -inf value sits at an unmasked node.
    """
    u.validate()
    active = u.active_mask()
    vals = np.where(active, u.values, 0.0)
    energy, _ = _energy_and_grad(vals, u.spacing, p, epsilon,
                                 _complete_cells(active), want_grad=False)
    return energy


def tighten_boundary(gf: GridFunction) -> GridFunction:
    """Mark as boundary every active node incident to an incomplete cell.

    After tightening, each interior node sees only complete cells, which keeps the
    discrete stationarity conditions consistent near excised regions.
    """
    out = gf.copy()
    active = out.active_mask()
    incomplete = ~_complete_cells(active)
    n = out.ndim
    bad = np.zeros(out.dims, dtype=bool)
    # cell c touches the nodes c + off, off in {0,1}^n
    for off in itertools.product((0, 1), repeat=n):
        sl = tuple(slice(off[d], off[d] + out.dims[d] - 1) for d in range(n))
        bad[sl] |= incomplete
    out.boundary_mask |= active & bad
    out.boundary_mask |= box_face_mask(out.dims)
    out.validate()
    return out


@dataclass
class PHarmonicResult:
    """Solver output: the final grid plus the full (monotone) energy trace."""

    grid: GridFunction
    energy_trace: np.ndarray
    step_trace: np.ndarray
    converged: bool
    iterations: int


def solve_p_harmonic(boundary_data: GridFunction, config: SolverConfig) -> PHarmonicResult:
    """Minimize the regularized p-Dirichlet energy over the interior nodes.

    Interior entries of ``boundary_data`` are the starting point (a warm start with
    the height samples themselves, in the probe's case).  Termination: the relative
    energy decrease stays below ``config.tolerance`` for ``config.stall_iterations``
    consecutive accepted steps, the gradient vanishes, or ``config.max_iterations``
    is reached (the result is then flagged non-converged).
    """
    gf = boundary_data.copy()
    gf.validate()
    boundary_vals = gf.values[gf.boundary_mask & gf.active_mask()]
    if boundary_vals.size == 0 or not np.all(np.isfinite(boundary_vals)):
        raise DataError("boundary values must be finite")
    interior = gf.interior_mask()
    # excised nodes enter as zeros; their cells are masked out of the energy
    vals = np.where(np.isfinite(gf.values), gf.values, 0.0)

    active = gf.active_mask()
    cell_mask = _complete_cells(active)
    h, p, eps = gf.spacing, config.p, config.epsilon

    energy, grad = _energy_and_grad(vals, h, p, eps, cell_mask)
    grad = np.where(interior, grad, 0.0)
    trace = [energy]
    steps = []
    converged = False
    stalled = 0
    t = 1.0
    vals_prev = None
    grad_prev = None
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        gn2 = float(np.sum(grad * grad))
        if gn2 == 0.0:
            converged = True
            break
        if vals_prev is not None:
            # Barzilai-Borwein trial step, backtracked to guarantee decrease
            s = vals - vals_prev
            y = grad - grad_prev
            sy = float(np.sum(s * y))
            t = float(np.sum(s * s)) / sy if sy > 0 else t * 2.0
        accepted = False
        for _ in range(config.max_backtracks):
            cand = vals - t * grad
            e_new, g_new = _energy_and_grad(cand, h, p, eps, cell_mask)
            if e_new <= energy - config.armijo * t * gn2:
                accepted = True
                break
            t *= config.backtrack
        if not accepted:
            converged = True  # no descent at the smallest step: at numerical optimum
            break
        vals_prev, grad_prev = vals, grad
        vals = cand
        rel_drop = (energy - e_new) / max(abs(e_new), 1e-300)
        energy = e_new
        grad = np.where(interior, g_new, 0.0)
        trace.append(energy)
        steps.append(t)
        stalled = stalled + 1 if rel_drop < config.tolerance else 0
        if stalled >= config.stall_iterations:
            converged = True
            break

    out = gf.copy()
    out.values = np.where(np.isfinite(gf.values), vals, gf.values)
    out.values[~active] = gf.values[~active]
    return PHarmonicResult(out, np.asarray(trace), np.asarray(steps), converged, iterations)


# -- independent p = 2 oracle -----------------------------------------------------------

def _gradient_operator(dims, spacing, cell_mask):
    """Sparse map from node values to stacked per-cell gradient components."""
    n = len(dims)
    cdims = [d - 1 for d in dims]
    ncells = int(np.prod(cdims))
    nnodes = int(np.prod(dims))
    node_strides = np.array([int(np.prod(dims[k + 1:])) for k in range(n)])
    cell_multi = np.stack(np.meshgrid(*[np.arange(c) for c in cdims], indexing="ij"),
                          axis=-1).reshape(-1, n)
    keep = cell_mask.ravel()
    rows, cols, vals = [], [], []
    w = 1.0 / (2 ** (n - 1)) / spacing
    for axis in range(n):
        for off in itertools.product((0, 1), repeat=n):
            sign = 1.0 if off[axis] == 1 else -1.0
            node = (cell_multi + np.asarray(off)) @ node_strides
            rows.append(axis * ncells + np.arange(ncells)[keep])
            cols.append(node[keep])
            vals.append(np.full(int(keep.sum()), sign * w))
    A = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * ncells, nnodes))
    return A.tocsr()


def solve_laplace_linear(boundary_data: GridFunction) -> GridFunction:
    """p = 2 oracle: direct sparse solve of the discrete Laplace stationarity system.

    Assembles the cell-gradient operator explicitly and solves the normal equations,
    an independent route from the descent minimizer.
    """
    gf = boundary_data.copy()
    gf.validate()
    active = gf.active_mask()
    cell_mask = _complete_cells(active)
    interior = gf.interior_mask().ravel()
    A = _gradient_operator(gf.dims, gf.spacing, cell_mask)
    vals = np.where(active, gf.values, 0.0).ravel()
    AI = A[:, interior]
    AB = A[:, ~interior]
    rhs = -AI.T @ (AB @ vals[~interior])
    K = (AI.T @ AI).tocsc()
    sol = scipy.sparse.linalg.spsolve(K, rhs)
    out_vals = vals.copy()
    out_vals[interior] = sol
    out = gf.copy()
    out.values = out_vals.reshape(gf.dims)
    out.values[~active] = gf.values[~active]
    return out


# -- comparison principle ----------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Domination check v >= u at tolerance."""

    min_difference: float
    violations: np.ndarray   # node indices where v - u < -tol
    ok: bool


def comparison_check(u: GridFunction, v: GridFunction, tol: float = 1e-8) -> ComparisonReport:
    """Check v >= u given boundary domination v|bd >= u|bd.

    The boundary-domination precondition mirrors the continuum hypothesis; violating
    it is harness misuse and raises PreconditionError.
    """
    if u.dims != v.dims or u.spacing != v.spacing or not np.allclose(u.origin, v.origin):
        raise PreconditionError("comparison requires identical grids")
    both = u.active_mask() & v.active_mask()
    bd = u.boundary_mask & both
    if np.any(v.values[bd] < u.values[bd] - 1e-12):
        worst = float(np.min((v.values - u.values)[bd]))
        raise PreconditionError(f"boundary of v does not dominate u (min gap {worst:.3e})")
    diff = np.where(both, v.values - u.values, np.inf)
    min_diff = float(np.min(diff))
    viol = np.argwhere(diff < -tol)
    return ComparisonReport(min_diff, viol, viol.size == 0)


@dataclass(frozen=True)
class ProbeResult:
    """Viscosity-comparison probe outcome on one box."""

    subharmonic: bool
    min_margin: float
    tolerance: float
    excised_nodes: int
    spacing: float

    def __bool__(self):
        return self.subharmonic


def viscosity_probe(field: HeightField, lo, hi, config: SolverConfig,
                    spacing: float = PROBE_SPACING) -> ProbeResult:
    """Does the p-harmonic extension of h's boundary values dominate h on the box?

    Excised (-inf) nodes inside the box are removed from the Dirichlet domain and
    counted in the report; tolerance is 10 * spacing^2.
    """
    h_grid = sample_height_grid(field, lo, hi, spacing)
    excised = int(np.sum(~h_grid.active_mask()))
    h_grid = tighten_boundary(h_grid)
    result = solve_p_harmonic(h_grid, config)
    interior = h_grid.interior_mask()
    tol = 10.0 * spacing ** 2
    if not np.any(interior):
        return ProbeResult(True, 0.0, tol, excised, spacing)
    margin = float(np.min(result.grid.values[interior] - h_grid.values[interior]))
    return ProbeResult(margin >= -tol, margin, tol, excised, spacing)


# -- analytic-region grids ----------------------------------------------------------------

def annulus_grid(fn, r_inner: float, r_outer: float, spacing: float, n: int = 3) -> GridFunction:
    """Sample fn(|x|-coords) on the lattice covering the spherical annulus.

    Nodes within half a spacing of the annulus keep values (so complete cells cover
    the region without a systematic staircase deficit); everything else is excised.
    """
    half = r_outer + spacing
    count = int(math.ceil(2 * half / spacing)) + 1
    axes = [-half + spacing * np.arange(count) for _ in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum(m * m for m in mesh))
    active = (r >= r_inner - spacing / 2) & (r <= r_outer + spacing / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(active, fn(mesh), -np.inf)
    mask = box_face_mask(vals.shape) | ~active
    gf = GridFunction(vals.shape, spacing, np.array([a[0] for a in axes]), vals, mask)
    return tighten_boundary(gf)
