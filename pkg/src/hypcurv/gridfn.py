"""Lattice scalar fields: the substrate for the p-harmonic solver and sublevel analysis.

A :class:`GridFunction` stores node values on a regular axis-aligned lattice with a
single scalar spacing.  Values may be ``-inf`` at excised nodes (e.g. where a height
function diverges); every ``-inf`` node must be masked.  The boundary mask marks nodes
that are held fixed by the solver; it always covers the topological boundary of the
lattice box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError

__all__ = ["GridFunction", "load_grid_function", "save_grid_function"]


@dataclass
class GridFunction:
    """Node values on a regular lattice.

    Parameters
    ----------
    dims : tuple of int
        Node counts per axis, each >= 3.
    spacing : float
        Lattice spacing, shared by all axes.
    origin : ndarray
        Coordinates of node (0, ..., 0).
    values : ndarray
        Node values, shape ``dims``; ``-inf`` marks excised nodes.
    boundary_mask : ndarray of bool
        Nodes held fixed (Dirichlet data or excised), shape ``dims``.
    """

    dims: tuple
    spacing: float
    origin: np.ndarray
    values: np.ndarray
    boundary_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.origin = np.asarray(self.origin, dtype=float)
        self.values = np.asarray(self.values, dtype=float).reshape(self.dims)
        if self.boundary_mask is None:
            self.boundary_mask = box_face_mask(self.dims)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool).reshape(self.dims)
        self.validate()

    # -- invariants ----------------------------------------------------------------
    def validate(self):
        if len(self.dims) < 1 or any(d < 3 for d in self.dims):
            raise ParameterError(f"grid needs >= 3 nodes per axis, got dims={self.dims}")
        if not self.spacing > 0:
            raise ParameterError(f"spacing must be positive, got {self.spacing}")
        if self.origin.shape != (len(self.dims),):
            raise ParameterError("origin dimension does not match dims")
        faces = box_face_mask(self.dims)
        if not np.all(self.boundary_mask[faces]):
            raise ParameterError("boundary_mask must cover the topological boundary")
        bad = np.isneginf(self.values) & ~self.boundary_mask
        if np.any(bad):
            raise DataError(f"-inf at {int(bad.sum())} unmasked node(s)")
        if np.any(np.isnan(self.values)) or np.any(np.isposinf(self.values)):
            raise DataError("grid values must be finite or -inf")

    # -- geometry helpers ----------------------------------------------------------
    @property
    def ndim(self) -> int:
        return len(self.dims)

    def axes(self):
        """Per-axis node coordinate arrays."""
        return [self.origin[k] + self.spacing * np.arange(d) for k, d in enumerate(self.dims)]

    def node_coords(self):
        """Coordinates of every node, shape dims + (ndim,)."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    def active_mask(self):
        """Nodes carrying a finite value."""
        return np.isfinite(self.values)

    def interior_mask(self):
        """Nodes the solver may update: active and not boundary."""
        return self.active_mask() & ~self.boundary_mask

    def copy(self) -> "GridFunction":
        return GridFunction(self.dims, self.spacing, self.origin.copy(),
                            self.values.copy(), self.boundary_mask.copy())


def box_face_mask(dims) -> np.ndarray:
    """Mask of the nodes on the faces of the lattice box."""
    mask = np.zeros(dims, dtype=bool)
    for axis in range(len(dims)):
        idx = [slice(None)] * len(dims)
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = -1
        mask[tuple(idx)] = True
    return mask


# -- CSV + JSON-header persistence -------------------------------------------------

def save_grid_function(gf: GridFunction, csv_path, header_path):
    """Write node values as one CSV column (C order) plus a JSON header."""
    header = {
        "dims": list(gf.dims),
        "spacing": gf.spacing,
        "origin": gf.origin.tolist(),
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    flat = gf.values.ravel(order="C")
    bnd = gf.boundary_mask.ravel(order="C").astype(int)
    with open(csv_path, "w") as fh:
        fh.write("value,boundary\n")
        for v, b in zip(flat, bnd):
            fh.write(f"{float(v)!r},{int(b)}\n")


def load_grid_function(csv_path, header_path) -> GridFunction:
    """Inverse of :func:`save_grid_function`."""
    with open(header_path) as fh:
        header = json.load(fh)
    dims = tuple(int(d) for d in header["dims"])
    rows = np.genfromtxt(csv_path, delimiter=",", skip_header=1)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    values = rows[:, 0].reshape(dims)
    boundary = rows[:, 1].reshape(dims).astype(bool)
    return GridFunction(dims, float(header["spacing"]), np.asarray(header["origin"], float),
                        values, boundary)
