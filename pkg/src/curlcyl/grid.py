"""Meridian cross-section grid for cylindrically symmetric domains.

An O(2)x1-invariant domain is represented by its meridian rectangle
[0, r_max] x [z_min, z_max] on a uniform tensor grid.  The unknown is the
azimuthal field amplitude; it vanishes on the symmetry axis r = 0 and on
the outer boundary (perfect-conductor condition for azimuthal fields).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

COEFF_FLOOR = 1e-8


class ConfigurationError(ValueError):
    """Invalid grid, material or problem configuration."""


@dataclass(frozen=True)
class MeridianGrid:
    """Uniform (r, z) tensor grid with Dirichlet mask.

    Nodes sit at r_i = i*h_r (i = 0..n_r) and z_j = z_min + j*h_z
    (j = 0..n_z).  ``interior_mask[i, j]`` is True at unknowns; the axis
    i = 0 and all outer boundary nodes are always False.
    """

    r_max: float
    z_min: float
    z_max: float
    n_r: int
    n_z: int
    interior_mask: np.ndarray = field(repr=False)

    @property
    def h_r(self) -> float:
        return self.r_max / self.n_r

    @property
    def h_z(self) -> float:
        return (self.z_max - self.z_min) / self.n_z

    @property
    def r(self) -> np.ndarray:
        """Nodal radii, shape (n_r + 1,)."""
        return np.arange(self.n_r + 1) * self.h_r

    @property
    def z(self) -> np.ndarray:
        """Nodal heights, shape (n_z + 1,)."""
        return self.z_min + np.arange(self.n_z + 1) * self.h_z

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    @property
    def interior_indices(self) -> np.ndarray:
        """(k, 2) array of (i, j) node indices of the unknowns, row-major."""
        return np.argwhere(self.interior_mask)

    def to_full(self, phi: np.ndarray) -> np.ndarray:
        """Embed an interior vector into the full nodal array (zeros outside)."""
        full = np.zeros((self.n_r + 1, self.n_z + 1))
        full[self.interior_mask] = phi
        return full

    def from_full(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.interior_mask]


ShapeSpec = Union[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def build_grid(r_max: float, z_min: float, z_max: float, n_r: int, n_z: int,
               shape_spec: ShapeSpec = "rectangle") -> MeridianGrid:
    """Build the meridian grid.

    ``shape_spec`` is either "rectangle" or a vectorized predicate
    ``pred(r, z) -> bool`` selecting the interior; axis and outer boundary
    nodes are masked Dirichlet regardless.
    """
    if r_max <= 0 or z_max <= z_min:
        raise ConfigurationError("domain extents must be positive")
    if n_r < 4 or n_z < 4:
        raise ConfigurationError("need at least 4 cells per direction")

    h_r = r_max / n_r
    h_z = (z_max - z_min) / n_z
    rr, zz = np.meshgrid(np.arange(n_r + 1) * h_r,
                         z_min + np.arange(n_z + 1) * h_z, indexing="ij")
    mask = np.zeros((n_r + 1, n_z + 1), dtype=bool)
    mask[1:-1, 1:-1] = True
    if callable(shape_spec):
        mask &= np.asarray(shape_spec(rr, zz), dtype=bool)
    elif shape_spec != "rectangle":
        raise ConfigurationError(f"unknown shape spec {shape_spec!r}")
    if not mask.any():
        raise ConfigurationError("interior region is empty")
    return MeridianGrid(r_max=float(r_max), z_min=float(z_min),
                        z_max=float(z_max), n_r=int(n_r), n_z=int(n_z),
                        interior_mask=mask)


@dataclass(frozen=True)
class MaterialField:
    """Per-node material coefficients, all positive and bounded away from 0.

    a_mu/b_mu are the in-plane/axial permeability entries, a_V the
    permittivity weight and a_Gamma the nonlinearity weight.  Shapes are
    (n_r + 1, n_z + 1).
    """

    a_mu: np.ndarray = field(repr=False)
    b_mu: np.ndarray = field(repr=False)
    a_V: np.ndarray = field(repr=False)
    a_Gamma: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("a_mu", "b_mu", "a_V", "a_Gamma"):
            arr = getattr(self, name)
            if np.min(arr) < COEFF_FLOOR:
                raise ConfigurationError(
                    f"material coefficient {name} below floor {COEFF_FLOOR}")

    @property
    def is_unit(self) -> bool:
        return all(np.all(getattr(self, n) == 1.0)
                   for n in ("a_mu", "b_mu", "a_V", "a_Gamma"))


def unit_materials(grid: MeridianGrid) -> MaterialField:
    shape = (grid.n_r + 1, grid.n_z + 1)
    one = np.ones(shape)
    return MaterialField(one, one.copy(), one.copy(), one.copy())


def constant_materials(grid: MeridianGrid, a_mu: float = 1.0, b_mu: float = 1.0,
                       a_V: float = 1.0, a_Gamma: float = 1.0) -> MaterialField:
    shape = (grid.n_r + 1, grid.n_z + 1)
    return MaterialField(np.full(shape, float(a_mu)), np.full(shape, float(b_mu)),
                         np.full(shape, float(a_V)), np.full(shape, float(a_Gamma)))


def materials_from_csv(grid: MeridianGrid, path: str) -> MaterialField:
    """Read per-node coefficients from CSV, node-ordered row-major in (i, j).

    Columns: a_mu, b_mu, a_V, a_Gamma (header row required).
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    n = (grid.n_r + 1) * (grid.n_z + 1)
    if data.shape[0] != n:
        raise ConfigurationError(
            f"material table has {data.shape[0]} rows, grid needs {n}")
    shape = (grid.n_r + 1, grid.n_z + 1)
    cols = {}
    for name in ("a_mu", "b_mu", "a_V", "a_Gamma"):
        if name not in data.dtype.names:
            raise ConfigurationError(f"material table missing column {name}")
        cols[name] = np.asarray(data[name]).reshape(shape)
    return MaterialField(**cols)


def dump_field_csv(grid: MeridianGrid, phi: np.ndarray, path: str) -> None:
    """Write an interior vector as (r, z, value) rows over the full grid."""
    full = grid.to_full(phi)
    r, z = grid.r, grid.z
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "z", "value"])
        for i in range(grid.n_r + 1):
            for j in range(grid.n_z + 1):
                wr.writerow([f"{r[i]:.17g}", f"{z[j]:.17g}",
                             f"{full[i, j]:.17g}"])


def load_field_csv(grid: MeridianGrid, path: str) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", names=True)
    vals = np.asarray(data["value"]).reshape((grid.n_r + 1, grid.n_z + 1))
    return grid.from_full(vals)
