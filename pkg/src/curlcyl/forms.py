"""Discrete bilinear forms and nonlinear quadrature on the meridian grid.

Conservative flux-form finite differences: the azimuthal curl component
(1/r) d/dr (r u) is evaluated at radial half-nodes, d/dz at axial
half-nodes.  The assembled stiffness matrix is symmetric positive definite
on the Dirichlet-interior unknowns and carries the 2*pi meridian measure
explicitly, so all discrete energies are comparable with 3D integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from .grid import ConfigurationError, MaterialField, MeridianGrid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DiscreteForms:
    """Stiffness A (curl energy), diagonal mass M, p-quadrature weights w.

    A and M act on interior vectors.  w carries the nonlinearity
    coefficient: w_i = 2*pi * r_i * h_r * h_z * a_Gamma_i**p.
    """

    grid: MeridianGrid
    materials: MaterialField = field(repr=False)
    A: sp.csr_matrix = field(repr=False)
    M_diag: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    mu_omega: float
    p: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def M(self) -> sp.csr_matrix:
        return sp.diags(self.M_diag).tocsr()

    def norm_A(self, phi: np.ndarray) -> float:
        return float(np.sqrt(max(phi @ (self.A @ phi), 0.0)))

    def norm_M(self, phi: np.ndarray) -> float:
        return float(np.sqrt(self.M_diag @ (phi * phi)))

    def norm_p(self, phi: np.ndarray) -> float:
        """|phi|_p with the Gamma-weighted quadrature."""
        return float((self.w @ np.abs(phi) ** self.p) ** (1.0 / self.p))

    def norm_p_plain(self, phi: np.ndarray, q: float) -> float:
        """|phi|_q with the plain geometric weights (Gamma dropped)."""
        r = self.grid.r[self.grid.interior_indices[:, 0]]
        w0 = TWO_PI * r * self.grid.h_r * self.grid.h_z
        return float((w0 @ np.abs(phi) ** q) ** (1.0 / q))


def _half_average(c: np.ndarray, axis: int) -> np.ndarray:
    if axis == 0:
        return 0.5 * (c[1:, :] + c[:-1, :])
    return 0.5 * (c[:, 1:] + c[:, :-1])


def assemble_forms(grid: MeridianGrid, materials: MaterialField,
                   p: float) -> DiscreteForms:
    """Assemble A, M, w and the domain measure for the given exponent p."""
    if not 2.0 < p <= 6.0:
        raise ConfigurationError(f"exponent p={p} outside (2, 6]")

    n_r, n_z = grid.n_r, grid.n_z
    h_r, h_z = grid.h_r, grid.h_z
    r = grid.r
    n_full = (n_r + 1) * (n_z + 1)

    def nid(i, j):
        return i * (n_z + 1) + j

    ii, jj = np.meshgrid(np.arange(n_r + 1), np.arange(n_z + 1), indexing="ij")

    # radial fluxes: rows indexed by half-nodes (i+1/2, j)
    ih, jh = np.meshgrid(np.arange(n_r), np.arange(n_z + 1), indexing="ij")
    r_half = (ih.ravel() + 0.5) * h_r
    rows = np.arange(ih.size)
    coef = 1.0 / (r_half * h_r)
    data_r = np.concatenate([-r[ih.ravel()] * coef, r[ih.ravel() + 1] * coef])
    idx_r = np.concatenate([nid(ih, jh).ravel(), nid(ih + 1, jh).ravel()])
    D_r = sp.csr_matrix((data_r, (np.concatenate([rows, rows]), idx_r)),
                        shape=(ih.size, n_full))
    b_half = _half_average(materials.b_mu, axis=0).ravel()
    B_b = TWO_PI * (1.0 / b_half) * r_half * h_r * h_z

    # axial fluxes: rows indexed by half-nodes (i, j+1/2)
    iv, jv = np.meshgrid(np.arange(n_r + 1), np.arange(n_z), indexing="ij")
    rows = np.arange(iv.size)
    data_z = np.concatenate([-np.full(iv.size, 1.0 / h_z),
                             np.full(iv.size, 1.0 / h_z)])
    idx_z = np.concatenate([nid(iv, jv).ravel(), nid(iv, jv + 1).ravel()])
    D_z = sp.csr_matrix((data_z, (np.concatenate([rows, rows]), idx_z)),
                        shape=(iv.size, n_full))
    a_half = _half_average(materials.a_mu, axis=1).ravel()
    B_a = TWO_PI * (1.0 / a_half) * r[iv.ravel()] * h_r * h_z

    A_full = (D_r.T @ sp.diags(B_b) @ D_r + D_z.T @ sp.diags(B_a) @ D_z)
    keep = grid.interior_mask.ravel()
    A = A_full.tocsr()[keep][:, keep]
    A = (0.5 * (A + A.T)).tocsr()  # exact symmetry against round-off order

    ridx = grid.interior_indices
    r_int = r[ridx[:, 0]]
    m_geom = TWO_PI * r_int * h_r * h_z
    M_diag = m_geom * materials.a_V[grid.interior_mask]
    w = m_geom * materials.a_Gamma[grid.interior_mask] ** p
    mu_omega = float(m_geom.sum())

    return DiscreteForms(grid=grid, materials=materials, A=A,
                         M_diag=M_diag, w=w, mu_omega=mu_omega, p=float(p))


def evaluate_J(forms: DiscreteForms, lam: float, phi: np.ndarray) -> float:
    """Energy J(phi) = 1/2 phi'A phi + lam/2 phi'M phi - 1/p sum w |phi|^p."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("non-finite entries in field vector")
    quad = 0.5 * (phi @ (forms.A @ phi)) + 0.5 * lam * (forms.M_diag @ phi ** 2)
    return float(quad - (forms.w @ np.abs(phi) ** forms.p) / forms.p)


def evaluate_dJ(forms: DiscreteForms, lam: float, phi: np.ndarray) -> np.ndarray:
    """Exact gradient of evaluate_J."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("non-finite entries in field vector")
    return (forms.A @ phi + lam * (forms.M_diag * phi)
            - forms.w * np.abs(phi) ** (forms.p - 2) * phi)


def nonlinearity_hess_diag(forms: DiscreteForms, phi: np.ndarray) -> np.ndarray:
    """Diagonal of the Hessian of the p-term of J (negative contribution)."""
    return (forms.p - 1) * forms.w * np.abs(phi) ** (forms.p - 2)
