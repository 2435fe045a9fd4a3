"""Curl-curl energy functionals bound to assembled forms and a spectral split.

Two flavors: "full" is the shifted energy with the lambda mass term and
the semi-negative eigenspace as Xtilde; "cp" is the lambda-independent
limiting energy (pure curl energy against the p-term, Xtilde = {0}).  The
anisotropic variant uses the generalized spectrum of (A_mu, M_V) with
threshold eigenvalue 1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .forms import DiscreteForms, evaluate_J, evaluate_dJ, nonlinearity_hess_diag
from .nehari import FunctionalBackend
from .spectral import SpectralSplit, split as spectral_split


class CurlCurlBackend(FunctionalBackend):
    """J(phi) = 1/2 phi'A phi + lam/2 phi'M phi - 1/p sum w |phi|^p.

    Ambient metric is the curl energy A; X+ is the A- and M-orthogonal
    complement of the semi-negative eigenspace.  Immutable after
    construction and safe for concurrent evaluation.
    """

    def __init__(self, forms: DiscreteForms, spec: Optional[SpectralSplit],
                 lam: float, flavor: str = "full"):
        if flavor not in ("full", "cp"):
            raise ValueError(f"unknown flavor {flavor!r}")
        if flavor == "full" and lam > 0:
            raise ValueError(
                f"lambda={lam} > 0 is outside the admissible regime")
        self.forms = forms
        self.flavor = flavor
        self.lam = 0.0 if flavor == "cp" else float(lam)
        self.dim = forms.n
        self._lu = spla.factorized(forms.A.tocsc())

        if flavor == "cp" or spec is None or spec.nu is None or spec.nu == 1:
            self.split = spec
            self._tilde_raw = np.zeros((forms.n, 0))
            self._tilde_eigs = np.zeros(0)
        else:
            if spec.lam != self.lam:
                raise ValueError("spectral split was computed for a different lambda")
            self.split = spec
            self._tilde_raw = spec.tilde_basis          # M-orthonormal e_k
            self._tilde_eigs = spec.tilde_eigenvalues
        # A-orthonormal tilde basis: ||e_k||_A^2 = lambda_k for M-normalized e_k
        if self._tilde_raw.shape[1]:
            self.tilde_basis = self._tilde_raw / np.sqrt(self._tilde_eigs)[None, :]
        else:
            self.tilde_basis = self._tilde_raw
        self._tilde_M = self.forms.M_diag[:, None] * self._tilde_raw

    # -- FunctionalBackend contract -------------------------------------
    def value(self, phi):
        return evaluate_J(self.forms, self.lam, phi)

    def grad(self, phi):
        return evaluate_dJ(self.forms, self.lam, phi)

    def hess_vec(self, phi, v):
        return (self.forms.A @ v + self.lam * (self.forms.M_diag * v)
                - nonlinearity_hess_diag(self.forms, phi) * v)

    def inner(self, u, v):
        return float(u @ (self.forms.A @ v))

    def metric_solve(self, g):
        return self._lu(np.asarray(g, dtype=float))

    def newton_solve(self, phi, rhs):
        """Solve the Hessian system H(phi) x = rhs for Newton polishing."""
        import scipy.sparse as sp
        H = (self.forms.A + self.lam * sp.diags(self.forms.M_diag)
             - sp.diags(nonlinearity_hess_diag(self.forms, phi)))
        return spla.spsolve(H.tocsc(), np.asarray(rhs, dtype=float))

    def tilde_coords(self, phi):
        """Coefficients of the M-orthonormal eigenbasis of Xtilde."""
        return self._tilde_M.T @ phi

    def proj_plus(self, phi):
        if not self._tilde_raw.shape[1]:
            return np.asarray(phi, dtype=float)
        return phi - self._tilde_raw @ self.tilde_coords(phi)

    def nonlinear_value(self, phi):
        """I(phi) = -1/2 ||phi_tilde||_A^2 - lam/2 |phi|_M^2 + 1/p |phi|_p^p."""
        phi = np.asarray(phi, dtype=float)
        c = self.tilde_coords(phi)
        tilde_energy = float(c @ (self._tilde_eigs * c)) if c.size else 0.0
        mass = float(self.forms.M_diag @ phi ** 2)
        pterm = float(self.forms.w @ np.abs(phi) ** self.forms.p)
        return -0.5 * tilde_energy - 0.5 * self.lam * mass + pterm / self.forms.p


def make_backend(forms: DiscreteForms, spec: Optional[SpectralSplit],
                 lam: float, flavor: str = "full") -> CurlCurlBackend:
    """Bind forms and a lambda-split spectrum into a functional backend."""
    if flavor == "full" and spec is not None and spec.nu is None:
        spec = spectral_split(spec, lam)
    return CurlCurlBackend(forms, spec, lam, flavor)


def make_aniso_backend(forms: DiscreteForms, spec: SpectralSplit,
                       flavor: str = "full") -> CurlCurlBackend:
    """Anisotropic backend: Xtilde spans generalized eigenvectors with
    eigenvalue <= 1, equivalent to the shift lambda = -1 against M_V."""
    if flavor == "cp":
        return CurlCurlBackend(forms, spec, 0.0, "cp")
    if spec.nu is None or spec.lam != -1.0:
        spec = spectral_split(spec, -1.0)
    return CurlCurlBackend(forms, spec, -1.0, "full")


def residual(backend: CurlCurlBackend, phi: np.ndarray,
             drop_nonlinearity: bool = False) -> float:
    """M^{-1}-weighted norm of the discrete Euler-Lagrange residual."""
    forms = backend.forms
    r = forms.A @ phi + backend.lam * (forms.M_diag * phi)
    if not drop_nonlinearity:
        r = r - forms.w * np.abs(phi) ** (forms.p - 2) * phi
    return float(np.sqrt(r @ (r / forms.M_diag)))
