"""Generalized symmetric eigenproblem A e = lambda M e and spectral splitting.

The lowest eigenpairs realize the curl-curl spectrum restricted to
azimuthal fields; for a shift lambda <= 0 the eigenvectors with
lambda_k + lambda <= 0 span the semi-negative subspace of the quadratic
form Q(v) = v'Av + lambda v'Mv.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import DiscreteForms

DENSE_LIMIT = 5000
CLUSTER_RTOL = 1e-6


class SpectrumError(RuntimeError):
    """Raised when the computed spectrum does not cover the requested split."""


@dataclass(frozen=True)
class SpectralSplit:
    """k lowest eigenpairs, M-orthonormal, plus an optional lambda-split.

    ``eigenvalues`` are ascending and strictly positive; ``eigenvectors``
    has shape (n, k).  ``cluster_ids`` groups numerically equal eigenvalues
    (relative gap <= 1e-6), standing in for analytic multiplicities.
    After ``split`` has been applied, ``lam``/``nu``/``tilde_basis`` are set.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    cluster_ids: np.ndarray
    lam: Optional[float] = None
    nu: Optional[int] = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def tilde_basis(self) -> np.ndarray:
        """Eigenvectors spanning the semi-negative subspace, shape (n, nu-1)."""
        if self.nu is None:
            raise SpectrumError("split() has not been applied")
        return self.eigenvectors[:, : self.nu - 1]

    @property
    def tilde_eigenvalues(self) -> np.ndarray:
        if self.nu is None:
            raise SpectrumError("split() has not been applied")
        return self.eigenvalues[: self.nu - 1]

    def multiplicity(self, cluster: int) -> int:
        return int(np.sum(self.cluster_ids == cluster))


def _cluster(eigs: np.ndarray) -> np.ndarray:
    ids = np.zeros(len(eigs), dtype=int)
    for k in range(1, len(eigs)):
        gap = eigs[k] - eigs[k - 1]
        ids[k] = ids[k - 1] if gap <= CLUSTER_RTOL * max(1.0, eigs[k]) else ids[k - 1] + 1
    return ids


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for k in range(out.shape[1]):
        mags = np.abs(out[:, k])
        # lowest index among near-maximal entries: mirror-symmetric modes
        # carry +/- pairs of equal magnitude and plain argmax is unstable
        j = int(np.argmax(mags >= (1.0 - 1e-6) * mags.max()))
        if out[j, k] < 0:
            out[:, k] = -out[:, k]
    return out


def eigenpairs(forms: DiscreteForms, k: int) -> SpectralSplit:
    """Compute the k lowest eigenpairs of A e = lambda M e.

    Dense symmetric-definite solve below 5000 unknowns, shift-invert
    Lanczos at shift 0 above (the discrete compact resolvent).  Vectors are
    M-orthonormal with the largest-magnitude entry made positive.
    """
    n = forms.n
    if not 1 <= k <= n:
        raise ValueError(f"requested k={k} outside 1..{n}")
    m_sqrt = np.sqrt(forms.M_diag)

    if n <= DENSE_LIMIT:
        # symmetric similarity with the diagonal M^{-1/2}
        As = (forms.A.multiply(1.0 / m_sqrt[:, None])).multiply(1.0 / m_sqrt[None, :])
        evals, yvecs = scipy.linalg.eigh(np.asarray(As.todense()))
        evals, yvecs = evals[:k], yvecs[:, :k]
        vecs = yvecs / m_sqrt[:, None]
    else:
        M = sp.diags(forms.M_diag).tocsr()
        v0 = np.ones(n)
        evals, vecs = spla.eigsh(forms.A, k=k, M=M, sigma=0.0, which="LM", v0=v0)
        order = np.argsort(evals)
        evals, vecs = evals[order], vecs[:, order]

    # re-orthonormalize within clusters for a clean M-orthonormal basis
    gram = (vecs * forms.M_diag[:, None]).T @ vecs
    L = np.linalg.cholesky(gram)
    vecs = scipy.linalg.solve_triangular(L, vecs.T, lower=True).T
    vecs = _fix_signs(vecs)
    return SpectralSplit(eigenvalues=np.asarray(evals, dtype=float),
                         eigenvectors=vecs, cluster_ids=_cluster(np.asarray(evals)))


def split(spec: SpectralSplit, lam: float) -> SpectralSplit:
    """Populate nu and the tilde basis for a shift lam <= 0.

    nu = min{k : lambda_k + lam > 0} (1-based); the equality
    lambda_k + lam = 0 places the eigenvector on the semi-negative side.
    """
    if lam > 0:
        raise ValueError(f"lambda={lam} must be <= 0")
    eigs = spec.eigenvalues
    if eigs[-1] + lam <= 0:
        raise SpectrumError(
            f"all {spec.k} computed eigenvalues satisfy lambda_k + lambda <= 0; "
            "recompute eigenpairs with a larger k")
    nu = int(np.argmax(eigs + lam > 0)) + 1
    return replace(spec, lam=float(lam), nu=nu)


def quadratic_form(forms: DiscreteForms, lam: float, v: np.ndarray) -> float:
    """Q(v) = v'Av + lam * v'Mv."""
    return float(v @ (forms.A @ v) + lam * (forms.M_diag @ v ** 2))
