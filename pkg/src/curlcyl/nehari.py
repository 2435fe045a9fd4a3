"""Fiber maximization and sphere minimization for J = 1/2 ||u+||^2 - I(u).

Works against any FunctionalBackend exposing a splitting X+ (+) Xtilde of a
finite-dimensional space with an ambient Hilbert metric.  For each unit
direction u in X+ the energy restricted to the half-fiber R+ u (+) Xtilde
has a unique interior maximum n(u); minimizing J(n(u)) over the unit
sphere of X+ locates ground states, and descent from many directions
collects bound-state pairs.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np


class DegenerateDirectionError(RuntimeError):
    """No fiber maximum with t > 0 and positive energy was found."""


class ConvergenceError(RuntimeError):
    """Sphere descent exhausted its iteration budget."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class FunctionalBackend(abc.ABC):
    """Contract for functionals of the form J(u) = 1/2 ||u+||^2 - I(u).

    ``tilde_basis`` columns must be orthonormal in the ambient metric and
    span Xtilde; ``grad`` returns the Euclidean representation g with
    J'(u)(v) = g . v, and ``metric_solve`` maps it back to the metric
    gradient.
    """

    dim: int
    tilde_basis: np.ndarray  # (dim, K), metric-orthonormal

    @abc.abstractmethod
    def value(self, u: np.ndarray) -> float: ...

    @abc.abstractmethod
    def grad(self, u: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def hess_vec(self, u: np.ndarray, v: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def inner(self, u: np.ndarray, v: np.ndarray) -> float: ...

    @abc.abstractmethod
    def metric_solve(self, g: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def proj_plus(self, u: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def nonlinear_value(self, u: np.ndarray) -> float:
        """I(u), computed independently of value() for identity checks."""

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def normalize_direction(self, u: np.ndarray) -> np.ndarray:
        """Project onto X+ and scale to the unit sphere."""
        up = self.proj_plus(np.asarray(u, dtype=float))
        nrm = self.norm(up)
        if nrm == 0.0:
            raise DegenerateDirectionError("direction has no X+ component")
        return up / nrm


@dataclass
class NehariPoint:
    """Realized fiber maximum n(u) = t*u + tilde_basis @ c_tilde."""

    u: np.ndarray
    t: float
    c_tilde: np.ndarray
    phi: np.ndarray = field(repr=False)
    energy: float
    residual: float
    iterations: int = 0


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 2000
    fiber_tol: float = 1e-12
    fiber_max_iter: int = 200
    starts: int = 5
    seed: int = 0


def _fiber_value(backend, u, T, t, c):
    return backend.value(t * u + (T @ c if T.size else 0.0))


def _bracket_t(backend, u, T, c) -> float:
    """Coarse 1-D maximization of J along t for fixed tilde coordinates."""
    ts = np.concatenate([np.geomspace(1e-4, 1e4, 81)])
    vals = [_fiber_value(backend, u, T, t, c) for t in ts]
    j = int(np.argmax(vals))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
    # golden-section refinement
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - gr * (b - a), a + gr * (b - a)
    f1 = _fiber_value(backend, u, T, x1, c)
    f2 = _fiber_value(backend, u, T, x2, c)
    for _ in range(60):
        if f1 > f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - gr * (b - a)
            f1 = _fiber_value(backend, u, T, x1, c)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (b - a)
            f2 = _fiber_value(backend, u, T, x2, c)
    return 0.5 * (a + b)


def fiber_maximize(backend: FunctionalBackend, u: np.ndarray,
                   init: Optional[Tuple[float, np.ndarray]] = None,
                   tol: float = 1e-12, max_iter: int = 200) -> NehariPoint:
    """Maximize J over the half-fiber R+ u (+) Xtilde for unit u in X+.

    Damped Newton on (log t, c_tilde) with a negative-definiteness
    safeguard and gradient-ascent fallback; the initial t comes from a 1-D
    line maximization along the ray.
    """
    u = np.asarray(u, dtype=float)
    T = backend.tilde_basis
    K = T.shape[1] if T.ndim == 2 else 0
    if init is not None:
        t, c = float(init[0]), np.asarray(init[1], dtype=float).copy()
        if t <= 0:
            t, c = 1.0, np.zeros(K)
    else:
        c = np.zeros(K)
        t = _bracket_t(backend, u, T, c)

    def assemble(t, c):
        phi = t * u + (T @ c if K else 0.0)
        g = backend.grad(phi)
        gt = float(g @ u)            # J'(phi)(u)
        gc = T.T @ g if K else np.zeros(0)
        val = backend.value(phi)
        return phi, val, gt, gc

    phi, val, gt, gc = assemble(t, c)
    scale = max(1.0, abs(val))
    for it in range(max_iter):
        res = np.sqrt((t * gt) ** 2 + gc @ gc)  # gradient in (log t, c)
        if res <= tol * scale:
            break
        # fiber Hessian in (s=log t, c) coordinates
        dirs = [u] + ([T[:, k] for k in range(K)] if K else [])
        Hcols = [backend.hess_vec(phi, d) for d in dirs]
        H = np.empty((K + 1, K + 1))
        H[0, 0] = t * t * float(u @ Hcols[0]) + t * gt
        for k in range(K):
            H[0, k + 1] = H[k + 1, 0] = t * float(T[:, k] @ Hcols[0])
            for l in range(K):
                H[k + 1, l + 1] = float(T[:, k] @ Hcols[l + 1])
        gvec = np.concatenate([[t * gt], gc])
        use_newton = False
        try:
            evmax = np.max(np.linalg.eigvalsh(H))
            if evmax < 0:
                step = np.linalg.solve(H, -gvec)
                use_newton = True
        except np.linalg.LinAlgError:
            pass
        if not use_newton:
            step = gvec / max(1.0, np.linalg.norm(gvec))  # ascent fallback
        # damped update: backtrack on the merit J
        alpha = 1.0
        for _ in range(60):
            s_new = np.log(t) + alpha * step[0]
            c_new = c + alpha * step[1:]
            t_new = float(np.exp(np.clip(s_new, -60, 60)))
            phi_n, val_n, gt_n, gc_n = assemble(t_new, c_new)
            if val_n > val or (use_newton and alpha == 1.0 and
                               np.sqrt((t_new * gt_n) ** 2 + gc_n @ gc_n) < res):
                t, c, phi, val, gt, gc = t_new, c_new, phi_n, val_n, gt_n, gc_n
                break
            alpha *= 0.5
        else:
            break  # no progress possible at this precision
        scale = max(1.0, abs(val))

    res = float(np.sqrt(gt ** 2 + gc @ gc))
    if t <= 0 or val <= 0:
        raise DegenerateDirectionError(
            f"fiber maximization ended with t={t:.3e}, J={val:.3e}")
    return NehariPoint(u=u, t=float(t), c_tilde=c, phi=phi,
                       energy=float(val), residual=res)


def _riemannian_gradient(backend, point: NehariPoint):
    """Metric gradient of Phi = J o n at u, via Phi'(u) = ||n(u)+|| J'(n(u))."""
    g = backend.grad(point.phi)
    gm = backend.proj_plus(backend.metric_solve(g))
    gt = gm - backend.inner(gm, point.u) * point.u
    return point.t * gt  # ||n(u)+|| = t for unit u in X+


def _newton_polish(backend: FunctionalBackend, point: NehariPoint,
                   tol: float, max_iter: int = 50) -> Optional[NehariPoint]:
    """Newton on the unconstrained system J'(phi) = 0 from a near-critical
    point; returns the polished manifold point or None if it drifts away."""
    if not hasattr(backend, "newton_solve"):
        return None
    phi = point.phi.copy()
    scale = max(1.0, abs(point.energy))

    def metric_res(p):
        return backend.norm(backend.metric_solve(backend.grad(p)))

    res = metric_res(phi)
    for _ in range(max_iter):
        if res <= 0.1 * tol * scale:
            break
        try:
            step = backend.newton_solve(phi, -backend.grad(phi))
        except Exception:
            return None
        a = 1.0
        for _ in range(40):
            cand = phi + a * step
            r_new = metric_res(cand)
            if r_new < res:
                phi, res = cand, r_new
                break
            a *= 0.5
        else:
            return None
    if res > tol * scale:
        return None
    energy = backend.value(phi)
    if energy <= 0 or abs(energy - point.energy) > 0.5 * scale:
        return None
    up = backend.proj_plus(phi)
    t = backend.norm(up)
    if t <= 0:
        return None
    u = up / t
    T = backend.tilde_basis
    c = np.array([backend.inner(T[:, k], phi) for k in range(T.shape[1])])
    g = backend.grad(phi)
    fib_res = float(np.sqrt(float(g @ u) ** 2
                            + sum(float(g @ T[:, k]) ** 2
                                  for k in range(T.shape[1]))))
    return NehariPoint(u=u, t=float(t), c_tilde=c, phi=phi,
                       energy=float(energy), residual=fib_res)


def sphere_minimize(backend: FunctionalBackend, u0: np.ndarray,
                    opts: SolverOptions = SolverOptions()) -> NehariPoint:
    """Riemannian steepest descent of Phi = J o n on the unit sphere of X+.

    Armijo backtracking with normalization retraction and a
    Barzilai-Borwein initial step; once the projected gradient is small the
    iterate is polished by Newton on the full Euler-Lagrange system when
    the backend supports it.  Stops when the projected gradient norm falls
    below tol * max(1, |Phi|).
    """
    u = backend.normalize_direction(u0)
    point = fiber_maximize(backend, u, tol=opts.fiber_tol,
                           max_iter=opts.fiber_max_iter)
    coarse = max(opts.tol, 1e-4)
    alpha = 1.0
    prev_g = prev_u = None
    for it in range(opts.max_iter):
        g = _riemannian_gradient(backend, point)
        gn = backend.norm(g)
        scale = max(1.0, abs(point.energy))
        if gn <= opts.tol * scale:
            point.iterations = it
            return point
        if gn <= coarse * scale:
            polished = _newton_polish(backend, point, opts.tol)
            if polished is not None:
                polished.iterations = it
                return polished
        if prev_g is not None:
            du = u - prev_u
            dg = g - prev_g
            denom = backend.inner(du, dg)
            if denom > 0:
                alpha = max(min(backend.inner(du, du) / denom, 1e6), 1e-12)
        prev_g, prev_u = g, u
        accepted = False
        a = alpha
        for _ in range(60):
            v = u - a * g
            try:
                u_new = backend.normalize_direction(v)
                cand = fiber_maximize(backend, u_new,
                                      init=(point.t, point.c_tilde),
                                      tol=opts.fiber_tol,
                                      max_iter=opts.fiber_max_iter)
            except DegenerateDirectionError:
                a *= 0.5
                continue
            if cand.energy <= point.energy - 1e-4 * a * gn * gn:
                u, point = u_new, cand
                accepted = True
                break
            a *= 0.5
        if not accepted:
            # stagnation at round-off: try a final polish before giving up
            polished = _newton_polish(backend, point, opts.tol)
            if polished is not None:
                polished.iterations = it
                return polished
            raise ConvergenceError(
                f"descent stalled at |grad|={gn:.3e} after {it} iterations",
                best=point)
    g = _riemannian_gradient(backend, point)
    gn = backend.norm(g)
    if gn <= opts.tol * max(1.0, abs(point.energy)):
        point.iterations = opts.max_iter
        return point
    polished = _newton_polish(backend, point, opts.tol)
    if polished is not None:
        polished.iterations = opts.max_iter
        return polished
    raise ConvergenceError(
        f"no convergence in {opts.max_iter} iterations; |grad|={gn:.3e}",
        best=point)


def fiber_inequality_slack(backend: FunctionalBackend, point: NehariPoint,
                  t: float, v_tilde: np.ndarray) -> float:
    """Slack of the fiber-maximality inequality at a manifold point E.

    Returns J(E) - J(tE + v) + J'(E)((t^2-1)/2 E + t v) for v in Xtilde;
    nonnegative up to the residual of E, zero exactly at (t, v) = (1, 0).
    """
    E = point.phi
    v = np.asarray(v_tilde, dtype=float)
    g = backend.grad(E)
    corr = float(g @ (0.5 * (t * t - 1.0) * E + t * v))
    return backend.value(E) - backend.value(t * E + v) + corr


def multistart_bound_states(backend: FunctionalBackend,
                            starts: Sequence[np.ndarray],
                            dedup_tol: float = 1e-3,
                            opts: SolverOptions = SolverOptions(),
                            distance=None) -> List[NehariPoint]:
    """Descend Phi from each start direction and deduplicate the results.

    Points E and -E count as one pair.  ``distance(E1, E2)`` defaults to
    the metric norm of the difference; the returned count is a
    lower-confidence bound on the number of solution pairs, not a
    certificate.
    """
    if distance is None:
        def distance(a, b):
            return backend.norm(a - b)
    found: List[NehariPoint] = []
    for s in starts:
        try:
            pt = sphere_minimize(backend, s, opts)
        except (DegenerateDirectionError, ConvergenceError):
            continue
        is_dup = False
        for other in found:
            scale = max(backend.norm(other.phi), 1e-30)
            d = min(distance(pt.phi, other.phi),
                    distance(pt.phi, -other.phi)) / scale
            if d <= dedup_tol:
                is_dup = True
                break
        if not is_dup:
            found.append(pt)
    found.sort(key=lambda q: q.energy)
    return found


class ToyQuarticBackend(FunctionalBackend):
    """R^2 with X+ = span e1, Xtilde = span e2 and I(u) = |u|^4 / 4.

    The fiber maximum over R+ e1 (+) Xtilde is n(e1) = e1 with energy 1/4;
    useful as an exactly solvable reference.
    """

    def __init__(self):
        self.dim = 2
        self.tilde_basis = np.array([[0.0], [1.0]])

    def value(self, u):
        return 0.5 * u[0] ** 2 - 0.25 * float(u @ u) ** 2

    def grad(self, u):
        return np.array([u[0], 0.0]) - float(u @ u) * u

    def hess_vec(self, u, v):
        return (np.array([v[0], 0.0]) - float(u @ u) * v
                - 2.0 * float(u @ v) * u)

    def inner(self, u, v):
        return float(u @ v)

    def metric_solve(self, g):
        return np.asarray(g, dtype=float)

    def proj_plus(self, u):
        return np.array([u[0], 0.0])

    def nonlinear_value(self, u):
        return 0.25 * float(u @ u) ** 2
