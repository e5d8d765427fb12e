"""Dense linear algebra and optimization primitives shared by the solvers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import ContractError

__all__ = [
    "sym_eig",
    "thin_svd",
    "spd_inv_sqrt",
    "default_floor",
    "LbfgsConfig",
    "LbfgsResult",
    "lbfgs_minimize",
    "make_rng",
    "gaussian_matrix",
]

ObjectiveFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


def _check_finite(A, name="A"):
    if not np.all(np.isfinite(A)):
        raise ContractError(f"{name} contains non-finite entries")


def sym_eig(A, top=None, check=True):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    A : ndarray of shape (n, n)
        Symmetric matrix.
    top : int, optional
        Only compute the ``top`` largest eigenpairs.
    check : bool
        Verify squareness and symmetry (tolerance ``1e-8 * ||A||_F``).

    Returns
    -------
    w : ndarray of shape (m,)
        Eigenvalues in descending order.
    V : ndarray of shape (n, m)
        Orthonormal eigenvectors, column ``i`` pairs with ``w[i]``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"sym_eig needs a square matrix, got shape {A.shape}")
    if check:
        _check_finite(A)
        scale = max(np.linalg.norm(A), 1e-300)
        asym = np.linalg.norm(A - A.T)
        if asym > 1e-8 * scale:
            raise ContractError(f"matrix is not symmetric (||A - A^T|| = {asym:.3e})")
    n = A.shape[0]
    if top is None or top >= n:
        w, V = np.linalg.eigh(A)
    else:
        if top < 1:
            raise ContractError("top must be positive")
        w, V = scipy.linalg.eigh(A, subset_by_index=[n - top, n - 1], check_finite=False)
    return w[::-1].copy(), V[:, ::-1].copy()


def thin_svd(A):
    """Thin SVD ``A = L diag(S) R^T`` of a tall matrix.

    Returns ``(L, S, R)`` with ``L`` of shape (n, k), ``S`` descending and
    ``R`` of shape (k, k).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ContractError("thin_svd needs a 2-D array")
    _check_finite(A)
    L, S, Rt = np.linalg.svd(A, full_matrices=False)
    return L, S, Rt.T


def default_floor(w, rel=1e-12):
    """Eigenvalue floor ``rel * max(max(w), 1)``."""
    top = float(np.max(w)) if np.size(w) else 0.0
    return rel * max(top, 1.0)


def spd_inv_sqrt(S, floor=None, return_eig=False):
    """Inverse square root of a symmetric PSD matrix with an eigenvalue floor.

    Computes ``U diag(max(w, floor))^{-1/2} U^T``. When ``floor`` is None the
    floor is ``1e-12 * max(max(w), 1)``.

    With ``return_eig=True`` the eigenvalues ``w`` (ascending, unfloored) are
    returned as a second value, so callers can reuse the factorization.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError(f"spd_inv_sqrt needs a square matrix, got shape {S.shape}")
    S = 0.5 * (S + S.T)
    w, U = np.linalg.eigh(S)
    if floor is None:
        floor = default_floor(w)
    inv = 1.0 / np.sqrt(np.maximum(w, floor))
    out = (U * inv) @ U.T
    out = 0.5 * (out + out.T)
    if return_eig:
        return out, w
    return out


# --------------------------------------------------------------------------
# L-BFGS


@dataclass(frozen=True)
class LbfgsConfig:
    """Settings for :func:`lbfgs_minimize`.

    ``gtol`` bounds the max-abs gradient entry; ``ftol`` bounds the relative
    decrease ``(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)``.
    """

    memory: int = 10
    gtol: float = 1e-3
    ftol: float = 1e-4
    max_iters: int = 500
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_linesearch: int = 25

    def __post_init__(self):
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ContractError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.gtol <= 0 or self.ftol <= 0:
            raise ContractError("gtol and ftol must be positive")
        if self.memory < 1 or self.max_iters < 0 or self.max_linesearch < 1:
            raise ContractError("memory, max_iters and max_linesearch must be positive")


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    n_evals: int
    status: str
    history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status in ("gtol", "ftol")

    def __iter__(self):
        # allows ``x, f, iters = lbfgs_minimize(...)``
        return iter((self.x, self.f, self.iterations))


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0:
        return None
    d2 = np.copysign(np.sqrt(rad), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    if not np.isfinite(t):
        return None
    return t


class _LineSearch:
    """Strong-Wolfe line search (bracketing + zoom, cubic steps with bisection guard)."""

    def __init__(self, fun, x, f0, g0, d, c1, c2, max_evals):
        self.fun = fun
        self.x = x
        self.f0 = f0
        self.d = d
        self.dphi0 = float(np.vdot(g0, d))
        self.c1 = c1
        self.c2 = c2
        self.max_evals = max_evals
        self.evals = 0
        self.best = None  # (step, f, g) with lowest f below f0

    def _phi(self, a):
        self.evals += 1
        f, g = self.fun(self.x + a * self.d)
        f = float(f)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return np.inf, g, np.nan
        if f < self.f0 and (self.best is None or f < self.best[1]):
            self.best = (a, f, g)
        return f, g, float(np.vdot(g, self.d))

    def _armijo_fails(self, a, f):
        return f > self.f0 + self.c1 * a * self.dphi0

    def _curvature_ok(self, dphi):
        return abs(dphi) <= -self.c2 * self.dphi0

    def search(self, a1, a_max=1e10):
        a_prev, f_prev, d_prev = 0.0, self.f0, self.dphi0
        a = a1
        first = True
        while self.evals < self.max_evals:
            f, g, dphi = self._phi(a)
            if self._armijo_fails(a, f) or (not first and f >= f_prev):
                return self._zoom(a_prev, f_prev, d_prev, a, f, dphi)
            if self._curvature_ok(dphi):
                return a, f, g
            if dphi >= 0:
                return self._zoom(a, f, dphi, a_prev, f_prev, d_prev)
            a_prev, f_prev, d_prev = a, f, dphi
            a = min(2.0 * a, a_max)
            first = False
        return None

    def _zoom(self, lo, f_lo, d_lo, hi, f_hi, d_hi):
        while self.evals < self.max_evals:
            width = hi - lo
            a = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                a = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            lo_b, hi_b = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if a is None or not lo_b <= a <= hi_b:
                a = lo + 0.5 * width
            f, g, dphi = self._phi(a)
            if self._armijo_fails(a, f) or f >= f_lo:
                hi, f_hi, d_hi = a, f, dphi
            else:
                if self._curvature_ok(dphi):
                    return a, f, g
                if dphi * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = a, f, dphi
            if abs(hi - lo) <= 1e-14 * max(abs(lo), 1.0):
                break
        return None


def _two_loop(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * np.vdot(s, q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.vdot(s, y) / np.vdot(y, y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * np.vdot(y, q)
        q += (a - b) * s
    return q


def lbfgs_minimize(fun, x0, cfg=None):
    """Minimize a smooth function with L-BFGS and a strong-Wolfe line search.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (f, grad)`` with ``grad`` shaped like ``x``.
    x0 : ndarray
        Starting point, any shape.
    cfg : LbfgsConfig, optional

    Returns
    -------
    LbfgsResult
        ``status`` is one of ``"gtol"``, ``"ftol"``, ``"max_iters"`` or
        ``"linesearch_failed"``. A failed line search never raises; the best
        point seen so far is returned. ``history`` holds the accepted
        objective values, starting with ``f(x0)``.
    """
    cfg = cfg or LbfgsConfig()
    x = np.array(x0, dtype=float, copy=True)
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    n_evals = 1
    history = [f]
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise ContractError("objective is not finite at the starting point")

    s_hist = deque(maxlen=cfg.memory)
    y_hist = deque(maxlen=cfg.memory)
    rho_hist = deque(maxlen=cfg.memory)

    status = "max_iters"
    it = 0
    if np.max(np.abs(g), initial=0.0) <= cfg.gtol:
        return LbfgsResult(x, f, g, 0, n_evals, "gtol", history)

    while it < cfg.max_iters:
        d = -_two_loop(g, s_hist, y_hist, rho_hist)
        if np.vdot(g, d) >= 0:
            # memory produced an ascent direction; restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
            d = -g
        if s_hist:
            a1 = 1.0
        else:
            a1 = min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))

        ls = _LineSearch(fun, x, f, g, d, cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_linesearch)
        found = ls.search(a1)
        n_evals += ls.evals
        if found is None:
            status = "linesearch_failed"
            if ls.best is not None:
                a, f_new, g_new = ls.best
                x = x + a * d
                f, g = f_new, np.asarray(g_new, dtype=float)
                history.append(f)
                it += 1
            break

        a, f_new, g_new = found
        g_new = np.asarray(g_new, dtype=float)
        s = a * d
        y = g_new - g
        sy = np.vdot(s, y)
        if sy > 1e-10 * np.vdot(y, y):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
        x = x + s
        rel = (f - f_new) / max(abs(f), abs(f_new), 1.0)
        f, g = f_new, g_new
        history.append(f)
        it += 1
        if np.max(np.abs(g)) <= cfg.gtol:
            status = "gtol"
            break
        if rel <= cfg.ftol:
            status = "ftol"
            break

    return LbfgsResult(x, f, g, it, n_evals, status, history)


# --------------------------------------------------------------------------
# randomness


def make_rng(seed):
    """Seeded numpy generator; the same seed always yields the same stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian_matrix(rng, rows, cols):
    """``rows x cols`` matrix of i.i.d. standard normal draws."""
    if rows <= 0 or cols <= 0:
        raise ContractError("rows and cols must be positive")
    return make_rng(rng).standard_normal((rows, cols))
