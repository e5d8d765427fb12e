"""Exact eigendecomposition baselines.

``solve_ofsc`` restricts ``M`` to an orthonormal basis ``Z`` of the fair
subspace and takes the top eigenvectors of ``Z^T M Z``. ``solve_sfsc``
avoids ``Z`` and solves the projected problem ``P M P y = lambda y`` with
``P = Z Z^T = I - U U^T``.
"""

from __future__ import annotations

import time

import numpy as np

from ..numerics import make_rng, sym_eig
from .base import EmbeddingResult, check_k


def solve_ofsc(model, fc, cfg):
    t0 = time.perf_counter()
    check_k(cfg.k, model, fc)
    M = model.materialize()
    Z = fc.Q
    MZ = Z.T @ (M @ Z)
    MZ = 0.5 * (MZ + MZ.T)
    w, Yz = sym_eig(MZ, top=cfg.k, check=False)
    H = Z @ Yz
    wall = time.perf_counter() - t0
    return EmbeddingResult(H, H * model.inv_sqrt_degree[:, None], "ofsc", wall, eigenvalues=w)


def projected_matrix(M, U):
    """Dense ``(I - U U^T) M (I - U U^T)`` for orthonormal ``U``."""
    if U.shape[1] == 0:
        return M.copy()
    MU = M @ U
    C = U.T @ MU
    A = M - U @ MU.T - MU @ U.T + U @ C @ U.T
    return 0.5 * (A + A.T)


def lanczos_top(matvec, n, k, rng, start=None, tol=1e-10, max_dim=None):
    """Top-``k`` eigenpairs of a symmetric operator by Lanczos with full reorthogonalization.

    Returns ``(w, V, converged)`` with eigenvalues descending. The Krylov
    space grows until every wanted Ritz pair has residual below
    ``tol * max(|theta|, 1)`` or ``max_dim`` vectors have been built.
    """
    if max_dim is None:
        max_dim = n
    max_dim = min(max_dim, n)
    q = make_rng(rng).standard_normal(n) if start is None else np.array(start, dtype=float)
    basis = np.zeros((n, max_dim))
    alphas, betas = [], []
    q /= np.linalg.norm(q)
    beta = 0.0
    q_prev = np.zeros(n)
    converged = False
    w = V = None
    m = 0
    for m in range(1, max_dim + 1):
        basis[:, m - 1] = q
        r = matvec(q) - beta * q_prev
        a = float(q @ r)
        r -= a * q
        # two passes of classical Gram-Schmidt keep the basis orthonormal
        for _ in range(2):
            r -= basis[:, :m] @ (basis[:, :m].T @ r)
        alphas.append(a)
        beta = float(np.linalg.norm(r))
        if m >= k and (m % 5 == 0 or m == max_dim):
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, S = np.linalg.eigh(T)
            theta, S = theta[::-1][:k], S[:, ::-1][:, :k]
            res = np.abs(beta * S[-1, :])
            w, V = theta, basis[:, :m] @ S
            if np.all(res <= tol * np.maximum(np.abs(theta), 1.0)):
                converged = True
                break
        if m == max_dim:
            break
        if beta < 1e-14:
            # invariant subspace found early: continue from a fresh orthogonal direction
            r = make_rng(rng).standard_normal(n)
            for _ in range(2):
                r -= basis[:, :m] @ (basis[:, :m].T @ r)
            r /= np.linalg.norm(r)
            beta = 0.0
            betas.append(0.0)
            q_prev, q = q, r
            continue
        betas.append(beta)
        q_prev, q = q, r / beta
    return w, V, converged


def solve_sfsc(model, fc, cfg, rng=None):
    t0 = time.perf_counter()
    check_k(cfg.k, model, fc)
    flags = []
    status = "ok"
    if cfg.sfsc_method == "dense":
        A = projected_matrix(model.materialize(), fc.U)
        w, Yp = sym_eig(A, top=cfg.k, check=False)
    else:
        rng = make_rng(cfg.seed if rng is None else rng)
        start = fc.project(rng.standard_normal(model.n))

        def matvec(v):
            return fc.project(model.apply(fc.project(v)))

        w, Yp, ok = lanczos_top(matvec, model.n, cfg.k, rng, start=start,
                                tol=cfg.lanczos_tol, max_dim=cfg.lanczos_max_dim)
        if not ok:
            status = "not_converged"
            flags.append("lanczos_not_converged")
    wall = time.perf_counter() - t0
    return EmbeddingResult(Yp, Yp * model.inv_sqrt_degree[:, None], "sfsc", wall,
                           eigenvalues=w, status=status, flags=flags)
