"""Beam design: zero-forcing beams and the max-min fair multicast beamformer.

The max-min problem max_w min_k |h_k^H w| s.t. ||w||^2 <= 1 is NP-hard in
general; the "sdr" method lifts it to the PSD matrix cone, runs a projected
supergradient ascent on the relaxation, and extracts a feasible unit-norm
beam by Gaussian randomization, so the returned value is always achievable.
The "grid" method (L = 2 only) sweeps w(theta, phi) = [cos t, sin t e^{i p}]
over a uniform grid and serves as the independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import channel_rows


class DegenerateChannelError(RuntimeError):
    """Channel realization too ill-conditioned for the requested beam."""


@dataclass(frozen=True)
class BeamVector:
    """Unit-norm beam with the users it targets and the users it nulls."""

    u: np.ndarray
    target: tuple[int, ...]
    nulled: tuple[int, ...] = ()


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Make the first non-negligible coordinate real-positive (determinism)."""
    for x in u:
        if abs(x) > 1e-8:
            return u * (x.conjugate() / abs(x))
    i = int(np.argmax(np.abs(u)))
    return u * (u[i].conjugate() / abs(u[i]))


def zero_forcing_bfv(H, S, T, sv_tol: float = 1e-8) -> BeamVector:
    """Unit beam serving T inside S, nulled at the L-1 users of S \\ T.

    The beam spans the (generically one-dimensional) orthogonal complement of
    the nulled users' channels, computed from the SVD of their stacked
    conjugated rows. Near-collinear nulled rows (smallest singular value
    below sv_tol) raise DegenerateChannelError.
    """
    rows = channel_rows(H)
    L = rows.shape[1]
    S = tuple(sorted(S))
    T = tuple(sorted(T))
    if not set(T) <= set(S):
        raise ValueError(f"T={T} is not a subset of S={S}")
    nulled = tuple(j for j in S if j not in T)
    if len(nulled) != L - 1:
        raise ValueError(f"need |S \\ T| = L-1 = {L - 1}, got {len(nulled)}")
    if L == 1:
        return BeamVector(u=np.ones(1, dtype=complex), target=T, nulled=())
    A = rows[[j - 1 for j in nulled]]
    _, sv, Vh = np.linalg.svd(A)
    if sv[-1] < sv_tol:
        raise DegenerateChannelError(
            f"nulled rows of S={S}, T={T} are rank deficient (sigma_min={sv[-1]:.3e})"
        )
    u = _fix_phase(Vh[-1].conj())
    u = u / np.linalg.norm(u)
    resid = np.max(np.abs(A @ u) / np.linalg.norm(A, axis=1))
    if resid > 1e-9:
        raise DegenerateChannelError(
            f"zero-forcing residual {resid:.3e} exceeds 1e-9 for S={S}, T={T}"
        )
    return BeamVector(u=u, target=T, nulled=nulled)


def beams_for_subset(H, S, group_size: int) -> dict[tuple[int, ...], BeamVector]:
    """Zero-forcing beams u_S^T for every group_size-subset T of S."""
    from itertools import combinations

    S = tuple(sorted(S))
    return {T: zero_forcing_bfv(H, S, T) for T in combinations(S, group_size)}


def _project_psd_capped_trace(W: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix with trace at most one (eigenvalue simplex clip)."""
    W = (W + W.conj().T) / 2
    lam, V = np.linalg.eigh(W)
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    if total > 1.0:
        u = np.sort(lam)[::-1]
        css = np.cumsum(u)
        rho = np.nonzero(u * np.arange(1, len(u) + 1) > (css - 1.0))[0][-1]
        lam = np.clip(lam - (css[rho] - 1.0) / (rho + 1.0), 0.0, None)
    return (V * lam) @ V.conj().T


def _polish_batch(rows_S: np.ndarray, starts: np.ndarray, iterations: int = 100) -> np.ndarray:
    """Smoothed min-gain ascent on the unit sphere from several starts at once.

    Standard rank-1 refinement after randomization: each candidate climbs the
    softmin of its per-user gains with a diminishing step, keeping the best
    point visited. Returns the single best beam over all starts.
    """
    W = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    best = W.copy()
    best_val = np.min(np.abs(rows_S @ W.T), axis=0)
    for it in range(1, iterations + 1):
        C = rows_S @ W.T  # (m, n_starts)
        A = np.abs(C)
        mu = np.maximum(0.05 * A.mean(axis=0) / it, 1e-14)
        P = np.exp(-(A - A.min(axis=0)) / mu)
        P /= P.sum(axis=0)
        G = rows_S.conj().T @ (P * C / np.maximum(A, 1e-300))  # (L, n_starts)
        G /= np.maximum(np.linalg.norm(G, axis=0), 1e-300)
        W2 = W + (0.3 / np.sqrt(it)) * G.T
        W2 /= np.linalg.norm(W2, axis=1, keepdims=True)
        vals = np.min(np.abs(rows_S @ W2.T), axis=0)
        up = vals >= best_val
        best[up] = W2[up]
        best_val = np.where(up, vals, best_val)
        # improved starts continue from the new point; stalled ones back off halfway
        W = np.where(up[:, None], W2, (W + W2) / 2)
        W /= np.linalg.norm(W, axis=1, keepdims=True)
    return best[int(np.argmax(best_val))]


def _sdr_solve(rows_S: np.ndarray, iterations: int, randomizations: int) -> np.ndarray:
    """Relaxation ascent, randomization, then local polish; returns a unit beam."""
    m, L = rows_S.shape
    Q = np.stack([np.outer(r.conj(), r) for r in rows_S])  # h_k h_k^H
    scale = float(np.mean(np.linalg.norm(Q, ord=2, axis=(1, 2))))
    W = np.eye(L, dtype=complex) / L
    best_W, best_val = W.copy(), float(np.min(np.real(np.einsum("kij,ji->k", Q, W))))
    for it in range(1, iterations + 1):
        vals = np.real(np.einsum("kij,ji->k", Q, W))
        mu = max(0.1 * scale / np.sqrt(it), 1e-12)
        p = np.exp(-(vals - vals.min()) / mu)
        p /= p.sum()
        W = W + (0.5 / (scale * np.sqrt(it))) * np.tensordot(p, Q, axes=1)
        W = _project_psd_capped_trace(W)
        val = float(np.min(np.real(np.einsum("kij,ji->k", Q, W))))
        if val > best_val:
            best_val, best_W = val, W.copy()
    lam, V = np.linalg.eigh((best_W + best_W.conj().T) / 2)
    lam = np.clip(lam, 0.0, None)
    half = V * np.sqrt(lam)
    # fixed-seed randomization keeps the solver deterministic per instance
    rng = np.random.default_rng(181818)
    z = rng.standard_normal((randomizations, L)) + 1j * rng.standard_normal((randomizations, L))
    cands = np.vstack([V[:, -1][None, :], rows_S.conj(), z @ half.conj().T])
    norms = np.linalg.norm(cands, axis=1)
    cands = cands[norms > 1e-12] / norms[norms > 1e-12, None]
    vals = np.min(np.abs(rows_S @ cands.T), axis=0)
    order = np.argsort(vals)[::-1]
    # polish the best few draws plus the structured candidates (the matched
    # filters and the top eigenvector sit in different basins than the draws)
    starts = np.vstack([cands[order[:5]], rows_S.conj(), V[:, -1][None, :]])
    best_w = _polish_batch(rows_S, starts)
    if np.min(np.abs(rows_S @ best_w)) < vals[order[0]]:
        best_w = cands[order[0]]
    return best_w


def _grid_solve(rows_S: np.ndarray, resolution: float) -> np.ndarray:
    """Uniform sweep of [cos t, sin t e^{i p}] over [0, pi/2] x [0, 2 pi)."""
    thetas = np.arange(0.0, np.pi / 2 + resolution, resolution)
    phis = np.arange(0.0, 2 * np.pi, resolution)
    cphi, sphi = np.cos(phis), np.sin(phis)
    best_val, best_tp = -1.0, (0.0, 0.0)
    chunk = max(1, int(4_000_000 // max(1, len(phis))))
    for start in range(0, len(thetas), chunk):
        th = thetas[start : start + chunk]
        ct, st = np.cos(th), np.sin(th)
        ctst2 = 2.0 * ct * st
        G = None
        for r in rows_S:
            a, b = r[0], r[1]
            cross = np.conj(a) * b
            # |a ct + b st e^{i phi}|^2, separated in the (1, cos, sin) basis
            g = (
                (abs(a) ** 2 * ct**2 + abs(b) ** 2 * st**2)[:, None]
                + np.outer(ctst2 * cross.real, cphi)
                - np.outer(ctst2 * cross.imag, sphi)
            )
            G = g if G is None else np.minimum(G, g)
        i, j = np.unravel_index(int(np.argmax(G)), G.shape)
        if G[i, j] > best_val:
            best_val, best_tp = float(G[i, j]), (float(th[i]), float(phis[j]))
    t0, p0 = best_tp
    return np.array([np.cos(t0), np.sin(t0) * np.exp(1j * p0)])


def maxmin_beamformer(
    H,
    S,
    method: str = "sdr",
    resolution: float = 1e-3,
    iterations: int = 60,
    randomizations: int = 200,
) -> tuple[BeamVector, float]:
    """Max-min fair multicast beam for the users of S.

    Returns (beam, value) with value = min_{k in S} |h_k^H w| recomputed from
    the returned unit-norm w, so beam and value can never drift apart. The
    single-user case is the exact matched filter.
    """
    rows = channel_rows(H)
    S = tuple(sorted(S))
    if not S:
        raise ValueError("S must be nonempty")
    if method not in ("sdr", "grid"):
        raise ValueError(f"unknown method {method!r}")
    rows_S = rows[[k - 1 for k in S]]
    if len(S) == 1:
        w = rows_S[0].conj()
        w = w / np.linalg.norm(w)
    elif method == "sdr":
        w = _sdr_solve(rows_S, iterations=iterations, randomizations=randomizations)
    elif method == "grid":
        if rows.shape[1] != 2:
            raise ValueError("grid method supports L = 2 only")
        w = _grid_solve(rows_S, resolution=resolution)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = _fix_phase(w)
    value = float(np.min(np.abs(rows_S @ w)))
    return BeamVector(u=w, target=S, nulled=()), value


def maxmin_value_monotonicity_check(
    H, S, S_super, method: str = "sdr", tol: float = 1e-6, resolution: float = 1e-2
) -> bool:
    """Adding users must not raise the max-min value (within solver tolerance).

    With the grid method both values come from the same lattice, so the
    property holds exactly and tol can be 0.
    """
    S = tuple(sorted(S))
    S_super = tuple(sorted(S_super))
    if not set(S) <= set(S_super):
        raise ValueError(f"S={S} must be a subset of S'={S_super}")
    _, v_small = maxmin_beamformer(H, S, method=method, resolution=resolution)
    _, v_big = maxmin_beamformer(H, S_super, method=method, resolution=resolution)
    return v_big <= v_small + tol * max(1.0, v_small)
