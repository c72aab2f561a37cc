"""Closed-form finite-SNR rate evaluators for the three delivery schemes.

All rates are in bits per complex channel use (log base 2); the base only
scales curves uniformly but the high-SNR slope tests pin the convention.
Scheme 1 is coded caching over max-min fair multicast groups of size t+1;
scheme 2 combines mini-files in the complex field under zero-forcing;
scheme 3 combines them in the finite field and decodes each user's streams
as a multiple-access channel at its equal-rate point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .beamforming import beams_for_subset, maxmin_beamformer
from .channel import ChannelMatrix, channel_rows
from .combinatorics import ConfigError, enumerate_subsets


@dataclass(frozen=True)
class RateReport:
    """Per-scheme rate summary for one channel realization.

    subset_rates pairs each served subset with its common rate; rsym is the
    harmonic combination of those rates (recomputable via
    rsym_from_subset_rates).
    """

    scheme: int
    snr: float
    rsym: float
    subset_rates: tuple[tuple[tuple[int, ...], float], ...]
    solver: str | None = None
    channel_seed: int | None = None


def rsym_from_subset_rates(scheme: int, cfg, rates) -> float:
    """Symmetric rate from per-subset common rates.

    Scheme 1 weights each (t+1)-subset by its message length 1/C(K,t);
    schemes 2 and 3 use the mini-file prefactor
    C(K,t) C(K-t-1,L-1) / C(t+L-1,t) over a plain harmonic sum. A zero
    subset rate pins the symmetric rate at zero.
    """
    rates = list(rates)
    if any(r <= 0.0 for r in rates):
        return 0.0
    if scheme == 1:
        weight = 1.0 / math.comb(cfg.K, cfg.t)
        return 1.0 / sum(weight / r for r in rates)
    prefactor = (
        math.comb(cfg.K, cfg.t)
        * math.comb(cfg.K - cfg.t - 1, cfg.L - 1)
        / math.comb(cfg.t + cfg.L - 1, cfg.t)
    )
    return prefactor / sum(1.0 / r for r in rates)


def groupcast_rate(H, S, w, snr: float) -> float:
    """Common multicast rate to S with beam w: min_k log2(1 + |h_k^H w|^2 snr)."""
    rows = channel_rows(H)
    u = w.u if hasattr(w, "u") else np.asarray(w)
    gains = np.abs(rows[[k - 1 for k in S]] @ u) ** 2
    return float(np.log2(1.0 + gains.min() * snr))


def scheme1_beam_values(H, cfg, solver: str = "sdr", resolution: float = 1e-3):
    """Max-min beam value per (t+1)-subset, in lexicographic subset order."""
    out = []
    for S in enumerate_subsets(cfg.K, cfg.t + 1):
        _, value = maxmin_beamformer(H, S, method=solver, resolution=resolution)
        out.append((S, value))
    return out


def scheme1_rates_from_values(values, snr: float):
    return [(S, float(np.log2(1.0 + b * b * snr))) for S, b in values]


def symrate_maxmin(H, cfg, solver: str = "sdr") -> RateReport:
    """Scheme 1 symmetric rate at cfg.snr, solving one beam per group."""
    values = scheme1_beam_values(H, cfg, solver=solver)
    subset_rates = scheme1_rates_from_values(values, cfg.snr)
    rsym = rsym_from_subset_rates(1, cfg, [r for _, r in subset_rates])
    return RateReport(
        scheme=1,
        snr=cfg.snr,
        rsym=rsym,
        subset_rates=tuple(subset_rates),
        solver=solver,
        channel_seed=getattr(H, "seed", None),
    )


def zf_subset_gains(H, cfg):
    """Squared beam gains for every served (t+L)-subset.

    Returns [(S, {T: {r: |h_r^H u_S^T|^2}})] in lexicographic order; this is
    the only channel-dependent input of schemes 2 and 3, so sweeps compute it
    once per realization and reuse it across the SNR grid.
    """
    rows = channel_rows(H)
    profile = []
    for S in enumerate_subsets(cfg.K, cfg.t + cfg.L):
        beams = beams_for_subset(H, S, cfg.t + 1)
        gains = {
            T: {r: float(np.abs(rows[r - 1] @ bv.u) ** 2) for r in T}
            for T, bv in beams.items()
        }
        profile.append((S, gains))
    return profile


def subset_rate_complex(H, S, snr: float, beams) -> float:
    """Common rate of one (t+L)-subset under complex-field combining.

    log2(1 + snr/(t+L) * g) with g the worst squared gain over all groups T
    and their members; t+L is |S|.
    """
    rows = channel_rows(H)
    S = tuple(sorted(S))
    if not beams:
        raise ValueError("beams must contain one zero-forcing beam per group T")
    gmin = min(
        float(np.abs(rows[r - 1] @ bv.u) ** 2) for T, bv in beams.items() for r in T
    )
    return float(np.log2(1.0 + snr * gmin / len(S)))


def _scheme2_subset_rate(gains: dict, size: int, snr: float) -> float:
    gmin = min(g for per_r in gains.values() for g in per_r.values())
    return float(np.log2(1.0 + snr * gmin / size))


def scheme2_rsym_from_gains(profile, cfg, snr: float) -> float:
    rates = [_scheme2_subset_rate(gains, len(S), snr) for S, gains in profile]
    return rsym_from_subset_rates(2, cfg, rates)


def symrate_complex(H, cfg) -> RateReport:
    """Scheme 2 symmetric rate at cfg.snr."""
    profile = zf_subset_gains(H, cfg)
    subset_rates = [
        (S, _scheme2_subset_rate(gains, len(S), cfg.snr)) for S, gains in profile
    ]
    rsym = rsym_from_subset_rates(2, cfg, [r for _, r in subset_rates])
    return RateReport(
        scheme=2,
        snr=cfg.snr,
        rsym=rsym,
        subset_rates=tuple(subset_rates),
        channel_seed=getattr(H, "seed", None),
    )


def mac_effective_rate(gains, snr: float, t: int, L: int) -> float:
    """Equal-rate operating point of one user's v-stream MAC.

    gains are the v = C(t+L-1, t) complex beam gains h_r^H u_S^T of the
    groups containing the user; each stream carries power snr/C(t+L, t+1).
    The effective sum rate is the smaller of the MAC sum-rate bound and v
    times the weakest single-stream rate.
    """
    v = math.comb(t + L - 1, t)
    q = math.comb(t + L, t + 1)
    g2 = np.abs(np.asarray(gains, dtype=complex)) ** 2
    if g2.shape != (v,):
        raise ValueError(f"expected {v} gains for t={t}, L={L}, got {g2.shape}")
    r_sum = float(np.log2(1.0 + snr / q * g2.sum()))
    r_single_min = float(np.log2(1.0 + snr / q * g2.min()))
    return min(r_sum, v * r_single_min)


def subset_rate_finite(H, S, snr: float, beams) -> float:
    """Common rate of one (t+L)-subset under finite-field combining.

    min over users of their MAC equal-rate effective sum rate.
    """
    rows = channel_rows(H)
    S = tuple(sorted(S))
    L = next(iter(beams.values())).u.shape[0]
    t = len(S) - L
    best = None
    for r in S:
        g = [complex(rows[r - 1] @ bv.u) for T, bv in beams.items() if r in T]
        r_eff = mac_effective_rate(g, snr, t, L)
        best = r_eff if best is None else min(best, r_eff)
    return float(best)


def _scheme3_subset_rate(gains: dict, size: int, L: int, snr: float) -> float:
    t = size - L
    v = math.comb(t + L - 1, t)
    q = math.comb(t + L, t + 1)
    users = sorted({r for per_r in gains.values() for r in per_r})
    best = None
    for r in users:
        g2 = np.array([per_r[r] for per_r in gains.values() if r in per_r])
        if g2.shape != (v,):
            raise ValueError(f"user {r} has {g2.size} gains, expected {v}")
        r_eff = min(
            float(np.log2(1.0 + snr / q * g2.sum())),
            v * float(np.log2(1.0 + snr / q * g2.min())),
        )
        best = r_eff if best is None else min(best, r_eff)
    return float(best)


def scheme3_rsym_from_gains(profile, cfg, snr: float) -> float:
    rates = [_scheme3_subset_rate(gains, len(S), cfg.L, snr) for S, gains in profile]
    return rsym_from_subset_rates(3, cfg, rates)


def symrate_finite(H, cfg) -> RateReport:
    """Scheme 3 symmetric rate at cfg.snr."""
    profile = zf_subset_gains(H, cfg)
    subset_rates = [
        (S, _scheme3_subset_rate(gains, len(S), cfg.L, cfg.snr)) for S, gains in profile
    ]
    rsym = rsym_from_subset_rates(3, cfg, [r for _, r in subset_rates])
    return RateReport(
        scheme=3,
        snr=cfg.snr,
        rsym=rsym,
        subset_rates=tuple(subset_rates),
        channel_seed=getattr(H, "seed", None),
    )


def dof(scheme: int, cfg) -> Fraction:
    """Exact per-user degrees of freedom of a scheme.

    (1 + K M/N) / (K (1 - M/N)) for scheme 1 and (L + K M/N) / (K (1 - M/N))
    for schemes 2 and 3; undefined when M >= N.
    """
    if scheme not in (1, 2, 3):
        raise ValueError(f"scheme must be 1, 2 or 3, got {scheme}")
    K, L = Fraction(cfg.K), Fraction(cfg.L)
    ratio = Fraction(cfg.M) / Fraction(cfg.N)
    if ratio >= 1:
        raise ConfigError("DoF is undefined for M >= N (everything cached)")
    num = (Fraction(1) if scheme == 1 else L) + K * ratio
    return num / (K * (1 - ratio))


def mn_transmission_length(cfg) -> Fraction:
    """Total single-link delivery length as an exact multiple of F.

    K (1 - M/N) / (1 + M K/N), which equals C(K, t+1) / C(K, t).
    """
    K = Fraction(cfg.K)
    ratio = Fraction(cfg.M) / Fraction(cfg.N)
    return K * (1 - ratio) / (1 + K * ratio)
