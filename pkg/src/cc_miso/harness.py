"""Monte Carlo driver: SNR sweeps, DoF slope estimates, crossover detection, output.

Trials are paired: every scheme in a sweep sees the identical channel
realization, which makes mean-rate comparisons and crossover detection
meaningful at moderate trial counts. Per-trial seeds are base_seed + trial;
degenerate realizations are redrawn deterministically at
base_seed + trial + k * trials, which cannot collide across trials.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .beamforming import DegenerateChannelError
from .channel import sample_channel
from .combinatorics import SystemConfig
from .rates import (
    scheme1_beam_values,
    scheme1_rates_from_values,
    scheme2_rsym_from_gains,
    scheme3_rsym_from_gains,
    rsym_from_subset_rates,
    zf_subset_gains,
)

log = logging.getLogger(__name__)

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class SweepSpec:
    """One sweep experiment: config, dB grid, trial count, schemes, solver."""

    cfg: SystemConfig
    snr_db: tuple[float, ...]
    trials: int
    base_seed: int = 0
    schemes: tuple[int, ...] = (1, 2, 3)
    solver: str = "sdr"

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(x) for x in self.snr_db))
        object.__setattr__(self, "schemes", tuple(sorted(set(int(s) for s in self.schemes))))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_db:
            raise ValueError("snr_db grid is empty")
        if list(self.snr_db) != sorted(self.snr_db):
            raise ValueError("snr_db grid must be sorted ascending")
        if not set(self.schemes) <= {1, 2, 3}:
            raise ValueError(f"schemes must be among 1,2,3, got {self.schemes}")
        if self.solver not in ("sdr", "grid"):
            raise ValueError(f"solver must be 'sdr' or 'grid', got {self.solver!r}")


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    scheme: int
    mean_rsym: float
    stderr: float
    trials: int


@dataclass
class SweepResult:
    """Aggregated sweep table plus reproducibility metadata."""

    rows: list[SweepRow]
    meta: dict = field(default_factory=dict)

    def mean(self, scheme: int, snr_db: float) -> float:
        for row in self.rows:
            if row.scheme == scheme and row.snr_db == snr_db:
                return row.mean_rsym
        raise KeyError(f"no row for scheme {scheme} at {snr_db} dB")

    def schemes(self) -> tuple[int, ...]:
        return tuple(sorted({r.scheme for r in self.rows}))

    def grid(self) -> tuple[float, ...]:
        return tuple(sorted({r.snr_db for r in self.rows}))


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _trial_channel(cfg, base_seed: int, trial: int, trials: int):
    """Draw the trial's channel, redrawing deterministically on degeneracy.

    Degeneracy is detected when downstream beam construction rejects the
    realization; the caller retries with the next seed in the trial's chain.
    """
    for k in range(_MAX_REDRAWS):
        yield sample_channel(cfg, base_seed + trial + k * trials)
    raise DegenerateChannelError(
        f"trial {trial}: {_MAX_REDRAWS} consecutive degenerate channel draws"
    )


def _trial_rsyms(cfg, cm, snrs, schemes, solver):
    """R_sym of each requested scheme at every SNR, one channel realization."""
    out = {}
    if 1 in schemes:
        values = scheme1_beam_values(cm, cfg, solver=solver)
        out[1] = np.array(
            [
                rsym_from_subset_rates(1, cfg, [r for _, r in scheme1_rates_from_values(values, s)])
                for s in snrs
            ]
        )
    if 2 in schemes or 3 in schemes:
        profile = zf_subset_gains(cm, cfg)
        if 2 in schemes:
            out[2] = np.array([scheme2_rsym_from_gains(profile, cfg, s) for s in snrs])
        if 3 in schemes:
            out[3] = np.array([scheme3_rsym_from_gains(profile, cfg, s) for s in snrs])
    return out


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Paired Monte Carlo sweep; deterministic given the spec."""
    cfg = spec.cfg
    snrs = [db_to_linear(db) for db in spec.snr_db]
    samples = {s: np.empty((spec.trials, len(snrs))) for s in spec.schemes}
    redraws = 0
    for trial in range(spec.trials):
        for cm in _trial_channel(cfg, spec.base_seed, trial, spec.trials):
            try:
                rsyms = _trial_rsyms(cfg, cm, snrs, spec.schemes, spec.solver)
                break
            except DegenerateChannelError:
                redraws += 1
                log.debug("trial %d: degenerate channel (seed %s), redrawing", trial, cm.seed)
        for s in spec.schemes:
            samples[s][trial] = rsyms[s]

    rows = []
    for i, db in enumerate(spec.snr_db):
        for s in spec.schemes:
            col = samples[s][:, i]
            stderr = float(col.std(ddof=1) / np.sqrt(spec.trials)) if spec.trials > 1 else 0.0
            rows.append(SweepRow(db, s, float(col.mean()), stderr, spec.trials))
    meta = {
        "base_seed": spec.base_seed,
        "solver": spec.solver,
        "trials": spec.trials,
        "redraws": redraws,
        "K": cfg.K,
        "L": cfg.L,
        "N": cfg.N,
        "M": str(cfg.M),
        "t": cfg.t,
        "F": cfg.F,
    }
    return SweepResult(rows=rows, meta=meta)


def find_crossover(result: SweepResult, a: int, b: int):
    """First SNR (dB) where mean(a) - mean(b) changes sign, interpolated.

    Exact zeros are skipped over when looking for the sign change (so an
    identical pair of curves has no crossover); the crossover point is the
    linear interpolation between the bracketing nonzero differences. Returns
    None when the sign never changes on the grid.
    """
    for s in (a, b):
        if s not in result.schemes():
            raise ValueError(f"scheme {s} not present in result")
    xs = list(result.grid())
    diff = [result.mean(a, x) - result.mean(b, x) for x in xs]
    nz = [i for i, d in enumerate(diff) if d != 0.0]
    for prev, nxt in zip(nz, nz[1:]):
        if diff[prev] * diff[nxt] < 0:
            return xs[prev] + (xs[nxt] - xs[prev]) * diff[prev] / (diff[prev] - diff[nxt])
    return None


def estimate_dof(
    cfg,
    scheme: int,
    snr_lo_db: float = 60.0,
    snr_hi_db: float = 80.0,
    trials: int = 200,
    base_seed: int = 0,
    solver: str | None = None,
    grid_resolution: float = 5e-3,
) -> float:
    """High-SNR slope of mean R_sym in bits per log2(SNR) unit.

    Scheme 1 defaults to the grid oracle when L = 2 (the randomized solver
    adds noise exactly where the finite-difference is taken); the slope is
    insensitive to the oracle resolution, so a coarse default keeps it fast.
    """
    if snr_lo_db >= snr_hi_db:
        raise ValueError("need snr_lo_db < snr_hi_db")
    if solver is None:
        solver = "grid" if (scheme == 1 and cfg.L == 2) else "sdr"
    lo, hi = db_to_linear(snr_lo_db), db_to_linear(snr_hi_db)
    span = np.log2(hi) - np.log2(lo)
    slopes = np.empty(trials)
    for trial in range(trials):
        for cm in _trial_channel(cfg, base_seed, trial, trials):
            try:
                if scheme == 1:
                    values = scheme1_beam_values(cm, cfg, solver=solver, resolution=grid_resolution)
                    r = [
                        rsym_from_subset_rates(
                            1, cfg, [x for _, x in scheme1_rates_from_values(values, s)]
                        )
                        for s in (lo, hi)
                    ]
                else:
                    profile = zf_subset_gains(cm, cfg)
                    f = scheme2_rsym_from_gains if scheme == 2 else scheme3_rsym_from_gains
                    r = [f(profile, cfg, s) for s in (lo, hi)]
                break
            except DegenerateChannelError:
                continue
        slopes[trial] = (r[1] - r[0]) / span
    return float(slopes.mean())


_CSV_COLUMNS = ["snr_db", "scheme", "mean_rsym_bits", "stderr", "trials", "solver", "seed"]


def emit_csv(result: SweepResult, path) -> None:
    """Write the sweep table with a `#`-comment header echoing the config."""
    if not result.rows:
        raise ValueError("refusing to write an empty sweep result")
    meta = result.meta
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for row in result.rows:
            writer.writerow(
                [
                    repr(row.snr_db),
                    row.scheme,
                    repr(row.mean_rsym),
                    repr(row.stderr),
                    row.trials,
                    meta.get("solver", ""),
                    meta.get("base_seed", ""),
                ]
            )


def read_sweep_csv(path) -> SweepResult:
    """Parse a file written by emit_csv back into a SweepResult."""
    rows = []
    meta: dict = {}
    with open(path, newline="") as fh:
        header_seen = False
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if not header_seen:
                if cells != _CSV_COLUMNS:
                    raise ValueError(f"unexpected CSV header {cells}")
                header_seen = True
                continue
            rows.append(
                SweepRow(
                    snr_db=float(cells[0]),
                    scheme=int(cells[1]),
                    mean_rsym=float(cells[2]),
                    stderr=float(cells[3]),
                    trials=int(cells[4]),
                )
            )
    return SweepResult(rows=rows, meta=meta)


_SCHEME_LABELS = {
    1: "scheme 1: max-min multicast",
    2: "scheme 2: ZF + complex-field",
    3: "scheme 3: ZF + finite-field",
}


def emit_plot(result: SweepResult, path) -> None:
    """Mean R_sym vs SNR with stderr bars, one curve per scheme (SVG/PNG)."""
    if not result.rows:
        raise ValueError("refusing to plot an empty sweep result")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    xs = list(result.grid())
    for s in result.schemes():
        means = [result.mean(s, x) for x in xs]
        errs = [row.stderr for x in xs for row in result.rows if row.scheme == s and row.snr_db == x]
        ax.errorbar(xs, means, yerr=errs, marker="o", markersize=3, capsize=2,
                    label=_SCHEME_LABELS.get(s, f"scheme {s}"))
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("mean symmetric rate [bits/s/Hz per user]")
    trials = result.rows[0].trials
    ax.set_title(f"K={result.meta.get('K')} L={result.meta.get('L')} t={result.meta.get('t')}, "
                 f"{trials} trials")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
