"""Symbol-level execution of the two zero-forcing delivery algorithms.

Runs are noise free. For complex-field combining, mini-file symbols are
id-carrying unit-power placeholder streams and correctness means solving for
their coefficients exactly; for finite-field combining the coded chunks are
GF(2) XORs of actual mini-file bit arrays. Both runs produce a transcript of
everything transmitted plus per-user decoded files, and verify_delivery
re-audits the transcript independently of the decode path.

Served subsets are processed in lexicographic order. For each (t+L)-subset S
the sender builds one zero-forcing beam per (t+1)-group T of S; the combining
coefficients for the complex scheme come from a scaled constant-modulus DFT
matrix, chosen so that every user's observation matrix factors as a unitary
times a diagonal of its beam gains and the transmit power bound is met with
the coefficient budget |sigma|^2 = 1/((t+1) C(t+L, t+1)) exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .beamforming import BeamVector, DegenerateChannelError, beams_for_subset
from .channel import SignalBlock, channel_rows
from .combinatorics import (
    IndexCounter,
    SubfileId,
    SystemConfig,
    all_subfile_ids,
    enumerate_subsets,
    index_init,
    index_update,
    minifile_bits,
    minifile_slice,
    placement_map,
)

GAIN_FLOOR = 1e-9
_DECODE_TOL = 1e-8


class DeliveryError(RuntimeError):
    """A delivery run broke an exactness guarantee (should not happen)."""


@dataclass(frozen=True)
class DemandVector:
    """Requested file index per user, d[k-1] in [1..N]."""

    d: tuple[int, ...]


def _as_demand(demand, cfg: SystemConfig) -> tuple[int, ...]:
    d = tuple(demand.d if isinstance(demand, DemandVector) else demand)
    if len(d) != cfg.K:
        raise ValueError(f"demand must list {cfg.K} files, got {len(d)}")
    if any(not 1 <= x <= cfg.N for x in d):
        raise ValueError(f"demand entries must lie in [1..{cfg.N}], got {d}")
    return d


def worst_case_demand(cfg: SystemConfig) -> DemandVector:
    """All-distinct demands d_k = k (requires N >= K)."""
    return DemandVector(tuple(range(1, cfg.K + 1)))


def build_unitary(v: int) -> np.ndarray:
    """v x v DFT scaled by 1/sqrt(v): unitary with all entries of modulus 1/sqrt(v).

    Constant modulus makes the coefficient power budget tight; for v = 2 this
    is the normalized Hadamard matrix.
    """
    if v < 1:
        raise ValueError(f"v must be >= 1, got {v}")
    jk = np.outer(np.arange(v), np.arange(v))
    return np.exp(-2j * np.pi * jk / v) / np.sqrt(v)


@dataclass(frozen=True)
class SigmaAssignment:
    """Combining coefficients sigma for one served subset S.

    coeffs maps (omega, r, T) -> complex for omega in 1..v, r in T, T a
    (t+1)-group of S. For each user r the coefficients across omega form the
    columns of scale * U indexed by member_order[r], the user's lexicographic
    enumeration of its groups, which yields the factorization
    L_r^S = scale * U @ diag(h_r^H u_S^T). Every coefficient has squared
    modulus sigma_abs_sq = 1/((t+1) q) exactly.
    """

    subset: tuple[int, ...]
    coeffs: dict
    member_order: dict
    unitary: np.ndarray
    scale: float
    sigma_abs_sq: Fraction


def assign_sigmas(S, cfg: SystemConfig, demand=None) -> SigmaAssignment:
    """Coefficient assignment for subset S (demand only relabels subfiles)."""
    S = tuple(sorted(S))
    if len(S) != cfg.t + cfg.L:
        raise ValueError(f"|S| must be t+L={cfg.t + cfg.L}, got {len(S)}")
    v, q = cfg.v, cfg.q
    U = build_unitary(v)
    scale = 1.0 / math.sqrt(cfg.t + cfg.L)  # sqrt(v / ((t+1) q))
    member_order = {
        r: tuple(T for T in combinations(S, cfg.t + 1) if r in T) for r in S
    }
    coeffs = {}
    for r in S:
        for i, T in enumerate(member_order[r]):
            for w in range(v):
                coeffs[(w + 1, r, T)] = complex(scale * U[w, i])
    return SigmaAssignment(
        subset=S,
        coeffs=coeffs,
        member_order=member_order,
        unitary=U,
        scale=scale,
        sigma_abs_sq=Fraction(1, (cfg.t + 1) * q),
    )


@dataclass
class SubsetRecord:
    """Everything transmitted for one served subset, plus the decode outcome.

    chunk_ids maps each group T to the (user, SubfileId) pairs combined into
    its chunk; gains holds h_r^H u_S^T for r in T; recovered lists the
    SubfileIds each user of S decoded from this subset.
    """

    subset: tuple[int, ...]
    beams: dict
    gains: dict
    blocks: tuple[SignalBlock, ...]
    chunk_ids: dict
    recovered: dict
    sigma: SigmaAssignment | None = None
    chunk_bits: dict | None = None


@dataclass
class DeliveryTranscript:
    """Ordered record of a full delivery pass."""

    algorithm: str
    demand: tuple[int, ...]
    snr: float
    channel_seed: int | None
    records: list[SubsetRecord]
    counter_final: dict
    stream_ids: tuple[SubfileId, ...] | None = None


def _chunk_ids_for(cfg, S, demand, counter):
    """Current-version (user, SubfileId) pairs per group T of S."""
    out = {}
    for T in combinations(S, cfg.t + 1):
        entries = []
        for r in T:
            tau = tuple(x for x in T if x != r)
            entries.append((r, SubfileId(demand[r - 1], tau, counter[(r, tau)])))
        out[T] = tuple(entries)
    return out


def _subset_gains(rows, S, beams, t_plus_1):
    gains = {}
    for T, bv in beams.items():
        for r in T:
            gains[(r, T)] = complex(rows[r - 1] @ bv.u)
    return gains


def _check_files(files, cfg):
    files = np.asarray(files)
    if files.shape != (cfg.N, cfg.F):
        raise ValueError(f"files must have shape (N, F) = ({cfg.N}, {cfg.F}), got {files.shape}")
    return files


def run_delivery_complex(cfg, H, demand, files):
    """Execute the complex-field algorithm and decode every user, noise free.

    For each served subset S the sender emits v = C(t+L-1, t) blocks; block
    omega superposes, per group T, the beam u_S^T times the sigma-weighted sum
    of the members' current mini-file placeholders, all scaled by sqrt(snr).
    Each user of S projects its channel row onto the blocks, cancels every
    cached placeholder exactly, rotates by U^H and divides by its beam gains,
    recovering v fresh mini-file ids per subset. Returns the transcript and
    the per-user reassembled files (bit arrays).
    """
    rows = channel_rows(H)
    d = _as_demand(demand, cfg)
    files = _check_files(files, cfg)
    ids = tuple(all_subfile_ids(cfg))
    col = {sid: i for i, sid in enumerate(ids)}
    counter = index_init(cfg)
    sqrt_snr = math.sqrt(cfg.snr)
    records: list[SubsetRecord] = []
    recovered_bits: dict[int, dict[SubfileId, np.ndarray]] = {k: {} for k in range(1, cfg.K + 1)}

    for S in enumerate_subsets(cfg.K, cfg.t + cfg.L):
        beams = beams_for_subset(rows, S, cfg.t + 1)
        gains = _subset_gains(rows, S, beams, cfg.t + 1)
        sigma = assign_sigmas(S, cfg, d)
        chunk_ids = _chunk_ids_for(cfg, S, d, counter)

        blocks = []
        for w in range(1, cfg.v + 1):
            C = np.zeros((cfg.L, len(ids)), dtype=complex)
            for T, entries in chunk_ids.items():
                u = beams[T].u
                for r, sid in entries:
                    C[:, col[sid]] += u * (sigma.coeffs[(w, r, T)] * sqrt_snr)
            blocks.append(SignalBlock(streams=C))

        recovered = {}
        for r in S:
            recovered[r] = _decode_complex_user(
                cfg, rows, r, sigma, gains, chunk_ids, blocks, col, sqrt_snr
            )
            for sid in recovered[r]:
                recovered_bits[r][sid] = np.array(minifile_bits(files, cfg, sid))

        records.append(
            SubsetRecord(
                subset=S,
                beams=beams,
                gains=gains,
                blocks=tuple(blocks),
                chunk_ids=chunk_ids,
                recovered=recovered,
                sigma=sigma,
            )
        )
        index_update(counter, S)

    decoded = {
        k: _assemble_file(cfg, k, d[k - 1], files, recovered_bits[k])
        for k in range(1, cfg.K + 1)
    }
    transcript = DeliveryTranscript(
        algorithm="complex",
        demand=d,
        snr=cfg.snr,
        channel_seed=getattr(H, "seed", None),
        records=records,
        counter_final=counter.as_dict(),
        stream_ids=ids,
    )
    return transcript, decoded


def _decode_complex_user(cfg, rows, r, sigma, gains, chunk_ids, blocks, col, sqrt_snr):
    """Appendix-style decode chain for one user of the served subset.

    Zero-forcing already removed every group not containing r from the
    received rows; the cached placeholders are cancelled exactly, then the
    unitary is inverted and each stream normalized by its beam gain. The
    result must be exactly one unit coefficient on the desired placeholder.
    """
    order = sigma.member_order[r]
    v = len(order)
    Y = np.vstack([rows[r - 1] @ b.streams for b in blocks])
    known = np.zeros_like(Y)
    for T in order:
        g = gains[(r, T)]
        if abs(g) < GAIN_FLOOR:
            raise DegenerateChannelError(
                f"beam gain |h_{r}^H u| = {abs(g):.3e} below {GAIN_FLOOR} for T={T}"
            )
        for i, sid in chunk_ids[T]:
            if i == r:
                continue
            for w in range(v):
                known[w, col[sid]] += g * sigma.coeffs[(w + 1, i, T)] * sqrt_snr
    Z = sigma.unitary.conj().T @ (Y - known)
    out = []
    for pos, T in enumerate(order):
        g = gains[(r, T)]
        zrow = Z[pos] / (sigma.scale * g * sqrt_snr)
        sid = next(s for i, s in chunk_ids[T] if i == r)
        err = zrow.copy()
        err[col[sid]] -= 1.0
        worst = float(np.max(np.abs(err)))
        if worst > _DECODE_TOL:
            raise DeliveryError(
                f"user {r} placeholder recovery off by {worst:.3e} for T={T}"
            )
        out.append(sid)
    return tuple(out)


def run_delivery_finite(cfg, H, demand, files):
    """Execute the finite-field algorithm and decode every user, noise free.

    Per served subset S the sender emits one block of q = C(t+L, t+1) chunk
    streams, each the XOR of its group's current mini-files, beamed with
    power snr/q. A user receives the v chunks of its own groups (the rest are
    nulled), treats them as ideally separated MAC streams, and XORs out its
    cached mini-files. Returns the transcript and per-user reassembled files.
    """
    rows = channel_rows(H)
    d = _as_demand(demand, cfg)
    files = _check_files(files, cfg)
    counter = index_init(cfg)
    records: list[SubsetRecord] = []
    recovered_bits: dict[int, dict[SubfileId, np.ndarray]] = {k: {} for k in range(1, cfg.K + 1)}
    stream_scale = math.sqrt(cfg.snr / cfg.q)

    for S in enumerate_subsets(cfg.K, cfg.t + cfg.L):
        beams = beams_for_subset(rows, S, cfg.t + 1)
        gains = _subset_gains(rows, S, beams, cfg.t + 1)
        chunk_ids = _chunk_ids_for(cfg, S, d, counter)
        chunk_order = list(combinations(S, cfg.t + 1))

        chunk_bits = {}
        for T in chunk_order:
            acc = np.zeros(cfg.minifile_bits, dtype=np.uint8)
            for _, sid in chunk_ids[T]:
                acc ^= minifile_bits(files, cfg, sid)
            chunk_bits[T] = acc

        C = np.zeros((cfg.L, len(chunk_order)), dtype=complex)
        for j, T in enumerate(chunk_order):
            C[:, j] = beams[T].u * stream_scale
        block = SignalBlock(streams=C)

        recovered = {}
        for r in S:
            got = []
            for T in chunk_order:
                if r not in T:
                    continue
                g = gains[(r, T)]
                if abs(g) < GAIN_FLOOR:
                    raise DegenerateChannelError(
                        f"beam gain |h_{r}^H u| = {abs(g):.3e} below {GAIN_FLOOR} for T={T}"
                    )
                bits = chunk_bits[T].copy()
                for i, sid in chunk_ids[T]:
                    if i != r:
                        bits ^= minifile_bits(files, cfg, sid)  # cached: r in sid.tau
                sid = next(s for i, s in chunk_ids[T] if i == r)
                recovered_bits[r][sid] = bits
                got.append(sid)
            recovered[r] = tuple(got)

        records.append(
            SubsetRecord(
                subset=S,
                beams=beams,
                gains=gains,
                blocks=(block,),
                chunk_ids=chunk_ids,
                recovered=recovered,
                chunk_bits=chunk_bits,
            )
        )
        index_update(counter, S)

    decoded = {
        k: _assemble_file(cfg, k, d[k - 1], files, recovered_bits[k])
        for k in range(1, cfg.K + 1)
    }
    transcript = DeliveryTranscript(
        algorithm="finite",
        demand=d,
        snr=cfg.snr,
        channel_seed=getattr(H, "seed", None),
        records=records,
        counter_final=counter.as_dict(),
    )
    return transcript, decoded


def _assemble_file(cfg, user, file_index, files, recovered):
    """Concatenate cached and recovered mini-files into the full file."""
    out = np.empty(cfg.F, dtype=np.uint8)
    for tau in enumerate_subsets(cfg.K, cfg.t):
        for j in range(1, cfg.minifiles_per_subfile + 1):
            sid = SubfileId(file_index, tau, j)
            if user in tau:
                bits = minifile_bits(files, cfg, sid)
            elif sid in recovered:
                bits = recovered[sid]
            else:
                raise DeliveryError(f"user {user} is missing {sid} after the full pass")
            out[minifile_slice(cfg, sid)] = bits
    return out


@dataclass
class VerificationReport:
    """Outcome of the transcript audit: (check name, ok, detail) triples."""

    checks: list[tuple[str, bool, str]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[tuple[str, str]]:
        return [(name, detail) for name, ok, detail in self.checks if not ok]

    def first_failure(self) -> tuple[str, str] | None:
        bad = self.failures()
        return bad[0] if bad else None


def verify_delivery(cfg, transcript: DeliveryTranscript, decoded) -> VerificationReport:
    """Audit a completed run from its transcript.

    Checks, in order: (a) each user's recovered mini-file set equals the
    non-cached part of its demanded file, (b) nothing was delivered twice to
    the same user, (c) every user of every served subset decoded exactly v
    mini-files there, (d) every emitted block respects the transmit power
    budget, plus the counter end-state and decoded array shapes.
    """
    checks = []
    from .channel import block_power

    expected_final = cfg.minifiles_per_subfile + 1
    d = transcript.demand

    all_recovered: dict[int, list[SubfileId]] = {k: [] for k in range(1, cfg.K + 1)}
    for rec in transcript.records:
        for r, sids in rec.recovered.items():
            all_recovered[r].extend(sids)

    ok, detail = True, ""
    for k in range(1, cfg.K + 1):
        want = {
            SubfileId(d[k - 1], tau, j)
            for tau in enumerate_subsets(cfg.K, cfg.t)
            if k not in tau
            for j in range(1, cfg.minifiles_per_subfile + 1)
        }
        got = set(all_recovered[k])
        if got != want:
            missing = sorted(want - got)
            extra = sorted(got - want)
            ok = False
            detail = f"user {k}: missing {missing[:3]}, extra {extra[:3]}"
            break
    checks.append(("recovered-set", ok, detail))

    ok, detail = True, ""
    for k, sids in all_recovered.items():
        if len(sids) != len(set(sids)):
            dupes = sorted({s for s in sids if sids.count(s) > 1})
            ok, detail = False, f"user {k} received {dupes[:3]} more than once"
            break
    checks.append(("no-duplicates", ok, detail))

    ok, detail = True, ""
    for rec in transcript.records:
        for r in rec.subset:
            n = len(rec.recovered.get(r, ()))
            if n != cfg.v:
                ok = False
                detail = f"user {r} decoded {n} != v={cfg.v} mini-files in subset {rec.subset}"
                break
        if not ok:
            break
    checks.append(("per-subset-count", ok, detail))

    ok, detail = True, ""
    budget = cfg.snr * (1 + 1e-9)
    for rec in transcript.records:
        for b in rec.blocks:
            p = block_power(b)
            if p > budget:
                ok, detail = False, f"block power {p:.6g} exceeds snr={cfg.snr} in subset {rec.subset}"
                break
        if not ok:
            break
    checks.append(("block-power", ok, detail))

    bad = {k: v for k, v in transcript.counter_final.items() if v != expected_final}
    checks.append(
        (
            "counter-final",
            not bad,
            "" if not bad else f"{len(bad)} counters != {expected_final}, e.g. {next(iter(bad.items()))}",
        )
    )

    ok, detail = True, ""
    for k in range(1, cfg.K + 1):
        arr = decoded.get(k)
        if arr is None or np.asarray(arr).shape != (cfg.F,):
            ok, detail = False, f"decoded file of user {k} missing or misshapen"
            break
    checks.append(("decoded-shape", ok, detail))

    return VerificationReport(checks=checks)


def dump_transcript(transcript: DeliveryTranscript, path) -> None:
    """Line-oriented text dump (subsets, beams, sigmas, gains, chunks) for diffing."""

    def fmt_c(z: complex) -> str:
        return f"{z.real:+.12e}{z.imag:+.12e}j"

    def fmt_set(s) -> str:
        return ",".join(str(x) for x in s)

    with open(path, "w") as fh:
        fh.write(
            f"# delivery algorithm={transcript.algorithm} demand={fmt_set(transcript.demand)} "
            f"snr={transcript.snr!r} channel_seed={transcript.channel_seed}\n"
        )
        for rec in transcript.records:
            fh.write(f"subset S={fmt_set(rec.subset)}\n")
            for T, bv in rec.beams.items():
                fh.write(f"beam T={fmt_set(T)} u={' '.join(fmt_c(z) for z in bv.u)}\n")
            for (r, T), g in rec.gains.items():
                fh.write(f"gain r={r} T={fmt_set(T)} value={fmt_c(g)}\n")
            if rec.sigma is not None:
                for (w, r, T), val in sorted(rec.sigma.coeffs.items()):
                    fh.write(f"sigma omega={w} r={r} T={fmt_set(T)} value={fmt_c(val)}\n")
            for T, entries in rec.chunk_ids.items():
                ids = ";".join(f"{r}:{sid.file}:{fmt_set(sid.tau)}:{sid.mini}" for r, sid in entries)
                fh.write(f"chunk T={fmt_set(T)} ids={ids}\n")
                if rec.chunk_bits is not None:
                    packed = np.packbits(rec.chunk_bits[T])
                    fh.write(f"chunkbits T={fmt_set(T)} hex={packed.tobytes().hex()}\n")
            for r, sids in rec.recovered.items():
                ids = ";".join(f"{sid.file}:{fmt_set(sid.tau)}:{sid.mini}" for sid in sids)
                fh.write(f"recovered r={r} ids={ids}\n")
        fh.write("# counters " + " ".join(
            f"{r}:{fmt_set(tau)}={val}" for (r, tau), val in sorted(transcript.counter_final.items())
        ) + "\n")
