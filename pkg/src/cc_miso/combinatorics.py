"""Subset bookkeeping: cache placement, mini-file indexing and version counters.

Users are labelled 1..K and files 1..N throughout. Subsets are sorted integer
tuples and every enumeration is lexicographic; this single global order fixes
the transmission order of the delivery loops and the column order of the
combining coefficients, so it must not change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np


class ConfigError(ValueError):
    """A system configuration violates a structural requirement."""


def _as_fraction(value) -> Fraction:
    """Coerce M-like inputs to an exact rational.

    Floats go through their decimal string so 0.5 means 1/2 and 0.1 means
    1/10 rather than the nearest binary float.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class SystemConfig:
    """Problem instance: K users, L transmit antennas, N files, cache size M.

    M is the per-user cache size in files (rational); t = M*K/N must come out
    a non-negative integer. F is the file size in bits and must be divisible
    by C(K,t)*C(K-t-1,L-1) so files split evenly into mini-files; when omitted
    it defaults to the smallest multiple of that granularity times 8 that is
    at least 1024 bits. snr is a linear power ratio. coherence_block is kept
    for documentation only and plays no quantitative role.
    """

    K: int
    L: int
    N: int
    M: Fraction
    F: int | None = None
    snr: float = 100.0
    coherence_block: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "M", _as_fraction(self.M))
        if self.K < 1 or self.L < 1:
            raise ConfigError(f"K and L must be >= 1, got K={self.K}, L={self.L}")
        if self.K < self.L:
            raise ConfigError(f"need K >= L, got K={self.K} < L={self.L}")
        if self.N < self.K:
            raise ConfigError(
                f"need N >= K for worst-case distinct demands, got N={self.N} < K={self.K}"
            )
        if self.M < 0:
            raise ConfigError(f"cache size M must be non-negative, got {self.M}")
        t = self.M * self.K / self.N
        if t.denominator != 1:
            raise ConfigError(f"t = M*K/N = {t} is not an integer")
        if int(t) + self.L > self.K:
            raise ConfigError(
                f"need t + L <= K, got t={int(t)}, L={self.L}, K={self.K}: "
                "the (t+L)-subset delivery loops would be empty"
            )
        if not self.snr > 0:
            raise ConfigError(f"snr must be positive, got {self.snr}")
        granularity = math.comb(self.K, int(t)) * math.comb(self.K - int(t) - 1, self.L - 1)
        if self.F is None:
            unit = 8 * granularity
            object.__setattr__(self, "F", unit * max(1, -(-1024 // unit)))
        elif self.F <= 0 or self.F % granularity != 0:
            raise ConfigError(
                f"F={self.F} must be a positive multiple of "
                f"C(K,t)*C(K-t-1,L-1) = {granularity}"
            )

    @property
    def t(self) -> int:
        """Cache replication factor M*K/N."""
        return int(self.M * self.K / self.N)

    @property
    def subfiles_per_file(self) -> int:
        return math.comb(self.K, self.t)

    @property
    def minifiles_per_subfile(self) -> int:
        return math.comb(self.K - self.t - 1, self.L - 1)

    @property
    def subfile_bits(self) -> int:
        return self.F // self.subfiles_per_file

    @property
    def minifile_bits(self) -> int:
        return self.subfile_bits // self.minifiles_per_subfile

    @property
    def v(self) -> int:
        """Streams decoded per user per served (t+L)-subset: C(t+L-1, t)."""
        return math.comb(self.t + self.L - 1, self.t)

    @property
    def q(self) -> int:
        """Multicast groups per served (t+L)-subset: C(t+L, t+1)."""
        return math.comb(self.t + self.L, self.t + 1)


@dataclass(frozen=True, order=True)
class SubfileId:
    """One mini-file: mini-th fragment of subfile tau of a file.

    tau is the t-subset of users caching the subfile; mini is 1-based in
    [1 .. C(K-t-1, L-1)].
    """

    file: int
    tau: tuple[int, ...]
    mini: int


def enumerate_subsets(ground_size: int, subset_size: int) -> list[tuple[int, ...]]:
    """All subset_size-subsets of {1..ground_size} in lexicographic order.

    This order is canonical for the whole package (see module docstring).
    """
    if not 0 <= subset_size <= ground_size:
        raise ValueError(
            f"need 0 <= subset_size <= ground_size, got {subset_size}, {ground_size}"
        )
    return list(combinations(range(1, ground_size + 1), subset_size))


@lru_cache(maxsize=None)
def _tau_rank(K: int, t: int) -> dict[tuple[int, ...], int]:
    return {tau: i for i, tau in enumerate(combinations(range(1, K + 1), t))}


def all_subfile_ids(cfg: SystemConfig) -> list[SubfileId]:
    """Every mini-file of every file, ordered by (file, tau, mini)."""
    return [
        SubfileId(n, tau, j)
        for n in range(1, cfg.N + 1)
        for tau in enumerate_subsets(cfg.K, cfg.t)
        for j in range(1, cfg.minifiles_per_subfile + 1)
    ]


def placement_map(cfg: SystemConfig) -> dict[int, frozenset[SubfileId]]:
    """Cache contents per user: every mini-file whose tau contains the user."""
    cache: dict[int, set[SubfileId]] = {k: set() for k in range(1, cfg.K + 1)}
    for sid in all_subfile_ids(cfg):
        for k in sid.tau:
            cache[k].add(sid)
    return {k: frozenset(s) for k, s in cache.items()}


def minifile_slice(cfg: SystemConfig, sid: SubfileId) -> slice:
    """Bit range of one mini-file inside its file's F-bit array.

    Subfiles are laid out in lexicographic tau order, mini-files in mini
    order within each subfile.
    """
    pos = _tau_rank(cfg.K, cfg.t)[sid.tau]
    start = (pos * cfg.minifiles_per_subfile + sid.mini - 1) * cfg.minifile_bits
    return slice(start, start + cfg.minifile_bits)


def minifile_bits(files: np.ndarray, cfg: SystemConfig, sid: SubfileId) -> np.ndarray:
    """View of one mini-file's bits in the (N, F) library array."""
    return files[sid.file - 1, minifile_slice(cfg, sid)]


def generate_files(cfg: SystemConfig, seed: int) -> np.ndarray:
    """Synthetic library: (N, F) array of pseudo-random bits (uint8 0/1)."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(cfg.N, cfg.F), dtype=np.uint8)


class IndexCounter:
    """Mini-file version counters N(r, tau).

    One counter per (user r, t-subset tau) with r not in tau. The value is
    the 1-based index of the next mini-file of subfile (d_r, tau) to deliver
    to user r; every processed (t+L)-subset containing {r} | tau advances it
    by one, so after a full delivery pass all counters sit at
    C(K-t-1, L-1) + 1.
    """

    def __init__(self, cfg: SystemConfig):
        self._update_size = cfg.t + cfg.L
        self._t = cfg.t
        self.counts: dict[tuple[int, tuple[int, ...]], int] = {}
        for r in range(1, cfg.K + 1):
            others = [x for x in range(1, cfg.K + 1) if x != r]
            for tau in combinations(others, cfg.t):
                self.counts[(r, tau)] = 1

    def update(self, subset) -> "IndexCounter":
        """Advance N(r, T\\{r}) for every (t+1)-subset T of the served subset."""
        subset = tuple(sorted(subset))
        if len(subset) != self._update_size:
            raise ValueError(
                f"update subset must have size t+L={self._update_size}, got {len(subset)}"
            )
        for T in combinations(subset, self._t + 1):
            for r in T:
                tau = tuple(x for x in T if x != r)
                self.counts[(r, tau)] += 1
        return self

    def __getitem__(self, key) -> int:
        return self.counts[key]

    def items(self):
        return self.counts.items()

    def values(self):
        return self.counts.values()

    def as_dict(self) -> dict:
        return dict(self.counts)


def index_init(cfg: SystemConfig) -> IndexCounter:
    """Fresh counters, all at 1."""
    return IndexCounter(cfg)


def index_update(counter: IndexCounter, subset) -> IndexCounter:
    """Advance counters for one served (t+L)-subset; returns the counter."""
    return counter.update(subset)


def decode_count_identity(cfg: SystemConfig) -> bool:
    """Both sides count the non-cached mini-files of one file per user.

    C(K-1, t+L-1) * C(t+L-1, t) -- served subsets containing a user times
    streams decoded per subset -- must equal C(K-1, t) * C(K-t-1, L-1), the
    number of subfiles the user misses times mini-files per subfile.
    """
    K, L, t = cfg.K, cfg.L, cfg.t
    lhs = math.comb(K - 1, t + L - 1) * math.comb(t + L - 1, t)
    rhs = math.comb(K - 1, t) * math.comb(K - t - 1, L - 1)
    return lhs == rhs
