"""Complex baseband MISO downlink: Rayleigh fading, receive model, power accounting."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelMatrix:
    """One fading realization for K single-antenna users and L antennas.

    H has shape (K, L) and row k-1 holds the conjugated channel of user k,
    so user products are plain row products: h_k^H x == H[k-1] @ x.
    seed records where the draw came from (None for hand-built matrices).
    """

    H: np.ndarray
    seed: int | None = None

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def L(self) -> int:
        return self.H.shape[1]

    def row(self, k: int) -> np.ndarray:
        """Conjugated channel row of user k (1-based)."""
        return self.H[k - 1]


def channel_rows(H) -> np.ndarray:
    """Accept a ChannelMatrix or a bare (K, L) array of conjugated rows."""
    if isinstance(H, ChannelMatrix):
        return H.H
    return np.asarray(H)


def sample_channel(cfg, rng_seed: int) -> ChannelMatrix:
    """Draw i.i.d. unit-variance circularly-symmetric Gaussian entries.

    Deterministic given the seed (numpy PCG64 generator); depends on nothing
    in cfg except K and L. Per-trial seeds are derived as base_seed + trial
    index by the sweep driver.
    """
    rng = np.random.default_rng(rng_seed)
    H = (rng.standard_normal((cfg.K, cfg.L)) + 1j * rng.standard_normal((cfg.K, cfg.L)))
    return ChannelMatrix(H=H / np.sqrt(2.0), seed=rng_seed)


@dataclass(frozen=True)
class SignalBlock:
    """Space-time transmit block in stream-coefficient form.

    streams has shape (L, n_streams) with one column per independent
    unit-power symbol stream; the physical L x n block is streams @ psi where
    psi stacks the streams' codewords with unit per-use power. The average
    transmit power of the block is then ||streams||_F^2 / L regardless of the
    number of channel uses n.
    """

    streams: np.ndarray

    @property
    def L(self) -> int:
        return self.streams.shape[0]


def block_power(block) -> float:
    """Average transmit power per antenna per channel use.

    A bare (L, n) array is treated as realized samples: (1/(nL)) sum |X_ij|^2.
    A SignalBlock uses the unit-power-stream expectation, ||streams||_F^2 / L,
    which is the same constraint with the expectation taken over codewords.
    """
    if isinstance(block, SignalBlock):
        X = block.streams
        return float(np.sum(np.abs(X) ** 2) / X.shape[0])
    X = np.asarray(block)
    if X.size == 0:
        return 0.0
    return float(np.sum(np.abs(X) ** 2) / (X.shape[0] * X.shape[1]))


def received_signal(H, X, k: int, noise=None) -> np.ndarray:
    """Noise-free receive row of user k: h_k^H X, plus noise when given.

    X may be a samples array or a SignalBlock (then the result is the row of
    stream coefficients seen by user k). Verification runs keep noise=None.
    """
    rows = channel_rows(H)
    Xm = X.streams if isinstance(X, SignalBlock) else np.asarray(X)
    if rows.shape[1] != Xm.shape[0]:
        raise ValueError(f"antenna mismatch: channel has L={rows.shape[1]}, block has {Xm.shape[0]}")
    y = rows[k - 1] @ Xm
    if noise is not None:
        noise = np.asarray(noise)
        if noise.shape != y.shape:
            raise ValueError(f"noise shape {noise.shape} != signal shape {y.shape}")
        y = y + noise
    return y


def dump_channels_csv(channels, path) -> None:
    """Write realizations as rows (trial, user, antenna, re, im) for audits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "user", "antenna", "re", "im"])
        for trial, cm in enumerate(channels):
            rows = channel_rows(cm)
            for k in range(rows.shape[0]):
                for a in range(rows.shape[1]):
                    writer.writerow(
                        [trial, k + 1, a + 1, repr(float(rows[k, a].real)), repr(float(rows[k, a].imag))]
                    )
