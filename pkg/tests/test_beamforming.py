import numpy as np
import pytest

from cc_miso.beamforming import (
    DegenerateChannelError,
    beams_for_subset,
    maxmin_beamformer,
    maxmin_value_monotonicity_check,
    zero_forcing_bfv,
)
from cc_miso.channel import ChannelMatrix, sample_channel
from cc_miso.combinatorics import SystemConfig

EXAMPLE = SystemConfig(K=3, L=2, N=3, M=1)


def _h_perp_2d(row):
    """Independent L=2 orthogonal direction: row is h^H, solve row @ u = 0."""
    a, b = row
    return np.array([-b, a]) / np.hypot(abs(a), abs(b))


class TestZeroForcing:
    def test_example1_beam_is_h3_perp(self):
        cm = sample_channel(EXAMPLE, 11)
        bv = zero_forcing_bfv(cm, (1, 2, 3), (1, 2))
        ref = _h_perp_2d(cm.H[2])
        # same direction up to phase
        assert abs(abs(np.vdot(ref, bv.u)) - 1.0) < 1e-12
        assert abs(cm.H[2] @ bv.u) < 1e-12
        assert bv.nulled == (3,)

    def test_properties_1000_instances(self):
        rng = np.random.default_rng(77)
        for trial in range(1000):
            K, L = (4, 2) if trial % 2 == 0 else (5, 3)
            H = (rng.standard_normal((K, L)) + 1j * rng.standard_normal((K, L))) / np.sqrt(2)
            S = tuple(sorted(rng.choice(np.arange(1, K + 1), size=L + 1, replace=False).tolist()))
            T = S[:2]
            bv = zero_forcing_bfv(H, S, T)
            assert abs(np.linalg.norm(bv.u) - 1.0) < 1e-10
            for j in bv.nulled:
                assert abs(H[j - 1] @ bv.u) <= 1e-9 * np.linalg.norm(H[j - 1])

    def test_deterministic_and_phase_convention(self):
        cm = sample_channel(EXAMPLE, 2)
        a = zero_forcing_bfv(cm, (1, 2, 3), (2, 3))
        b = zero_forcing_bfv(cm, (1, 2, 3), (2, 3))
        assert (a.u == b.u).all()
        first = a.u[np.argmax(np.abs(a.u) > 1e-8)]
        assert abs(first.imag) < 1e-12 and first.real > 0

    def test_l3_matches_gram_schmidt_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            H = (rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))) / np.sqrt(2)
            S, T = (1, 2, 3, 4), (1, 4)
            bv = zero_forcing_bfv(H, S, T)
            # Gram-Schmidt on the nulled users' channel vectors h_j = conj(row)
            basis = []
            for j in (2, 3):
                h = H[j - 1].conj()
                for e in basis:
                    h = h - e * np.vdot(e, h)
                basis.append(h / np.linalg.norm(h))
            probe = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            for e in basis:
                probe = probe - e * np.vdot(e, probe)
            u_gs = probe / np.linalg.norm(probe)
            assert abs(abs(np.vdot(u_gs, bv.u)) - 1.0) < 1e-9

    def test_degenerate_rejected(self):
        H = np.ones((4, 3), dtype=complex)  # collinear rows
        with pytest.raises(DegenerateChannelError, match="rank deficient"):
            zero_forcing_bfv(H, (1, 2, 3, 4), (1, 4))

    def test_preconditions(self):
        cm = sample_channel(EXAMPLE, 3)
        with pytest.raises(ValueError, match="subset"):
            zero_forcing_bfv(cm, (1, 2), (1, 3))
        with pytest.raises(ValueError, match="L-1"):
            zero_forcing_bfv(cm, (1, 2, 3), (1,))

    def test_l1_trivial_beam(self):
        cfg = SystemConfig(K=3, L=1, N=3, M=1)
        cm = sample_channel(cfg, 0)
        bv = zero_forcing_bfv(cm, (1, 2), (1, 2))
        assert bv.u.shape == (1,) and abs(bv.u[0] - 1.0) < 1e-15

    def test_beams_for_subset(self):
        cm = sample_channel(EXAMPLE, 4)
        beams = beams_for_subset(cm, (1, 2, 3), 2)
        assert set(beams) == {(1, 2), (1, 3), (2, 3)}


class TestMaxMin:
    def test_single_user_matched_filter(self):
        cm = sample_channel(EXAMPLE, 6)
        for method in ("sdr", "grid"):
            bv, value = maxmin_beamformer(cm, (2,), method=method)
            assert abs(value - np.linalg.norm(cm.H[1])) < 1e-12
            assert abs(abs(np.vdot(cm.H[1].conj(), bv.u)) - np.linalg.norm(cm.H[1])) < 1e-12

    def test_orthonormal_pair_equal_split(self):
        # two orthonormal channels: best min-gain is 1/sqrt(2)
        H = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
        _, v_grid = maxmin_beamformer(H, (1, 2), method="grid", resolution=1e-3)
        _, v_sdr = maxmin_beamformer(H, (1, 2), method="sdr")
        assert abs(v_grid - 1 / np.sqrt(2)) < 2e-3
        assert v_sdr >= 0.995 / np.sqrt(2)
        assert v_sdr <= 1 / np.sqrt(2) + 1e-9

    @pytest.mark.parametrize("method", ["sdr", "grid"])
    def test_value_recomputed_from_beam(self, method):
        for seed in range(5):
            cm = sample_channel(EXAMPLE, 100 + seed)
            bv, value = maxmin_beamformer(cm, (1, 2, 3), method=method)
            rows = cm.H[[0, 1, 2]]
            assert abs(np.linalg.norm(bv.u) - 1.0) < 1e-10
            assert abs(value - float(np.min(np.abs(rows @ bv.u)))) < 1e-12

    def test_sdr_close_to_grid_oracle(self):
        for seed in range(20):
            cm = sample_channel(EXAMPLE, 500 + seed)
            S = (1, 2) if seed % 2 == 0 else (1, 2, 3)
            _, gv = maxmin_beamformer(cm, S, method="grid", resolution=2e-3)
            _, sv = maxmin_beamformer(cm, S, method="sdr")
            assert sv >= 0.95 * gv

    def test_sdr_deterministic(self):
        cm = sample_channel(EXAMPLE, 8)
        a = maxmin_beamformer(cm, (1, 2, 3), method="sdr")
        b = maxmin_beamformer(cm, (1, 2, 3), method="sdr")
        assert a[1] == b[1]
        assert (a[0].u == b[0].u).all()

    def test_grid_requires_l2(self):
        cfg = SystemConfig(K=4, L=3, N=4, M=1)
        cm = sample_channel(cfg, 0)
        with pytest.raises(ValueError, match="L = 2"):
            maxmin_beamformer(cm, (1, 2), method="grid")

    def test_bad_method_and_empty_group(self):
        cm = sample_channel(EXAMPLE, 0)
        with pytest.raises(ValueError, match="unknown method"):
            maxmin_beamformer(cm, (1, 2), method="magic")
        with pytest.raises(ValueError, match="nonempty"):
            maxmin_beamformer(cm, (), method="sdr")


class TestMonotonicity:
    def test_nested_chain(self):
        cm = sample_channel(EXAMPLE, 13)
        assert maxmin_value_monotonicity_check(cm, (1,), (1, 2), method="grid")
        assert maxmin_value_monotonicity_check(cm, (1, 2), (1, 2, 3), method="grid")
        assert maxmin_value_monotonicity_check(cm, (1,), (1, 2, 3), method="grid")

    def test_oracle_property_100_instances(self):
        for seed in range(100):
            cm = sample_channel(EXAMPLE, 2000 + seed)
            assert maxmin_value_monotonicity_check(
                cm, (1, 2), (1, 2, 3), method="grid", tol=1e-9
            )

    def test_not_a_subset(self):
        cm = sample_channel(EXAMPLE, 0)
        with pytest.raises(ValueError, match="subset"):
            maxmin_value_monotonicity_check(cm, (1, 3), (1, 2))
