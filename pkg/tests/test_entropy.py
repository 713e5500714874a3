import math

import numpy as np
import pytest

from ergolab.entropy import (
    block_entropy,
    coverage_growth,
    entropy_report,
    partition_entropy,
    relative_smb_set,
    smb_trajectory,
)
from ergolab.errors import ImpossiblePathError, InternalConsistencyError, ValidationError
from ergolab.models import IIDModel, JointModel, MarkovModel, ProductModel, RotationModel, golden_conjugate
from ergolab.seeds import mix64

from conftest import FLIP_RATE


class TestPartitionEntropy:
    def test_uniform_four(self):
        assert partition_entropy([0.25] * 4) == 2.0

    def test_zero_log_zero(self):
        assert partition_entropy([1.0, 0.0]) == 0.0

    def test_biased_coin(self):
        assert partition_entropy([0.9, 0.1]) == pytest.approx(FLIP_RATE, abs=1e-15)

    def test_rejects_bad_vectors(self):
        with pytest.raises(ValidationError):
            partition_entropy([0.5, -0.1, 0.6])
        with pytest.raises(ValidationError):
            partition_entropy([0.5, 0.4])

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = rng.dirichlet(np.ones(int(rng.integers(1, 9))))
            assert 0.0 <= partition_entropy(p) <= math.log2(p.size) + 1e-12


class TestBlockEntropy:
    def test_iid_product(self, fair):
        assert block_entropy(fair, 5) == pytest.approx(5.0, abs=1e-12)

    def test_sturmian_nine_blocks(self, golden_sturmian):
        assert block_entropy(golden_sturmian, 8) <= math.log2(9) + 1e-12

    def test_markov_conditional_is_exact(self, flip):
        rep = entropy_report(flip, 4)
        assert rep.rate_conditional == pytest.approx(FLIP_RATE, abs=1e-6)
        for d in rep.conditional_entropies()[1:]:
            assert d == pytest.approx(FLIP_RATE, abs=1e-12)

    @pytest.mark.parametrize("which", ["flip", "lumped", "sturmian", "half", "product"])
    def test_monotonicity_and_sandwich(self, which, flip, golden_sturmian, golden_half):
        lumped = MarkovModel([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]], [0, 1, 1])
        model = {
            "flip": flip, "lumped": lumped, "sturmian": golden_sturmian, "half": golden_half,
            "product": ProductModel(flip, golden_sturmian),
        }[which]
        rep = entropy_report(model, 10)
        H = rep.block_entropies
        delta = rep.conditional_entropies()
        for i in range(1, len(H)):
            assert H[i] >= H[i - 1] - 1e-9
            assert H[i] / (i + 1) <= H[i - 1] / i + 1e-9
            assert delta[i] <= delta[i - 1] + 1e-9
        for a in range(1, 6):
            for b in range(1, 11 - a):
                assert H[a + b - 1] <= H[a - 1] + H[b - 1] + 1e-9
        rate = model.entropy_rate()
        if rate is not None:
            assert rep.rate_upper >= rep.rate_conditional >= rate - 1e-6


class TestSmb:
    def test_iid_constant(self, fair):
        x = fair.sample(500, 1)
        np.testing.assert_allclose(smb_trajectory(fair, x).values, 1.0, atol=1e-12)

    def test_markov_final(self, flip):
        tr = smb_trajectory(flip, flip.sample(10**4, 3))
        assert abs(tr.final - FLIP_RATE) < 0.02

    def test_rotation_arc_bound(self, golden_sturmian):
        n = 10**4
        tr = smb_trajectory(golden_sturmian, golden_sturmian.sample(n, 5))
        # single arcs can be shorter than 1/(n+1); the three-gap theorem keeps them above 1/(4(n+1))
        assert tr.final <= (math.log2(n + 1) + 2) / n
        assert np.all(np.isfinite(tr.values))

    def test_impossible_path(self, flip):
        blocked = MarkovModel([[0.5, 0.5], [1.0, 0.0]])
        with pytest.raises(ImpossiblePathError):
            smb_trajectory(blocked, [1, 1, 0])

    def test_incremental_matches_direct(self, flip):
        x = flip.sample(64, 8)
        tr = smb_trajectory(flip, x)
        for n in (1, 10, 64):
            assert tr.values[n - 1] == pytest.approx(-math.log2(flip.cylinder_measure(x[:n])) / n, abs=1e-10)

    def test_convergence_in_probability(self, flip):
        finals = [smb_trajectory(flip, flip.sample(10**4, mix64(99, t))).final for t in range(50)]
        assert sum(abs(f - FLIP_RATE) <= 0.05 for f in finals) >= 48


class TestRelativeSmb:
    def test_constant_process(self):
        const = JointModel(IIDModel([1.0]), [0], [0])
        for n in (1, 4):
            rs = relative_smb_set(const, n, 0.1)
            assert rs.pairs == {((0,) * n, (0,) * n)}
            assert rs.coverage == 1.0

    def test_diagonal_fair(self, fair):
        rs = relative_smb_set(JointModel(fair, [0, 1], [0, 1]), 5, 0.1)
        assert len(rs) == 32
        assert all(u == v for u, v in rs.pairs)
        assert rs.distinct_u == 32 < 2**5.5

    def test_two_fair_bits(self, two_bits):
        rs = relative_smb_set(two_bits, 4, 0.2)
        assert len(rs) == 256
        assert rs.s == pytest.approx(1.0, abs=1e-12)
        assert rs.t == pytest.approx(2.0, abs=1e-12)
        assert rs.distinct_u == 16 < 2**4.8
        assert rs.max_v_per_u == 16 < 2**4.8
        assert rs.coverage == pytest.approx(1.0, abs=1e-12)

    def test_members_meet_thresholds(self, three_state):
        for n in (2, 5, 8):
            rs = relative_smb_set(three_state, n, 0.3)
            assert np.all(rs.marginal > 2.0 ** (-(rs.s + rs.epsilon) * n))
            assert np.all(rs.joint / rs.marginal > 2.0 ** (-(rs.t - rs.s + rs.epsilon) * n))
            rs.check_bounds()

    def test_groups_sorted(self, three_state):
        rs = relative_smb_set(three_state, 6, 0.3)
        for vs in rs.groups().values():
            assert vs == sorted(vs)

    def test_bound_violation_detected(self, two_bits):
        rs = relative_smb_set(two_bits, 4, 0.2)
        tight = type(rs)(rs.n, 0.0, rs.s, rs.t, rs.u_words, rs.v_words, rs.joint, rs.marginal, rs.coverage)
        with pytest.raises(InternalConsistencyError):
            tight.check_bounds()

    def test_needs_joint_model(self, flip):
        with pytest.raises(ValidationError):
            relative_smb_set(flip, 3, 0.1)


class TestCoverage:
    def test_diagonal_full(self, fair):
        assert coverage_growth(JointModel(fair, [0, 1], [0, 1]), 0.1, [2, 4, 6]) == pytest.approx([1, 1, 1])

    def test_flip_identity_trend(self, flip):
        cov = coverage_growth(JointModel(flip, [0, 1], [0, 1]), 0.3, [4, 8, 12])
        assert cov[-1] > cov[0]
        assert all(0 < c <= 1 for c in cov)

    def test_huge_epsilon(self, three_state):
        assert coverage_growth(three_state, 2.0, [1]) == [pytest.approx(1.0)]
