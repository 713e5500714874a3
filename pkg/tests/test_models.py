import itertools
import json
import math

import numpy as np
import pytest

from ergolab.core import empirical_block_arrays, l1_distance_arrays
from ergolab.errors import AlphabetError, ModelError, NullConditioningError
from ergolab.models import (
    ONE,
    IIDModel,
    JointModel,
    MarkovModel,
    ProductModel,
    RotationModel,
    conditional_measure,
    cylinder_measure,
    dump_model,
    exact_entropy_rate,
    fixed_from_decimal,
    fixed_to_decimal,
    golden_conjugate,
    joint_cylinder_measure,
    load_model,
    pi_minus_3,
    sample,
    sqrt2_minus_1,
    symmetric_flip,
)

from conftest import FLIP_RATE

# Frozen oracles: golden conjugate g, [0, 1/2) intersected with [0, 1/2) - g is [1 - g, 1/2).
GOLDEN = (math.sqrt(5) - 1) / 2
ROT_00 = 0.5 - (1 - GOLDEN)


def _all_models():
    g = golden_conjugate()
    lumped = MarkovModel([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]], [0, 1, 1])
    return {
        "iid": IIDModel([0.2, 0.3, 0.5]),
        "markov": symmetric_flip(0.1),
        "lumped": lumped,
        "rotation": RotationModel.two_interval(g, 1 << 127),
        "rotation3": RotationModel(g, [0, ONE // 3, 2 * ONE // 3], [0, 1, 2]),
        "product": ProductModel(symmetric_flip(0.2), RotationModel.sturmian(sqrt2_minus_1())),
    }


class TestSample:
    def test_degenerate_iid(self):
        assert sample(IIDModel([1.0]), 5, 123).tolist() == [0] * 5

    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_deterministic(self, name):
        m = _all_models()[name]
        assert np.array_equal(m.sample(1000, 42), m.sample(1000, 42))
        assert not np.array_equal(m.sample(1000, 42), m.sample(1000, 43))

    def test_flip_frequencies(self, flip):
        x = flip.sample(10**6, 7)
        assert abs(x.mean() - 0.5) < 0.01

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_block_statistics(self, name):
        m = _all_models()[name]
        x = m.sample(10**6, 2024)
        for N in (1, 4, 8):
            words, probs = m.blocks(N)
            dist = l1_distance_arrays(words, probs, *empirical_block_arrays(x, N))
            # r**N cells generalize the binary 2**N of the multinomial error scale
            assert dist <= 3 * math.sqrt(m.alphabet_size**N / 10**6), (N, dist)


class TestCylinder:
    def test_rotation_single(self, golden_half):
        assert cylinder_measure(golden_half, "0") == 0.5

    def test_rotation_pair(self, golden_half):
        assert cylinder_measure(golden_half, "00") == pytest.approx(ROT_00, abs=1e-15)
        assert cylinder_measure(golden_half, "00") == pytest.approx(0.118034, abs=1e-6)

    def test_markov_pair(self, flip):
        assert cylinder_measure(flip, "01") == pytest.approx(0.05, abs=1e-15)

    def test_symbol_outside_alphabet(self, flip):
        with pytest.raises(AlphabetError):
            cylinder_measure(flip, "02")

    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_consistency_and_stationarity(self, name):
        m = _all_models()[name]
        r = m.alphabet_size
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(1, 13))
            u = rng.integers(0, r, n)
            mu = m.cylinder_measure(u)
            right = sum(m.cylinder_measure(np.append(u, a)) for a in range(r))
            left = sum(m.cylinder_measure(np.insert(u, 0, a)) for a in range(r))
            assert right == pytest.approx(mu, abs=1e-9)
            assert left == pytest.approx(mu, abs=1e-9)

    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_blocks_match_cylinders(self, name):
        m = _all_models()[name]
        words, probs = m.blocks(5)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        for w, p in list(zip(words, probs))[:: max(1, len(probs) // 20)]:
            assert m.cylinder_measure(w) == pytest.approx(p, abs=1e-12)

    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_prefix_measures_match(self, name):
        m = _all_models()[name]
        x = m.sample(200, 9)
        logs = m.log2_prefix_measures(x)
        for n in (1, 7, 50, 200):
            assert logs[n - 1] == pytest.approx(math.log2(m.cylinder_measure(x[:n])), abs=1e-8)


class TestRotation:
    @pytest.mark.parametrize("alpha", [golden_conjugate, sqrt2_minus_1, pi_minus_3])
    def test_sturmian_complexity(self, alpha):
        m = RotationModel.sturmian(alpha())
        for n in range(1, 65):
            words, probs = m.blocks(n)
            assert len(words) == n + 1
            assert np.all(probs > 0)

    def test_half_cut_complexity(self, golden_half):
        # a cut away from 1 - alpha doubles the count: its preimages add n more points
        assert [len(golden_half.blocks(n)[0]) for n in (4, 8, 16)] == [8, 16, 32]

    def test_rational_guard(self):
        with pytest.raises(ModelError):
            RotationModel(ONE // 2, [0, ONE // 3])
        with pytest.raises(ModelError):
            RotationModel(fixed_from_decimal("0.142857142857142857142857142857142857"), [0, ONE // 2])

    def test_breakpoints_strictly_increasing(self):
        with pytest.raises(ModelError):
            RotationModel(golden_conjugate(), [0, ONE // 2, ONE // 3])

    def test_fixed_point_text(self):
        x = golden_conjugate()
        assert fixed_from_decimal(fixed_to_decimal(x)) == x
        assert fixed_to_decimal(x).startswith("0.6180339887498948482045868343656381177")


class TestJoint:
    def test_identical_labelings(self):
        j = JointModel(symmetric_flip(0.2), [0, 1], [0, 1])
        for u in ("0", "011", "10101"):
            assert conditional_measure(j, u, u) == pytest.approx(1.0, abs=1e-12)

    def test_two_fair_bits(self, two_bits):
        for u in itertools.product((0, 1), repeat=3):
            for v in itertools.product((0, 1), repeat=3):
                assert joint_cylinder_measure(two_bits, u, v) == pytest.approx(2**-6, abs=1e-15)

    def test_incompatible_pair(self):
        j = JointModel(symmetric_flip(0.2), [0, 1], [0, 1])
        assert conditional_measure(j, "01", "00") == 0.0

    def test_null_conditioning(self, pair_chain):
        lumped = JointModel(MarkovModel([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]]), [0, 1, 2], [0, 0, 0])
        with pytest.raises(NullConditioningError):
            conditional_measure(lumped, "02", "00")

    def test_conditionals_sum_to_one(self, three_state):
        words_u, words_v, probs = three_state.joint_blocks(5)
        for u in {tuple(w) for w in words_u[:40].tolist()}:
            total = sum(
                conditional_measure(three_state, u, v)
                for v in itertools.product(range(three_state.r_q), repeat=5)
            )
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_joint_blocks_ordering(self, three_state):
        words_u, words_v, probs = three_state.joint_blocks(4)
        keys = [tuple(u) + tuple(v) for u, v in zip(words_u.tolist(), words_v.tolist())]
        assert keys == sorted(keys)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_product_joint_sample(self):
        prod = ProductModel(symmetric_flip(0.1), RotationModel.sturmian(golden_conjugate()))
        j = JointModel(prod, [0, 0, 1, 1], [0, 1, 2, 3])
        p, q = j.sample(100, 3)
        assert np.array_equal(p, q // 2)


class TestRates:
    def test_iid_uniform(self, fair):
        assert exact_entropy_rate(fair) == 1.0

    def test_flip(self, flip):
        assert exact_entropy_rate(flip) == pytest.approx(FLIP_RATE, abs=1e-12)
        assert exact_entropy_rate(flip) == pytest.approx(0.468996, abs=1e-6)

    def test_rotation(self, golden_half):
        assert exact_entropy_rate(golden_half) == 0.0

    def test_lumped_not_available(self):
        assert exact_entropy_rate(MarkovModel([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]], [0, 1, 1])) is None


class TestValidation:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ModelError):
            MarkovModel([[0.5, 0.4], [0.5, 0.5]])

    def test_periodic_chain(self):
        with pytest.raises(ModelError):
            MarkovModel([[0, 1], [1, 0]])

    def test_iid_weights(self):
        with pytest.raises(ModelError):
            IIDModel([0.5, 0.6])


class TestFiles:
    @pytest.mark.parametrize("name", sorted(_all_models()))
    def test_round_trip(self, name):
        m = _all_models()[name]
        back = load_model(dump_model(m))
        x = m.sample(300, 1)
        assert np.array_equal(back.sample(300, 1), x)
        assert back.cylinder_measure(x[:10]) == m.cylinder_measure(x[:10])

    def test_joint_round_trip(self, pair_chain):
        back = load_model(json.loads(dump_model(pair_chain)))
        p, q = back.sample(50, 4)
        p0, q0 = pair_chain.sample(50, 4)
        assert np.array_equal(p, p0) and np.array_equal(q, q0)

    def test_shipped_models_load(self):
        from pathlib import Path
        root = Path(__file__).resolve().parents[1] / "configs" / "models"
        files = sorted(root.glob("*.json"))
        assert files
        for f in files:
            load_model(f)

    def test_unknown_kind(self):
        with pytest.raises(ModelError):
            load_model({"kind": "cutting-and-stacking"})

    def test_states_mismatch(self):
        with pytest.raises(ModelError):
            load_model({"kind": "markov", "states": 3, "transition": [["0.5", "0.5"], ["0.5", "0.5"]]})
