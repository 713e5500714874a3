import math

import numpy as np
import pytest

from ergolab.core import empirical_block_arrays, l1_distance_arrays
from ergolab.errors import UnsupportedNameError, ValidationError
from ergolab.models import JointModel, ProductModel, RotationModel, golden_conjugate, symmetric_flip
from ergolab.towers import extract_columns, rohlin_tower
from ergolab.transplant import (
    IdentityConditional,
    JointConditional,
    ProductConditional,
    TableConditional,
    TransplantParams,
    transplant_blocks,
)


def test_identity_transplant(flip):
    y = flip.sample(5000, 1)
    res = transplant_blocks(y, rohlin_tower(5000, 64, 0.05), IdentityConditional(), 9)
    assert np.array_equal(res.output, y)
    assert res.fallbacks == ()


def test_leftover_untouched(flip):
    y = flip.sample(1000, 2)
    cond = JointConditional(JointModel(flip, [0, 1], [1, 0]), 8)
    deco = rohlin_tower(1000, 8, 0.1)
    deco = type(deco)(1000, deco.towers[:100], np.arange(800, 1000))
    res = transplant_blocks(y, deco, cond, 3)
    assert np.array_equal(res.output[800:], y[800:])
    # the joint swaps symbols, so every tower is the complement of its Y-name
    assert np.array_equal(res.output[:800], 1 - y[:800])


def test_product_block_statistics():
    x_model = ProductModel(symmetric_flip(0.1), RotationModel.sturmian(golden_conjugate()))
    n, L, N = 1 << 17, 512, 4
    y = x_model.left.sample(n, 11)
    deco = rohlin_tower(n, L, 0.05)
    res = transplant_blocks(y, deco, ProductConditional(x_model, L), 12)
    words, probs = empirical_block_arrays(res.output, N)
    dist = l1_distance_arrays(words, probs, *x_model.blocks(N))
    windows = n - N + 1
    assert dist <= 0.05 + 3 * math.sqrt(4**N / windows)
    # the Y coordinate is never changed on towers
    assert np.array_equal(res.output // 2, y)


def test_seeds_change_draws_not_frequencies():
    joint = JointModel(symmetric_flip(0.3), [0, 0], [0, 1])  # P constant, Q the chain
    y = np.zeros(1 << 15, dtype=np.uint8)
    deco = rohlin_tower(y.size, 4, 0.05)
    cond = JointConditional(joint, 4)
    a = transplant_blocks(y, deco, cond, 1).output
    b = transplant_blocks(y, deco, cond, 2).output
    assert not np.array_equal(a, b)
    names, probs = cond.distribution((0, 0, 0, 0))
    towers = len(deco.towers)
    for out in (a, b):
        cols = extract_columns(deco, out)
        freq = {c.name_p: c.count / towers for c in cols}
        for v, p in zip(names.tolist(), probs):
            # multinomial error of a single cell is at most sqrt(p(1-p)/towers)
            assert abs(freq.get(tuple(v), 0.0) - p) <= 5 * math.sqrt(p * (1 - p) / towers) + 1e-12


def test_missing_name_without_fallback():
    cond = TableConditional({(0, 0): ([[1, 1]], [1.0])})
    deco = rohlin_tower(4, 2, 0.5)
    with pytest.raises(UnsupportedNameError):
        transplant_blocks([0, 0, 0, 1], deco, cond, 0, fallback=False)


def test_nearest_name_fallback():
    cond = TableConditional({(0, 0): ([[1, 1]], [1.0]), (1, 1): ([[0, 0]], [1.0])})
    deco = rohlin_tower(4, 2, 0.5)
    res = transplant_blocks([0, 0, 1, 0], deco, cond, 0)
    assert res.output.tolist() == [1, 1, 1, 1]
    assert res.fallbacks == (((1, 0), (0, 0)),)


def test_table_must_be_distribution():
    with pytest.raises(ValidationError):
        TableConditional({(0,): ([[0], [1]], [0.5, 0.6])})


class TestParams:
    def test_height_condition(self):
        p = TransplantParams(N=6, delta=0.05, L=4096, beta=16 * 6 / 4096)
        assert p.boundary_error == pytest.approx(12 / 4096)
        with pytest.raises(ValidationError):
            TransplantParams(N=6, delta=0.05, L=40, beta=0.5)

    def test_delta_range(self):
        with pytest.raises(ValidationError):
            TransplantParams(N=2, delta=0.2, L=4096, beta=0.1, epsilon=0.3)
        TransplantParams(N=2, delta=0.1, L=4096, beta=0.1, epsilon=0.3)
