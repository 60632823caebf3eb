import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rspd.errors import DomainError
from rspd.rotation import RotationPlan, compose, givens, sample_plan

angle = st.floats(0.0, 2 * math.pi, allow_nan=False)


def test_givens_entries():
    R = givens(3, 1, 3, math.pi / 2)
    expected = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    assert np.allclose(R, expected)
    assert np.allclose(givens(2, 1, 2, 0.0), np.eye(2))


@pytest.mark.parametrize("i,j", [(2, 1), (1, 1), (0, 2), (1, 4)])
def test_givens_bad_indices(i, j):
    with pytest.raises(DomainError):
        givens(3, i, j, 0.1)


@given(st.integers(2, 7), st.data())
def test_composition_is_rotation(p, data):
    k = p * (p - 1) // 2
    alphas = data.draw(st.lists(angle, min_size=k, max_size=k))
    R = compose(RotationPlan.from_angles(p, alphas))
    assert np.allclose(R @ R.T, np.eye(p), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)


@given(st.integers(2, 5), st.data())
def test_compose_equals_ordered_product(p, data):
    k = p * (p - 1) // 2
    plan = RotationPlan.from_angles(p, data.draw(st.lists(angle, min_size=k, max_size=k)))
    ref = np.eye(p)
    for i, j, a in plan.angles:
        ref = ref @ givens(p, i, j, a)
    assert np.allclose(compose(plan), ref, atol=1e-13)


def test_plan_validation():
    with pytest.raises(DomainError):
        RotationPlan(3, ((1, 2, 0.1), (2, 3, 0.2), (1, 3, 0.3)))
    with pytest.raises(DomainError):
        RotationPlan.from_angles(3, [0.1, 0.2])
    assert np.allclose(compose(RotationPlan.identity(4)), np.eye(4))


def test_sample_plan_is_seeded_and_in_range():
    a = sample_plan(5, np.random.default_rng(3))
    b = sample_plan(5, np.random.default_rng(3))
    assert a == b
    assert np.all((a.alphas >= 0) & (a.alphas < 2 * math.pi))
    assert len(a.angles) == 10
