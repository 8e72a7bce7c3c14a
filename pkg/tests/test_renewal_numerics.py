import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regeninc.cycle_models import LinearToEta, ParetoCounterexample, UniformCount
from regeninc.errors import DomainError, PreconditionError, ValidationError
from regeninc.renewal_numerics import (
    TailFunction,
    duration_table,
    key_renewal_convolution,
    key_renewal_limit,
    renewal_function_arithmetic,
    renewal_function_numeric,
    size_biased_tail,
)
from regeninc.streams import Streams

# U(t - 1) for Pareto(1.5) durations at t = 8, 16, ..., 256, from a first-order
# right-endpoint scheme with Richardson extrapolation at h = 1e-3 / 5e-4.
PARETO_U = {7: 3.841154, 15: 7.042781, 31: 13.122454, 63: 24.837513, 127: 47.648535, 255: 92.401478}


def enumerate_U(pmf, m):
    """sum over n of P(T_n <= m) by listing every step sequence."""
    total = 1.0
    kmin = min(pmf)
    for n in range(1, m // kmin + 1):
        for seq in itertools.product(pmf, repeat=n):
            if sum(seq) <= m:
                total += math.prod(pmf[k] for k in seq)
    return total


def test_unit_lattice_is_m_plus_one():
    U = renewal_function_arithmetic({1: 1.0}, 1.0, 200)
    np.testing.assert_allclose(U.values, np.arange(201) + 1.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize(
    "pmf", [{1: 0.5, 2: 0.5}, {1: 0.2, 3: 0.8}, {2: 0.25, 3: 0.25, 5: 0.5}]
)
def test_arithmetic_matches_path_enumeration(pmf):
    U = renewal_function_arithmetic(pmf, 1.0, 8)
    for m in range(9):
        assert U.values[m] == pytest.approx(enumerate_U(pmf, m), abs=1e-12)


def test_coin_value():
    U = renewal_function_arithmetic({1: 0.5, 2: 0.5}, 1.0, 3)
    assert abs(U.values[3] - 2.875) <= 1e-12
    # right-continuous steps between lattice points
    assert U(2.5) == U.values[2]


def test_arithmetic_validation():
    with pytest.raises(ValidationError):
        renewal_function_arithmetic({1: 0.5, 2: 0.4}, 1.0, 3)
    with pytest.raises(ValidationError):
        renewal_function_arithmetic({0: 1.0}, 1.0, 3)
    with pytest.raises(ValidationError):
        renewal_function_arithmetic({1: 1.0}, 0.0, 3)


def exp_cdf(t):
    return 1.0 - np.exp(-np.asarray(t))


def test_exponential_solver_accuracy():
    U = renewal_function_numeric(exp_cdf, 1e-3, 50.0)
    assert np.max(np.abs(U.values - (1.0 + U.grid))) <= 1e-3


def test_uniform_solver_closed_form():
    # on [0, 2] the uniform(0, 2] renewal function is exp(t/2)
    U = renewal_function_numeric(UniformCount().cdf, 0.01, 2.0)
    np.testing.assert_allclose(U.values, np.exp(U.grid / 2), rtol=2e-5)


def test_error_quarters_when_h_halves():
    errs = []
    for h in (0.04, 0.02, 0.01):
        U = renewal_function_numeric(exp_cdf, h, 10.0)
        errs.append(np.max(np.abs(U.values - (1.0 + U.grid))))
    for coarse, fine in zip(errs, errs[1:]):
        assert fine / coarse == pytest.approx(0.25, rel=0.2)


def test_pareto_renewal_function_matches_independent_scheme():
    U = renewal_function_numeric(ParetoCounterexample().cdf, 0.01, 255.0)
    for t, ref in PARETO_U.items():
        assert U(t) == pytest.approx(ref, rel=1e-5)


def test_solver_validation():
    with pytest.raises(ValidationError):
        renewal_function_numeric(exp_cdf, 1.0, 5.0)
    with pytest.raises(ValidationError):
        renewal_function_numeric(lambda t: 1 - np.exp(-np.asarray(t)) + 0.1, 0.1, 5.0)
    with pytest.raises(DomainError):
        renewal_function_numeric(exp_cdf, 0.1, 5.0)(6.0)


@given(st.floats(0.5, 5.0))
@settings(max_examples=20, deadline=None)
def test_renewal_function_is_nondecreasing_and_starts_at_one(width):
    U = renewal_function_numeric(UniformCount(width).cdf, width / 50, 4 * width)
    assert U.values[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(U.values) >= -1e-12)


def test_key_renewal_convolution_approaches_limit():
    # Exp(1) durations, h(s) = exp(-2s): U*h(t) = exp(-2t) + (1 - exp(-2t))/2, limit 1/2
    h = TailFunction(lambda s: np.exp(-2 * s), monotone=True)
    assert key_renewal_limit(h, 1.0) == pytest.approx(0.5, rel=1e-9)
    U = renewal_function_numeric(exp_cdf, 1e-3, 20.0)
    exact = lambda t: math.exp(-2 * t) + (1 - math.exp(-2 * t)) / 2
    for t in (0.5, 2.0, 20.0):
        assert key_renewal_convolution(U, h, t) == pytest.approx(exact(t), abs=2e-3)


def test_key_renewal_limit_needs_certificate():
    with pytest.raises(PreconditionError):
        key_renewal_limit(TailFunction(lambda s: np.exp(-s)), 1.0)
    with pytest.raises(PreconditionError):
        key_renewal_limit(lambda s: np.exp(-s), 1.0)


def test_key_renewal_limit_with_breakpoints():
    h = TailFunction(lambda s: np.where(s < 1, 1.0, 0.0), monotone=True, breakpoints=(1.0,))
    assert key_renewal_limit(h, 2.0) == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.0])
def test_size_biased_tail_exponential(c):
    # Y = xi ~ Exp(1): E[xi 1{xi > c}] = (1 + c) exp(-c)
    est = size_biased_tail(LinearToEta(1.0, 0.0), 1.0, c, 200_000, Streams(12).generator())
    assert abs(est.value - (1 + c) * math.exp(-c)) <= 4 * est.se


def test_duration_table_dispatch():
    from regeninc.cycle_models import ArithmeticCount, DeterministicDrift

    assert duration_table(ArithmeticCount([1.0]), 10).mode == "arithmetic-exact"
    assert duration_table(DeterministicDrift(2.0), 10)(6.0) == 4.0
    assert duration_table(UniformCount(), 10).mode == "discretized"


@st.composite
def three_point_pmfs(draw):
    ks = draw(st.lists(st.integers(1, 4), min_size=3, max_size=3, unique=True))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3)))
    w = w / w.sum()
    return dict(zip(ks, w.tolist()))


@given(three_point_pmfs())
@settings(max_examples=30, deadline=None)
def test_recursion_matches_enumeration_for_three_point_pmfs(pmf):
    U = renewal_function_arithmetic(pmf, 1.0, 6)
    for m in range(7):
        assert U.values[m] == pytest.approx(enumerate_U(pmf, m), abs=1e-12)


def test_uniform_renewal_function_offset():
    # U(t) - t -> E[xi^2] / (2 mu^2) = 2/3 for xi ~ U(0, 2]
    U = renewal_function_numeric(UniformCount().cdf, 0.01, 50.0)
    assert U(50.0) - 50.0 == pytest.approx(2 / 3, abs=1e-4)
