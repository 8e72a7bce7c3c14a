import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regeninc.cycle_models import (
    LINEAR,
    REGISTRY,
    STEP,
    ArithmeticCount,
    CycleBatch,
    CyclePath,
    CycleSample,
    HeavySpike,
    ParetoCounterexample,
    PoissonCount,
    center_model,
    make_model,
    path_integral,
    path_lattice_sum,
    path_sup_abs,
    path_sup_abs_open,
    path_value,
)
from regeninc.errors import DomainError, ValidationError
from regeninc.streams import Streams


def spike_cycle():
    # up to 3 on [1, 2), back to 0 at 2, then -1 at xi = 4
    return CycleSample(4.0, CyclePath((0, 1, 2, 4), (0, 3, 0, -1), STEP))


def test_step_path_values_are_right_continuous():
    c = spike_cycle()
    assert path_value(c, 0.0) == 0
    assert path_value(c, 0.999) == 0
    assert path_value(c, 1.0) == 3
    assert path_value(c, 2.0) == 0
    assert path_value(c, 4.0) == -1


def test_linear_path_interpolates_and_holds():
    c = CycleSample(3.0, CyclePath((0, 1, 2), (0, 2, -2), LINEAR))
    assert path_value(c, 0.5) == pytest.approx(1.0)
    assert path_value(c, 1.5) == pytest.approx(0.0)
    assert path_value(c, 3.0) == -2


def test_value_outside_cycle_is_domain_error():
    with pytest.raises(DomainError):
        path_value(spike_cycle(), 4.5)
    with pytest.raises(DomainError):
        path_value(spike_cycle(), -0.1)


def test_sup_closed_and_half_open():
    c = spike_cycle()
    assert path_sup_abs(c) == 3
    assert path_sup_abs_open(c) == 3
    # the end jump only counts for the closed supremum
    c2 = CycleSample(2.0, CyclePath((0, 2), (0, 5), STEP))
    assert path_sup_abs(c2) == 5
    assert path_sup_abs_open(c2) == 0


def test_integral_closed_forms():
    assert path_integral(spike_cycle()) == pytest.approx(3.0 * 1 + 0 * 2)
    tri = CycleSample(2.0, CyclePath((0, 1, 2), (0, 1, 0), LINEAR))
    assert path_integral(tri) == pytest.approx(1.0)
    ramp = CycleSample(2.0, CyclePath((0, 2), (0, 0), LINEAR, drift=1.5))
    assert path_integral(ramp) == pytest.approx(1.5 * 2.0**2 / 2)


def test_lattice_sum_excludes_endpoint():
    c = spike_cycle()
    # Z(1) + Z(2) + Z(3) with span 1
    assert path_lattice_sum(c, 1.0) == pytest.approx(3.0)


def test_invalid_paths_rejected():
    with pytest.raises(ValidationError):
        CyclePath((0, 1), (1, 2))
    with pytest.raises(ValidationError):
        CyclePath((0, 2, 1), (0, 1, 2))
    with pytest.raises(ValidationError):
        CyclePath((0, 1), (0, 1), "spline")
    with pytest.raises(ValidationError):
        CycleSample(0.0, CyclePath((0,), (0,)))
    with pytest.raises(ValidationError):
        CycleSample(1.0, CyclePath((0, 2), (0, 1)))


breakpoints = st.lists(
    st.tuples(st.floats(0.01, 5.0), st.floats(-10, 10)), min_size=1, max_size=6
)


@st.composite
def cycles(draw):
    pts = draw(breakpoints)
    gaps = np.cumsum([g for g, _ in pts])
    times = (0.0, *gaps[:-1].tolist()) if len(pts) > 1 else (0.0,)
    values = (0.0, *[v for _, v in pts][1:]) if len(pts) > 1 else (0.0,)
    xi = float(gaps[-1]) + draw(st.floats(0.0, 2.0))
    if times[-1] >= xi:
        xi = times[-1] + 0.5
    mode = draw(st.sampled_from([STEP, LINEAR]))
    drift = draw(st.sampled_from([0.0, 0.7, -1.3]))
    return CycleSample(xi, CyclePath(times, values, mode, drift))


@given(cycles())
def test_closed_sup_is_max_of_open_sup_and_end_value(c):
    eta = path_value(c, c.xi)
    assert path_sup_abs(c) == max(path_sup_abs_open(c), abs(eta))


@given(cycles(), st.floats(0.0, 1.0))
def test_refinement_leaves_functionals_unchanged(c, u):
    t = u * c.xi
    r = CycleSample(c.xi, c.path.refined(t))
    assert path_sup_abs(r) == pytest.approx(path_sup_abs(c), rel=1e-12, abs=1e-12)
    assert path_sup_abs_open(r) == pytest.approx(path_sup_abs_open(c), rel=1e-12, abs=1e-12)
    assert path_integral(r) == pytest.approx(path_integral(c), rel=1e-9, abs=1e-9)
    for s in np.linspace(0, c.xi, 9):
        assert path_value(r, s) == pytest.approx(path_value(c, s), rel=1e-12, abs=1e-9)


@given(cycles())
@settings(max_examples=50)
def test_batch_matches_scalar_functionals(c):
    p = c.path
    batch = CycleBatch(np.array([c.xi]), np.array([p.times]), np.array([p.values]), p.mode, p.drift)
    assert batch.eta()[0] == pytest.approx(path_value(c, c.xi), rel=1e-12, abs=1e-12)
    assert batch.sup_abs()[0] == pytest.approx(path_sup_abs(c), rel=1e-12, abs=1e-12)
    assert batch.sup_abs_open()[0] == pytest.approx(path_sup_abs_open(c), rel=1e-12, abs=1e-12)
    assert batch.integral()[0] == pytest.approx(path_integral(c), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("kind", sorted(REGISTRY))
def test_batch_agrees_with_its_samples(kind):
    model = make_model(kind)
    batch = model.sample_batch(Streams(3).generator(), 200)
    samples = batch.samples()
    np.testing.assert_allclose(batch.eta(), [path_value(c, c.xi) for c in samples], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(batch.sup_abs(), [path_sup_abs(c) for c in samples], rtol=1e-12)
    np.testing.assert_allclose(batch.sup_abs_open(), [path_sup_abs_open(c) for c in samples], rtol=1e-12)
    np.testing.assert_allclose(batch.integral(), [path_integral(c) for c in samples], rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("kind", sorted(REGISTRY))
def test_declared_moments_match_samples(kind):
    model = make_model(kind)
    km = model.known_moments
    batch = model.sample_batch(Streams(11).generator(), 200_000)
    mu = batch.xi.mean()
    assert mu == pytest.approx(km.mu, rel=0.03)
    if model.joint_moment_finite(0, 1):
        assert batch.eta().mean() / mu == pytest.approx(km.a, rel=0.03, abs=0.01)


def test_registry_kinds_and_unknown_kind():
    assert set(REGISTRY) == {
        "deterministic_drift",
        "linear_to_eta",
        "poisson_count",
        "uniform_count",
        "arithmetic_count",
        "pareto_counterexample",
        "heavy_spike",
    }
    with pytest.raises(ValidationError):
        make_model("nope")
    with pytest.raises(ValidationError):
        make_model("poisson_count", lam=-1)
    with pytest.raises(ValidationError):
        make_model("poisson_count", rate=1)
    with pytest.raises(ValidationError):
        make_model("pareto_counterexample", alpha=1.0)


def test_arithmetic_pmf_validation():
    assert ArithmeticCount({"1": 0.5, "2": 0.5}).pmf() == {1: 0.5, 2: 0.5}
    with pytest.raises(ValidationError):
        ArithmeticCount([0.5, 0.4])
    with pytest.raises(ValidationError):
        ArithmeticCount({0: 1.0})


def test_moment_declarations():
    p = ParetoCounterexample(1.5, 1.0)
    assert p.joint_moment_finite(1, 0)
    assert not p.joint_moment_finite(2, 0)
    assert p.joint_moment_finite(0, 1.4)
    assert not p.joint_moment_finite(0, 1.5)
    h = HeavySpike()
    assert not h.joint_moment_finite(0, 1)
    assert h.hypotheses()["M1<inf a.s."]
    assert "E[M1]=inf, M1<inf a.s." in h.notes


def test_pareto_paths():
    c = ParetoCounterexample(1.5, 1.0).sample_batch(Streams(5).generator(), 500)
    assert np.all(c.xi >= 1)
    assert np.all(c.eta() == 0)
    np.testing.assert_allclose(c.sup_abs(), c.xi ** 1.0)


def test_centering_shifts_drift_only():
    base = PoissonCount(2.0)
    cm = center_model(base, 2.0)
    assert cm.known_moments.a == 0
    assert cm.known_moments.mu == base.known_moments.mu
    b0 = base.sample_batch(Streams(1).generator(), 100)
    b1 = cm.sample_batch(Streams(1).generator(), 100)
    np.testing.assert_array_equal(b0.xi, b1.xi)
    np.testing.assert_allclose(b1.eta(), b0.eta() - 2.0 * b0.xi, rtol=1e-12)


def test_heavy_spike_sup_is_pareto():
    m = HeavySpike().sample_batch(Streams(9).generator(), 100_000).sup_abs()
    assert np.all(m >= 1)
    assert (m > 10).mean() == pytest.approx(0.1, abs=0.005)
    assert not math.isinf(m.max())
