import numpy as np
import pytest

from regeninc.cycle_models import ArithmeticCount, DeterministicDrift, LinearToEta, PoissonCount, UniformCount
from regeninc.errors import BudgetExceeded, DomainError, ValidationError
from regeninc.regen_core import (
    count_N,
    cycle_statistics,
    evaluate_Z,
    observe,
    observe_replicates,
    simulate_trajectory,
    stream_cycle_statistics,
    tau,
)
from regeninc.streams import Streams


def brute_force_Z(traj, t):
    """Walk the cycles one by one."""
    start, level = 0.0, 0.0
    for c in traj.cycles:
        if t < start + c.xi:
            return level + c.path.value(t - start)
        start += c.xi
        level += c.path.value(c.xi)
    raise AssertionError("t beyond trajectory")


def test_trajectory_covers_horizon_and_stops_at_tau():
    traj = simulate_trajectory(UniformCount(), 50.0, Streams(1).generator())
    assert traj.cum_times[-1] > 50.0
    assert traj.cum_times[-2] <= 50.0
    assert traj.n_cycles == tau(traj, 50.0)


@pytest.mark.parametrize("model", [UniformCount(), LinearToEta(1.0, 0.5, 1.0), PoissonCount(3.0)])
def test_evaluate_Z_matches_cycle_walk(model):
    traj = simulate_trajectory(model, 30.0, Streams(2).generator())
    ts = np.linspace(0, 30, 301)
    z = evaluate_Z(traj, ts)
    np.testing.assert_allclose(z, [brute_force_Z(traj, t) for t in ts], rtol=1e-12, atol=1e-12)


def test_epoch_exactly_at_t_is_counted():
    traj = simulate_trajectory(ArithmeticCount([1.0]), 5.0, Streams(0).generator())
    assert count_N(traj, 3.0) == 3
    assert tau(traj, 3.0) == 4
    assert count_N(traj, 2.999) == 2
    assert evaluate_Z(traj, 3.0) == 3.0


def test_deterministic_drift_is_linear():
    traj = simulate_trajectory(DeterministicDrift(0.5, 2.0), 10.0, Streams(0).generator())
    ts = np.linspace(0, 10, 41)
    np.testing.assert_allclose(evaluate_Z(traj, ts), 2.0 * ts, rtol=1e-12)


def test_domain_and_budget_errors():
    traj = simulate_trajectory(PoissonCount(), 5.0, Streams(0).generator())
    with pytest.raises(DomainError):
        evaluate_Z(traj, 5.5)
    with pytest.raises(DomainError):
        count_N(traj, -1.0)
    with pytest.raises(BudgetExceeded):
        simulate_trajectory(PoissonCount(1.0), 1000.0, Streams(0).generator(), max_cycles=100)
    with pytest.raises(ValidationError):
        simulate_trajectory(PoissonCount(), 0.0, Streams(0).generator())


def test_observe_decompositions():
    model = UniformCount()
    a = model.known_moments.a
    traj = simulate_trajectory(model, 40.0, Streams(4).generator())
    t = np.array([5.0, 17.5, 40.0])
    row = observe(traj, t, a, want_m=True)
    np.testing.assert_allclose(row["z"], evaluate_Z(traj, t))
    np.testing.assert_allclose(row["centered"], row["z"] - a * t, atol=1e-9)
    n = traj.count(t)
    np.testing.assert_array_equal(row["count"], n)
    np.testing.assert_array_equal(row["xi_current"], traj.batch.xi[n])
    np.testing.assert_array_equal(row["m_current"], np.ones(3))


def test_replicates_are_order_independent():
    model = PoissonCount(2.0)
    full = observe_replicates(model, [10.0], 20, Streams(8))
    again = observe_replicates(model, [10.0], 20, Streams(8))
    np.testing.assert_array_equal(full.z, again.z)
    # replicate 7 alone reproduces row 7
    traj = simulate_trajectory(model, 10.0, Streams(8).replicate(7))
    assert evaluate_Z(traj, 10.0) == full.z[7, 0]


def test_adjusted_statistic_is_unbiased_for_poisson():
    # E N(t) = lam t exactly, so the adjusted mean must be ~0
    obs = observe_replicates(PoissonCount(2.0), [50.0], 4000, Streams(3), a=2.0)
    adj = obs.adjusted[:, 0]
    assert abs(adj.mean()) < 4 * adj.std() / np.sqrt(len(adj))
    # and its variance stays O(1) while Var N(t) grows like t
    assert adj.var() < 3 < obs.z[:, 0].var()


def test_grid_validation():
    with pytest.raises(ValidationError):
        observe_replicates(PoissonCount(), [2.0, 1.0], 5, Streams(0))
    with pytest.raises(ValidationError):
        observe_replicates(PoissonCount(), [0.0, 1.0], 5, Streams(0))


def test_cycle_statistics_scalar_and_stream_agree():
    model = LinearToEta(1.0, 0.5, 0.3)
    st = stream_cycle_statistics(model, 50, Streams(6).generator(), a=0.5, chunk=7)
    batch = model.sample_batch(Streams(6).generator(), 7)
    for i, c in enumerate(batch.samples()):
        cs = cycle_statistics(c, a=0.5)
        assert cs.xi == st.xi[i]
        assert cs.eta == pytest.approx(st.eta[i], rel=1e-12)
        assert cs.m == pytest.approx(st.m[i], rel=1e-12)
        assert cs.y == pytest.approx(st.y[i], rel=1e-12)
        assert cs.residual == pytest.approx(st.residual[i], rel=1e-12, abs=1e-14)
