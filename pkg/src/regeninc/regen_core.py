"""Assembly of ``Z(t)`` from i.i.d. cycles and the renewal clock.

``T_n`` are the cumulative durations, ``V_n = Z(T_n)`` the cumulative end
increments, ``N(t) = max{n : T_n <= t}`` and ``tau(t) = N(t) + 1``.  For
``T_N <= t < T_{N+1}`` the process is pasted as
``Z(t) = V_N + path_{N+1}(t - T_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cycle_models import (
    CycleBatch,
    CycleModel,
    CycleSample,
    path_integral,
    path_lattice_sum,
    path_sup_abs,
    path_sup_abs_open,
    path_value,
)
from .errors import BudgetExceeded, DomainError, ValidationError
from .streams import as_generator, as_streams

DEFAULT_MAX_CYCLES = 20_000_000


@dataclass
class RenewalTrajectory:
    """Materialized cycles covering ``[0, horizon]``.

    ``cum_times[n] = T_n`` and ``cum_values[n] = V_n`` with ``T_0 = V_0 = 0``;
    the last cycle is the one in progress at ``horizon``.
    """

    batch: CycleBatch
    cum_times: np.ndarray
    cum_values: np.ndarray
    horizon: float

    @property
    def n_cycles(self) -> int:
        return len(self.batch)

    @property
    def cycles(self) -> list[CycleSample]:
        return self.batch.samples()

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise DomainError(f"t must lie in [0, {self.horizon}]")
        return t

    def count(self, t) -> np.ndarray:
        """Vectorized ``N(t)``."""
        t = self._check_time(t)
        return np.searchsorted(self.cum_times, t, side="right") - 1


def simulate_trajectory(
    model: CycleModel,
    horizon: float,
    rng,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> RenewalTrajectory:
    """Draw cycles until ``T_n > horizon``; ``n_cycles == tau(horizon)``."""
    if not horizon > 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    rng = as_generator(rng)
    chunk = int(horizon / model.mean_duration_hint * 1.1) + 16
    batches: list[CycleBatch] = []
    total, drawn = 0.0, 0
    while total <= horizon:
        if drawn + chunk > max_cycles:
            chunk = max_cycles - drawn
            if chunk <= 0:
                raise BudgetExceeded(f"more than {max_cycles} cycles needed to cover horizon {horizon}")
        b = model.sample_batch(rng, chunk)
        batches.append(b)
        drawn += chunk
        total += float(b.xi.sum())
        chunk *= 2
    batch = CycleBatch.concat(batches)
    cum = np.cumsum(batch.xi)
    # float re-summation may differ from the running total; recheck coverage
    while cum[-1] <= horizon:
        extra = model.sample_batch(rng, max(16, len(batch) // 8))
        if len(batch) + len(extra) > max_cycles:
            raise BudgetExceeded(f"more than {max_cycles} cycles needed to cover horizon {horizon}")
        batch = CycleBatch.concat([batch, extra])
        cum = np.cumsum(batch.xi)
    tau = int(np.searchsorted(cum, horizon, side="right")) + 1
    batch = batch.take(slice(0, tau))
    cum_times = np.concatenate([[0.0], cum[:tau]])
    cum_values = np.concatenate([[0.0], np.cumsum(batch.eta())])
    return RenewalTrajectory(batch, cum_times, cum_values, float(horizon))


def count_N(traj: RenewalTrajectory, t: float) -> int:
    """``N(t) = max{n : T_n <= t}``; an epoch exactly at ``t`` is counted."""
    return int(traj.count(t))


def tau(traj: RenewalTrajectory, t: float) -> int:
    return count_N(traj, t) + 1


def evaluate_Z(traj: RenewalTrajectory, t):
    """``Z(t) = V_{N(t)} + path_{N(t)+1}(t - T_{N(t)})`` (scalar or array ``t``)."""
    t_arr = np.atleast_1d(traj._check_time(t))
    n = traj.count(t_arr)
    s = t_arr - traj.cum_times[n]
    z = traj.cum_values[n] + traj.batch.value_at(n, s)
    return float(z[0]) if np.ndim(t) == 0 else z


# ---------------------------------------------------------------------------
# per-cycle statistics


@dataclass(frozen=True)
class CycleStats:
    xi: float
    eta: float
    m: float
    m_open: float
    integral: float
    lattice_sum: float | None
    y: float
    residual: float


def cycle_statistics(sample: CycleSample, a: float, d: float | None = None) -> CycleStats:
    m = path_sup_abs(sample)
    eta = path_value(sample, sample.xi)
    return CycleStats(
        xi=sample.xi,
        eta=eta,
        m=m,
        m_open=path_sup_abs_open(sample),
        integral=path_integral(sample),
        lattice_sum=None if d is None else path_lattice_sum(sample, d),
        y=m + abs(a) * sample.xi,
        residual=eta - a * sample.xi,
    )


@dataclass
class BatchStats:
    """Array form of :class:`CycleStats` for many cycles."""

    xi: np.ndarray
    eta: np.ndarray
    m: np.ndarray
    m_open: np.ndarray
    integral: np.ndarray
    lattice_sum: np.ndarray | None
    y: np.ndarray
    residual: np.ndarray

    def __len__(self):
        return len(self.xi)


def batch_statistics(batch: CycleBatch, a: float, d: float | None = None) -> BatchStats:
    eta = batch.eta()
    m = batch.sup_abs()
    return BatchStats(
        xi=batch.xi,
        eta=eta,
        m=m,
        m_open=batch.sup_abs_open(),
        integral=batch.integral(),
        lattice_sum=None if d is None else batch.lattice_sum(d),
        y=m + abs(a) * batch.xi,
        residual=eta - a * batch.xi,
    )


def stream_cycle_statistics(
    model: CycleModel, n: int, rng, a: float = 0.0, d: float | None = None, chunk: int = 1_000_000
) -> BatchStats:
    """Per-cycle statistics of ``n`` fresh cycles without building a trajectory."""
    rng = as_generator(rng)
    parts = []
    left = int(n)
    while left > 0:
        k = min(chunk, left)
        parts.append(batch_statistics(model.sample_batch(rng, k), a, d))
        left -= k
    if len(parts) == 1:
        return parts[0]
    fields = BatchStats.__dataclass_fields__
    merged = {}
    for name in fields:
        vals = [getattr(p, name) for p in parts]
        merged[name] = None if vals[0] is None else np.concatenate(vals)
    return BatchStats(**merged)


# ---------------------------------------------------------------------------
# observing many replicates on a time grid


@dataclass
class GridObservations:
    """Replicate-by-time arrays observed on a common grid.

    ``centered`` is ``Z(t) - a t`` accumulated as a sum of centred cycle
    residuals plus the centred partial cycle.  ``adjusted`` subtracts the
    completed-cycle sum up to ``tau(t)``, whose expectation is zero by Wald's
    identity, so it has the mean of ``Z(t) - a t`` with O(1) variance.
    """

    t: np.ndarray
    a: float
    z: np.ndarray
    centered: np.ndarray
    adjusted: np.ndarray
    count: np.ndarray
    xi_current: np.ndarray
    m_current: np.ndarray | None


def observe(traj: RenewalTrajectory, t_grid, a: float, want_m: bool = False) -> dict:
    t = traj._check_time(np.atleast_1d(t_grid))
    n = np.searchsorted(traj.cum_times, t, side="right") - 1
    s = t - traj.cum_times[n]
    batch = traj.batch
    local = batch.value_at(n, s)
    resid = batch.eta() - a * batch.xi
    cum_resid = np.concatenate([[0.0], np.cumsum(resid)])
    partial = local - a * s
    out = {
        "z": traj.cum_values[n] + local,
        "centered": cum_resid[n] + partial,
        "adjusted": partial - resid[n],
        "count": n,
        "xi_current": batch.xi[n],
    }
    if want_m:
        out["m_current"] = batch.take(n).sup_abs()
    return out


def observe_replicates(
    model: CycleModel,
    t_grid,
    replicates: int,
    streams,
    a: float = 0.0,
    want_m: bool = False,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> GridObservations:
    """One trajectory per replicate (stream ``streams.replicate(i)``), observed at every grid time."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValidationError("t_grid must be a non-empty, positive, increasing sequence")
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    streams = as_streams(streams)
    horizon = float(t[-1])
    keys = ("z", "centered", "adjusted", "count", "xi_current") + (("m_current",) if want_m else ())
    acc = {k: np.empty((replicates, len(t)), dtype=np.int64 if k == "count" else float) for k in keys}
    for i in range(replicates):
        traj = simulate_trajectory(model, horizon, streams.replicate(i), max_cycles=max_cycles)
        row = observe(traj, t, a, want_m)
        for k in keys:
            acc[k][i] = row[k]
    return GridObservations(
        t=t,
        a=float(a),
        z=acc["z"],
        centered=acc["centered"],
        adjusted=acc["adjusted"],
        count=acc["count"],
        xi_current=acc["xi_current"],
        m_current=acc.get("m_current"),
    )
