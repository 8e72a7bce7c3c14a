"""Falsifiable, seeded checks of the limit theorems for regenerative increments.

Each ``verify_*`` function simulates at desk scale and returns a
:class:`Verdict` whose ``passed`` flag is exactly its documented decision
rule applied to ``statistic_trajectory``.  Convergence "as t grows" is
operationalised as: the final grid value meets the threshold and the
statistic never increases along the (geometric) grid by more than two
standard-error scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import gamma as gamma_fn

from .cycle_models import CycleModel, HeavySpike, ParetoCounterexample, PoissonCount
from .errors import HypothesisViolation, PreconditionError, ValidationError
from .estimators import (
    EmpiricalDistribution,
    check_lattice_times,
    empirical_abs_moment,
    estimate_expansion_constant,
    estimate_mean_curve,
    ks_distance,
    resolve_moments,
)
from .regen_core import observe_replicates, stream_cycle_statistics
from .renewal_numerics import duration_table, renewal_function_numeric, size_biased_from
from .streams import Streams, as_streams


@dataclass
class Verdict:
    name: str
    statistic_trajectory: list
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "threshold": _plain(self.threshold),
            "statistic_trajectory": [[_plain(x), _plain(v)] for x, v in self.statistic_trajectory],
            "details": _plain(self.details),
        }


def _plain(obj: Any):
    """Convert numpy scalars/arrays (recursively) to JSON-friendly Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


@dataclass(frozen=True)
class RateCondition:
    """Moment-exponent triple: ``E T^p < inf``, ``E M^q < inf``, target ``o(t^r)``."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1 and 0 < self.r <= 1):
            raise ValidationError("need p >= 1, q >= 1 and 0 < r <= 1")

    def holder_ok(self) -> bool:
        return self.p * (1 - 1 / self.q) >= 1 - self.r

    def satisfied(self) -> bool:
        return self.holder_ok() and self.p >= 2 - self.r


def _settles(values, allowance) -> bool:
    values = np.asarray(values, dtype=float)
    allowance = np.broadcast_to(np.asarray(allowance, dtype=float), values.shape)
    rises = np.diff(values)
    return bool(np.all(rises <= np.maximum(allowance[1:], allowance[:-1])))


def _require(model: CycleModel, u: float, v: float, what: str):
    if not model.joint_moment_finite(u, v):
        raise PreconditionError(f"{model!r} does not declare {what} finite")


# ---------------------------------------------------------------------------
# central limit theorem and its refinements


def verify_clt(
    model: CycleModel,
    t_grid=(250, 500, 1000, 2000),
    replicates: int = 10_000,
    streams=0,
    threshold: float = 0.03,
) -> Verdict:
    """KS distance of ``(Z(t) - a t)/sqrt(t)`` to ``N(0, sigma^2/mu)`` along ``t_grid``."""
    s = as_streams(streams).child("clt")
    mu, a, sigma2 = resolve_moments(model, s.child("moments").generator())
    target = max(sigma2, 0.0) / mu
    obs = observe_replicates(model, t_grid, replicates, s.child("replicates"), a=a)
    ks = [ks_distance(EmpiricalDistribution(obs.centered[:, j] / math.sqrt(t)), target) for j, t in enumerate(obs.t)]
    scale = 1.0 / math.sqrt(replicates)
    passed = ks[-1] < threshold and _settles(ks, 2 * scale)
    return Verdict(
        "clt",
        list(zip(obs.t.tolist(), ks)),
        threshold,
        passed,
        {"target_variance": target, "mu": mu, "a": a, "sigma2": sigma2, "replicates": replicates, "ks_scale": scale},
    )


def _abs_normal_moment(variance: float, r: float) -> float:
    return variance ** (r / 2) * 2 ** (r / 2) * gamma_fn((r + 1) / 2) / math.sqrt(math.pi)


def verify_moment_convergence(
    model: CycleModel,
    r: float = 2.0,
    t_grid=(250, 500, 1000, 2000),
    replicates: int = 10_000,
    streams=0,
    rel_tol: float = 0.05,
) -> Verdict:
    """Empirical ``E|(Z(t) - a t)/sqrt(t)|^r`` against the normal limit; pass on final relative error."""
    if r < 2:
        raise ValidationError("moment convergence is checked for r >= 2")
    _require(model, r, 0, f"E[T1^{r:g}]")
    _require(model, 0, r, f"E[M1^{r:g}]")
    s = as_streams(streams).child("moment_convergence")
    mu, a, sigma2 = resolve_moments(model, s.child("moments").generator())
    target = _abs_normal_moment(max(sigma2, 0.0) / mu, r)
    obs = observe_replicates(model, t_grid, replicates, s.child("replicates"), a=a)
    moments = [
        empirical_abs_moment(EmpiricalDistribution(obs.centered[:, j] / math.sqrt(t)), r) for j, t in enumerate(obs.t)
    ]
    if target == 0:
        passed = max(abs(m) for m in moments) <= 1e-12
        err = moments[-1]
    else:
        err = abs(moments[-1] - target) / target
        passed = err < rel_tol
    return Verdict(
        "moment_convergence",
        list(zip(obs.t.tolist(), moments)),
        rel_tol,
        passed,
        {"r": r, "target": target, "final_error": err, "replicates": replicates},
    )


def verify_self_normalized_clt(
    model: CycleModel,
    t: float = 2000,
    replicates: int = 10_000,
    streams=0,
    threshold: float = 0.03,
) -> Verdict:
    """KS distance of ``(Z(t) - mean)/sd`` (sample mean and sd) to ``N(0, 1)``."""
    km = model.known_moments
    if km is not None and km.sigma2 == 0:
        raise HypothesisViolation("self-normalised CLT needs Var(Z(T1) - a T1) > 0")
    _require(model, 2, 0, "E[T1^2]")
    _require(model, 0, 2, "E[M1^2]")
    s = as_streams(streams).child("self_normalized_clt")
    obs = observe_replicates(model, [t], replicates, s.child("replicates"), a=0.0)
    z = obs.z[:, 0]
    sd = z.std(ddof=1)
    if not sd > 0:
        raise HypothesisViolation("sample variance of Z(t) is zero")
    ks = ks_distance(EmpiricalDistribution((z - z.mean()) / sd), 1.0)
    return Verdict(
        "self_normalized_clt",
        [(float(t), ks)],
        threshold,
        ks < threshold,
        {"mean": float(z.mean()), "sd": float(sd), "replicates": replicates},
    )


# ---------------------------------------------------------------------------
# laws of large numbers


def verify_weak_lln(
    model: CycleModel,
    t_grid=(100, 1000, 10_000),
    replicates: int = 2000,
    eps: float = 0.1,
    streams=0,
    level: float = 0.05,
) -> Verdict:
    """``P(|Z(t)/t - a| > eps)`` along ``t_grid``; needs only ``M1 < inf`` a.s."""
    s = as_streams(streams).child("weak_lln")
    _, a, _ = resolve_moments(model, s.child("moments").generator())
    obs = observe_replicates(model, t_grid, replicates, s.child("replicates"), a=a)
    probs = (np.abs(obs.z / obs.t - a) > eps).mean(axis=0)
    se = np.sqrt(np.maximum(probs * (1 - probs), 1.0 / replicates) / replicates)
    passed = probs[-1] < level and _settles(probs, 2 * se)
    return Verdict(
        "weak_lln",
        list(zip(obs.t.tolist(), probs.tolist())),
        level,
        passed,
        {"eps": eps, "a": a, "se": se, "replicates": replicates},
    )


def block_record_counts(model: CycleModel, eps: float, max_block: int, replicates: int, streams: Streams) -> np.ndarray:
    """``#{n in [2^j, 2^(j+1)) : M_n > eps n}`` per replicate (rows) and block ``j`` (columns)."""
    n = 2 ** (max_block + 1)
    idx = np.arange(1, n)
    block = np.frexp(idx.astype(float))[1] - 1
    out = np.zeros((replicates, max_block + 1), dtype=np.int64)
    for i in range(replicates):
        m = model.sample_batch(streams.replicate(i), n - 1).sup_abs()
        hit = m > eps * idx
        out[i] = np.bincount(block[hit], minlength=max_block + 1)
    return out


def verify_strong_lln_gap(
    heavy: CycleModel | None = None,
    light: CycleModel | None = None,
    eps: float = 1.0,
    blocks=tuple(range(8, 15)),
    light_from: int = 6,
    replicates: int = 200,
    streams=0,
) -> Verdict:
    """Borel-Cantelli record counts: divergent for ``E M1 = inf``, vanishing for ``E M1 < inf``.

    Part (a): for ``heavy`` the mean count per dyadic block must lie in
    ``[L/2, 2L]`` with ``L = ln 2 / eps`` (every block and their average).
    Part (b): for ``light`` every block from ``light_from`` on is empty.
    """
    heavy = heavy or HeavySpike()
    light = light or PoissonCount(2.0)
    if heavy.joint_moment_finite(0, 1):
        raise PreconditionError("the heavy model must declare E[M1] = inf")
    if not light.joint_moment_finite(0, 1):
        raise PreconditionError("the light model must declare E[M1] < inf")
    blocks = list(blocks)
    s = as_streams(streams).child("strong_lln_gap")
    top = max(max(blocks), light_from)
    heavy_counts = block_record_counts(heavy, eps, top, replicates, s.child("heavy"))
    light_counts = block_record_counts(light, eps, top, replicates, s.child("light"))
    lam = math.log(2) / eps
    means = heavy_counts[:, blocks].mean(axis=0)
    ses = heavy_counts[:, blocks].std(axis=0, ddof=1) / math.sqrt(replicates)
    avg = float(means.mean())
    part_a = bool(np.all((means >= lam / 2) & (means <= 2 * lam)) and lam / 2 <= avg <= 2 * lam)
    light_tail = light_counts[:, light_from:].sum(axis=0)
    part_b = bool(np.all(light_tail == 0))
    return Verdict(
        "strong_lln_gap",
        list(zip(blocks, means.tolist())),
        lam,
        part_a and part_b,
        {
            "eps": eps,
            "band": [lam / 2, 2 * lam],
            "heavy_block_se": ses,
            "heavy_average": avg,
            "light_block_totals": dict(zip(range(light_from, top + 1), light_tail.tolist())),
            "part_a_divergent": part_a,
            "part_b_vanishing": part_b,
            "replicates": replicates,
        },
    )


# ---------------------------------------------------------------------------
# tightness and overshoot


def verify_tightness_limit(
    model: CycleModel,
    a: float = 0.0,
    c_list=(1.0, 2.0, 4.0, 8.0),
    t: float = 500.0,
    n: int = 100_000,
    replicates: int = 10_000,
    streams=0,
    vanish: float = 0.05,
) -> Verdict:
    """``P(Y_{tau(t)} > c)`` against the size-biased limit ``lambda_c``, ``Y = M + |a| xi``."""
    s = as_streams(streams).child("tightness_limit")
    mu, _, _ = resolve_moments(model, s.child("moments").generator())
    if t < 100 * mu:
        raise ValidationError(f"t={t} must be at least 100 * mu = {100 * mu}")
    c_list = [float(c) for c in c_list]
    obs = observe_replicates(model, [t], replicates, s.child("replicates"), a=0.0, want_m=True)
    y_now = obs.m_current[:, 0] + abs(a) * obs.xi_current[:, 0]
    st = stream_cycle_statistics(model, n, s.child("size_biased").generator(), a=a)
    rows, ok = [], True
    lams = []
    for c in c_list:
        p = float((y_now > c).mean())
        se_p = math.sqrt(p * (1 - p) / replicates)
        lam = size_biased_from(st.xi, st.y, c)
        tol = 3 * math.hypot(se_p, lam.se)
        ok &= abs(p - lam.value) <= tol
        rows.append({"c": c, "simulated": p, "se_simulated": se_p, "lambda": lam.value, "se_lambda": lam.se, "tol": tol})
        lams.append(lam.value)
    monotone = bool(np.all(np.diff(lams) <= 0))
    vanishes = len(lams) < 2 or lams[-1] <= vanish
    return Verdict(
        "tightness_limit",
        [(r["c"], r["simulated"]) for r in rows],
        3.0,
        bool(ok and monotone and vanishes),
        {"t": t, "a": a, "rows": rows, "lambda_monotone": monotone, "lambda_vanishes": vanishes},
    )


def _decay_rule(values, t, r):
    """Final value at most half the initial one and below ``initial * (t0/t_end)^(r/2)``."""
    initial, final = values[0], values[-1]
    floor = initial * (t[0] / t[-1]) ** (r / 2)
    return bool(final <= initial / 2 and final <= floor), floor


def verify_overshoot_rate(
    model: CycleModel,
    selector: str = "y",
    r: float = 0.5,
    t_grid=(10, 100, 1000, 10_000),
    replicates: int = 4000,
    streams=0,
    a: float | None = None,
) -> Verdict:
    """``t^-r E[Y_{tau(t)}]`` decays; ``Y`` is ``xi``, ``m`` or ``m + |a| xi`` of the covering cycle."""
    if not 0 < r <= 1:
        raise ValidationError("need 0 < r <= 1")
    if selector not in ("xi", "m", "y"):
        raise ValidationError(f"unknown selector {selector!r}")
    if selector in ("xi", "y"):
        _require(model, 2 - r, 0, f"E[T1^{2 - r:g}]")
    if selector in ("m", "y"):
        _require(model, 1 - r, 1, f"E[T1^{1 - r:g} M1]")
    s = as_streams(streams).child("overshoot_rate")
    if a is None:
        _, a, _ = resolve_moments(model, s.child("moments").generator())
    obs = observe_replicates(model, t_grid, replicates, s.child("replicates"), a=0.0, want_m=selector != "xi")
    if selector == "xi":
        y = obs.xi_current
    elif selector == "m":
        y = obs.m_current
    else:
        y = obs.m_current + abs(a) * obs.xi_current
    means = y.mean(axis=0)
    ses = y.std(axis=0, ddof=1) / math.sqrt(replicates)
    stat = means / obs.t**r
    passed, floor = _decay_rule(stat, obs.t, r)
    return Verdict(
        "overshoot_rate",
        list(zip(obs.t.tolist(), stat.tolist())),
        floor,
        passed,
        {"selector": selector, "r": r, "a": a, "mean_overshoot": means, "se": ses / obs.t**r, "replicates": replicates},
    )


# ---------------------------------------------------------------------------
# the mean


def verify_mean_rate(
    model: CycleModel,
    r: float = 1.0,
    t_grid=(10, 100, 1000),
    replicates: int = 10_000,
    streams=0,
) -> Verdict:
    """``|E Z(t) - a t| / t^r`` decays.

    Passes by the decay rule, or when the final value is within three
    standard errors of zero (the mean may be exactly ``a t``).
    """
    if not 0 < r <= 1:
        raise ValidationError("need 0 < r <= 1")
    _require(model, 1, 0, "E[T1]")
    _require(model, 0, 1, "E[M1]")
    if r < 1:
        _require(model, 2 - r, 0, f"E[T1^{2 - r:g}]")
        _require(model, 1 - r, 1, f"E[T1^{1 - r:g} M1]")
    s = as_streams(streams).child("mean_rate")
    _, a, _ = resolve_moments(model, s.child("moments").generator())
    curve = estimate_mean_curve(model, t_grid, replicates, s.child("replicates"), a=a)
    t = np.array([p.t for p in curve])
    stat = np.array([abs(p.adj_mean) for p in curve]) / t**r
    se = np.array([p.adj_se for p in curve]) / t**r
    decays, floor = _decay_rule(stat, t, r)
    null = bool(stat[-1] <= 3 * se[-1])
    return Verdict(
        "mean_rate",
        list(zip(t.tolist(), stat.tolist())),
        floor,
        decays or null,
        {"r": r, "a": a, "se": se, "decay_rule": decays, "consistent_with_zero": null, "replicates": replicates},
    )


def verify_mean_expansion(
    model: CycleModel,
    t_grid=(50, 100, 200),
    replicates: int = 100_000,
    streams=0,
    n_constant: int = 100_000,
) -> Verdict:
    """``E Z(t) - a t`` against the expansion constant; counting models are also checked against ``U(t) - 1 - a t``."""
    _require(model, 2, 0, "E[T1^2]")
    _require(model, 0, 1, "E[M1]")
    _require(model, 1, 1, "E[T1*M1]")
    check_lattice_times(model, t_grid)
    s = as_streams(streams).child("mean_expansion")
    _, a, _ = resolve_moments(model, s.child("moments").generator())
    curve = estimate_mean_curve(model, t_grid, replicates, s.child("replicates"), a=a)
    const = estimate_expansion_constant(model, n_constant, s.child("constant").generator())
    last = curve[-1]
    tol = 3 * math.hypot(last.adj_se, const.se)
    diff = last.adj_mean - const.c_hat
    passed = abs(diff) <= tol
    details = {
        "a": a,
        "constant": const.c_hat,
        "constant_se": const.se,
        "constant_alt_form": const.c_hat_alt,
        "final_difference": diff,
        "raw_means": [p.mean for p in curve],
        "raw_se": [p.se for p in curve],
        "adjusted_se": [p.adj_se for p in curve],
        "replicates": replicates,
    }
    if model.counting:
        t_max = max(t_grid)
        table = duration_table(model, t_max)
        slack = 0.0 if table.mode == "arithmetic-exact" else 1e-4
        renewal = [float(table(p.t)) - 1.0 - a * p.t for p in curve]
        agree = [abs(p.adj_mean - u) <= 3 * p.adj_se + slack for p, u in zip(curve, renewal)]
        details["renewal_function_value"] = renewal
        details["renewal_agreement"] = agree
        passed = passed and all(agree)
    return Verdict("mean_expansion", [(p.t, p.adj_mean) for p in curve], tol, bool(passed), details)


def counterexample_triple(alpha: float, beta: float) -> RateCondition | None:
    """Exponents ``(p, q, r)`` with ``beta = p/q`` and ``alpha = beta + 1 - r`` violating the Holder condition."""
    r = 1 + beta - alpha
    if not 0 < r < 1:
        return None
    p = (max(1.0, beta) + alpha) / 2
    return RateCondition(p, p / beta, r)


def verify_counterexample(
    alpha: float = 1.5,
    beta: float = 1.0,
    t_grid=(8, 16, 32, 64, 128, 256),
    replicates: int = 100_000,
    streams=0,
    slope_tol: float = 0.1,
    h: float = 0.01,
) -> Verdict:
    """Sharpness example: Pareto cycles with a spike ``xi^beta`` on ``[1, xi)``.

    (a) ``P(Z(t) > t^beta) = U(t - 1) t^-alpha`` within 3 binomial se at each t;
    (b) the log-log slope of ``E Z(t)`` over the upper half of the grid is
    ``1 + beta - alpha`` within ``slope_tol``; (c) the exponent triple built
    from ``(alpha, beta)`` violates the Holder-type rate condition.
    """
    if not (alpha > 1 and beta > 0 and beta < alpha):
        raise ValidationError("need alpha > 1, 0 < beta < alpha")
    if min(t_grid) < 1:
        raise ValidationError("the identity holds for t >= 1")
    model = ParetoCounterexample(alpha, beta)
    s = as_streams(streams).child("counterexample")
    obs = observe_replicates(model, t_grid, replicates, s.child("replicates"), a=0.0)
    t = obs.t
    hits = (obs.z > t**beta).mean(axis=0)
    t_max = max(float(t[-1]) - 1.0, 10 * h)
    U = renewal_function_numeric(model.cdf, h, t_max)
    predicted = np.array([U(x - 1.0) for x in t]) * t ** (-alpha)
    se = np.sqrt(predicted * (1 - predicted) / replicates)
    part_a = bool(np.all(np.abs(hits - predicted) <= 3 * se))
    means = obs.z.mean(axis=0)
    upper = slice(len(t) // 2, None)
    slope = float(np.polyfit(np.log(t[upper]), np.log(means[upper]), 1)[0])
    expected_slope = 1 + beta - alpha
    part_b = abs(slope - expected_slope) <= slope_tol
    triple = counterexample_triple(alpha, beta)
    part_c = None if triple is None else not triple.satisfied()
    passed = part_a and part_b and part_c is not False
    return Verdict(
        "counterexample",
        list(zip(t.tolist(), hits.tolist())),
        slope_tol,
        bool(passed),
        {
            "alpha": alpha,
            "beta": beta,
            "predicted": predicted,
            "binomial_se": se,
            "identity_holds": part_a,
            "mean": means,
            "slope": slope,
            "expected_slope": expected_slope,
            "slope_ok": part_b,
            "scaled_tail": hits * t ** (alpha - 1),
            "triple": None if triple is None else {"p": triple.p, "q": triple.q, "r": triple.r},
            "holder_condition": None if triple is None else triple.holder_ok(),
            "rate_condition_satisfied": None if triple is None else triple.satisfied(),
            "replicates": replicates,
        },
    )
