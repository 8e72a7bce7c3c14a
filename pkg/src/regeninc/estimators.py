"""Monte Carlo estimators consumed by the theorem checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .cycle_models import CycleModel
from .errors import DomainError, ValidationError
from .regen_core import DEFAULT_MAX_CYCLES, observe_replicates, stream_cycle_statistics
from .streams import as_generator, as_streams


@dataclass(frozen=True)
class MomentSummary:
    mu_hat: float
    a_hat: float
    sigma2_hat: float
    n: int
    se_mu: float
    se_a: float
    se_sigma2: float


@dataclass(frozen=True)
class ExpansionConstant:
    c_hat: float
    se: float
    arithmetic: bool
    span: float | None = None
    # the second arithmetic form (sum up to T1/d with -a d/2); equal in expectation
    c_hat_alt: float | None = None


class EmpiricalDistribution:
    """Sorted sample carrier."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise ValidationError("empirical distribution needs at least one value")
        self.values = v

    @property
    def count(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.count

    def __repr__(self):
        return f"EmpiricalDistribution(count={self.count})"


class MeanPoint(NamedTuple):
    """``mean``/``se``: plain replicate mean of ``Z(t)``.

    ``adj_mean``/``adj_se``: estimate of ``E Z(t) - a t`` from the
    regeneration-centred statistic (same expectation, bounded variance).
    """

    t: float
    mean: float
    se: float
    adj_mean: float
    adj_se: float


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf


def estimate_cycle_moments(model: CycleModel, n: int, rng) -> MomentSummary:
    """Plug-in ``mu``, ``a = E eta / mu`` and ``sigma^2 = Var(eta - a xi)`` from ``n`` cycles."""
    if n < 100:
        raise ValidationError("estimate_cycle_moments needs n >= 100")
    st = stream_cycle_statistics(model, n, as_generator(rng))
    return moments_from(st.xi, st.eta)


def moments_from(xi: np.ndarray, eta: np.ndarray) -> MomentSummary:
    n = len(xi)
    mu = float(xi.mean())
    a = float(eta.mean() / mu)
    resid = eta - a * xi
    sigma2 = float(resid.var(ddof=1))
    sq = (resid - resid.mean()) ** 2
    return MomentSummary(
        mu_hat=mu,
        a_hat=a,
        sigma2_hat=sigma2,
        n=n,
        se_mu=_se(xi),
        se_a=float(math.sqrt(sigma2 / n) / mu),
        se_sigma2=_se(sq),
    )


def estimate_expansion_constant(model: CycleModel, n: int, rng) -> ExpansionConstant:
    """Constant ``C`` in ``E Z(t) = a t + C + o(1)``.

    Non-arithmetic: ``a E[xi^2]/(2 mu) + E[int_0^xi Z - xi eta] / mu``.
    Arithmetic with span ``d`` (from the model): the integral is replaced by
    ``d sum_{k=1}^{xi/d - 1} Z(k d)`` and ``a d / 2`` is added.
    """
    if n < 1000:
        raise ValidationError("estimate_expansion_constant needs n >= 1000")
    d = model.span
    st = stream_cycle_statistics(model, n, as_generator(rng), d=d)
    return expansion_constant_from(st.xi, st.eta, st.integral if d is None else st.lattice_sum, d)


def expansion_constant_from(xi, eta, inner, d: float | None) -> ExpansionConstant:
    n = len(xi)
    w = inner - xi * eta
    m_xi, m_eta, m_xi2, m_w = xi.mean(), eta.mean(), (xi * xi).mean(), w.mean()
    a = m_eta / m_xi
    lat = 0.0 if d is None else d
    c = a * m_xi2 / (2 * m_xi) + a * lat / 2 + m_w / m_xi
    grad = np.array(
        [
            -m_eta * m_xi2 / m_xi**3 - m_eta * lat / (2 * m_xi**2) - m_w / m_xi**2,
            m_xi2 / (2 * m_xi**2) + lat / (2 * m_xi),
            m_eta / (2 * m_xi**2),
            1.0 / m_xi,
        ]
    )
    X = np.vstack([xi, eta, xi * xi, w])
    if n > 1:
        var = float(grad @ np.cov(X) @ grad) / n
        se = math.sqrt(max(var, 0.0))
    else:
        se = math.inf
    alt = None
    if d is not None:
        w_alt = inner + d * eta - xi * eta
        alt = float(a * m_xi2 / (2 * m_xi) - a * d / 2 + w_alt.mean() / m_xi)
    return ExpansionConstant(float(c), se, d is not None, d, alt)


def empirical_normalized_law(
    model: CycleModel, t: float, replicates: int, streams, a: float | None = None
) -> EmpiricalDistribution:
    """Law of ``(Z(t) - a t) / sqrt(t)`` over independent trajectories."""
    if replicates < 1000:
        raise ValidationError("empirical_normalized_law needs replicates >= 1000")
    a = _drift(model, a)
    obs = observe_replicates(model, [t], replicates, as_streams(streams), a=a)
    return EmpiricalDistribution(obs.centered[:, 0] / math.sqrt(t))


def estimate_mean_curve(
    model: CycleModel,
    t_grid,
    replicates: int,
    streams,
    a: float | None = None,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> list[MeanPoint]:
    """``E Z(t)`` on a grid; one trajectory per replicate serves every grid point."""
    if replicates < 1000:
        raise ValidationError("estimate_mean_curve needs replicates >= 1000")
    a = _drift(model, a)
    obs = observe_replicates(model, t_grid, replicates, as_streams(streams), a=a, max_cycles=max_cycles)
    out = []
    for j, t in enumerate(obs.t):
        z, adj = obs.z[:, j], obs.adjusted[:, j]
        out.append(MeanPoint(float(t), float(z.mean()), _se(z), float(adj.mean()), _se(adj)))
    return out


def _drift(model: CycleModel, a: float | None) -> float:
    if a is not None:
        return float(a)
    km = model.known_moments
    if km is None:
        raise ValidationError("drift a is not declared by the model; pass an estimate")
    return km.a


def normal_cdf(x, variance: float = 1.0):
    """CDF of N(0, variance); variance 0 is the point mass at 0."""
    x = np.asarray(x, dtype=float)
    if variance == 0:
        return (x >= 0).astype(float)
    return ndtr(x / math.sqrt(variance))


def ks_distance(emp: EmpiricalDistribution, variance: float) -> float:
    """``sup_x |F_n(x) - Phi(x / sqrt(variance))|``, both one-sided jumps included."""
    if not variance >= 0:
        raise ValidationError("variance must be >= 0")
    x = emp.values
    n = x.size
    if n == 0:
        raise ValidationError("empty sample")
    if variance == 0:
        # step target: compare at every sample point and at the atom 0
        pts = np.union1d(x, [0.0])
        f_right = np.searchsorted(x, pts, side="right") / n
        f_left = np.searchsorted(x, pts, side="left") / n
        g_right = (pts >= 0).astype(float)
        g_left = (pts > 0).astype(float)
        return float(max(np.abs(f_right - g_right).max(), np.abs(f_left - g_left).max()))
    cdf = ndtr(x / math.sqrt(variance))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def empirical_abs_moment(emp: EmpiricalDistribution, r: float) -> float:
    if not r > 0:
        raise ValidationError("r must be positive")
    return float(np.mean(np.abs(emp.values) ** r))


def resolve_moments(model: CycleModel, rng=None, n: int = 100_000) -> tuple[float, float, float]:
    """``(mu, a, sigma^2)`` from declared metadata, else estimated on ``rng``."""
    km = model.known_moments
    if km is not None:
        return km.mu, km.a, km.sigma2
    if rng is None:
        raise ValidationError("model declares no moments and no stream was given to estimate them")
    ms = estimate_cycle_moments(model, n, rng)
    return ms.mu_hat, ms.a_hat, ms.sigma2_hat


def check_lattice_times(model: CycleModel, t_grid) -> None:
    """Arithmetic limits run along ``t`` in ``d N``."""
    d = model.span
    if d is None:
        return
    for t in t_grid:
        k = round(t / d)
        if abs(t - k * d) > 1e-9 * max(1.0, t):
            raise DomainError(f"t={t} is not on the lattice of span {d}")
