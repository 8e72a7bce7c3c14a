"""Deterministic renewal-theory computations.

* the renewal function ``U(t) = sum_n P(T_n <= t) = E N(t) + 1``, exactly for
  arithmetic durations and by discretising ``U = 1 + F * U`` otherwise;
* Stieltjes convolutions ``U * h(t)`` and their key-renewal limits
  ``(1/mu) int_0^inf h``;
* the size-biased tail ``lambda_c = E[xi 1{Y > c}] / E[xi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy import integrate
from scipy.signal import lfilter

from .cycle_models import CycleModel
from .errors import DomainError, PreconditionError, ValidationError
from .regen_core import stream_cycle_statistics
from .streams import as_generator

ARITHMETIC = "arithmetic-exact"
DISCRETIZED = "discretized"


@dataclass(frozen=True)
class RenewalTable:
    """``U`` on the grid ``0, step, 2 step, ...``; ``values[0] == 1``."""

    step: float
    values: np.ndarray
    mode: str

    @property
    def grid(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.step

    @property
    def t_max(self) -> float:
        return (len(self.values) - 1) * self.step

    def __call__(self, t):
        """``U(t)``: right-continuous steps (arithmetic) or linear interpolation."""
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_max * (1 + 1e-12)):
            raise DomainError(f"t beyond table range {self.t_max}")
        if self.mode == ARITHMETIC:
            idx = np.floor(t / self.step + 1e-9).astype(np.int64)
            out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)
        else:
            out = np.where(t >= 0, np.interp(t, self.grid, self.values), 0.0)
        return float(out) if out.ndim == 0 else out

    def increments(self) -> np.ndarray:
        """Mass of ``dU`` at each grid point (the atom ``U(0) = 1`` included)."""
        return np.diff(self.values, prepend=0.0)


@dataclass(frozen=True)
class TailFunction:
    """A non-negative function on ``[0, inf)`` with an optional DRI certificate.

    ``monotone`` declares that ``fn`` is decreasing; together with a finite
    integral this certifies direct Riemann integrability.  ``breakpoints``
    lists known discontinuities, used to split the quadrature.
    """

    fn: Callable
    monotone: bool = False
    integral_bound: float | None = None
    breakpoints: tuple = ()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.fn(np.maximum(s, 0.0)), 0.0)


def renewal_function_arithmetic(pmf: Mapping[int, float], d: float, m_max: int) -> RenewalTable:
    """Exact ``U(m d) = 1 + sum_{k<=m} p_k U((m-k) d)`` for ``m = 0..m_max``."""
    items = sorted((int(k), float(p)) for k, p in dict(pmf).items() if p != 0)
    if not items or any(k < 1 for k, _ in items) or any(not (p >= 0) for _, p in items):
        raise ValidationError("pmf must put non-negative mass on integers k >= 1")
    if abs(math.fsum(p for _, p in items) - 1.0) > 1e-12:
        raise ValidationError("pmf must sum to 1 within 1e-12")
    if not d > 0:
        raise ValidationError(f"span must be positive, got {d}")
    m_max = int(m_max)
    if m_max < 0:
        raise ValidationError("m_max must be >= 0")
    U = np.zeros(m_max + 1)
    for m in range(m_max + 1):
        acc = 1.0
        for k, p in items:
            if k > m:
                break
            acc += p * U[m - k]
        U[m] = acc
    return RenewalTable(float(d), U, ARITHMETIC)


def renewal_function_numeric(cdf: Callable, h: float, t_max: float) -> RenewalTable:
    """Discretised solution of ``U = 1 + F * U`` on ``0, h, ..., t_max``.

    The Stieltjes integral over each cell ``((k-1)h, kh]`` uses the cell's
    F-mass times the average of ``U`` at the two grid ends of the shifted
    cell, i.e. ``U`` at the cell midpoint to second order.  The recursion is
    implicit only through the first cell and is solved as a linear IIR
    filter.  Error for smooth ``F`` is O(h^2) uniformly on bounded ranges.
    """
    if not (h > 0 and t_max > 0):
        raise ValidationError("h and t_max must be positive")
    if h > t_max / 10:
        raise ValidationError("step h must be at most t_max / 10")
    n = int(math.ceil(t_max / h - 1e-9))
    F = np.asarray(cdf(np.arange(n + 2) * h), dtype=float)
    if abs(F[0]) > 1e-15:
        raise ValidationError("F(0) must be 0 (durations are strictly positive)")
    if np.any(np.diff(F) < -1e-15):
        raise ValidationError("cdf is decreasing on the grid")
    half = 0.5 * np.maximum(np.diff(F), 0.0)  # half the mass of each cell
    denom = np.empty(n + 1)
    denom[0] = 1.0 - half[0]
    denom[1:] = -(half[:n] + half[1 : n + 1])
    rhs = 1.0 - half[: n + 1]
    U = lfilter([1.0], denom, rhs)
    return RenewalTable(float(h), U, DISCRETIZED)


def key_renewal_convolution(U: RenewalTable, h: Callable, t: float) -> float:
    """``U * h(t) = int_[0,t] h(t - u) dU(u)`` as a sum over the table's increments."""
    if t < 0 or t > U.t_max * (1 + 1e-12):
        raise DomainError(f"t={t} outside table range [0, {U.t_max}]")
    u = U.grid
    keep = u <= t + 1e-12 * max(1.0, t)
    return float(np.sum(np.asarray(h(t - u[keep]), dtype=float) * U.increments()[keep]))


def key_renewal_limit(h: TailFunction, mu: float) -> float:
    """``(1/mu) int_0^inf h(s) ds`` for a certified directly Riemann integrable ``h``."""
    if not isinstance(h, TailFunction) or not h.monotone:
        raise PreconditionError("h must be declared monotone decreasing (DRI certificate)")
    if not mu > 0:
        raise ValidationError("mu must be positive")
    cuts = sorted(b for b in h.breakpoints if b > 0)
    edges = [0.0, *cuts, math.inf]
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        val, _ = integrate.quad(lambda s: float(h(s)), lo, hi, epsrel=1e-10, epsabs=1e-13, limit=200)
        total += val
    if h.integral_bound is not None and total > h.integral_bound * (1 + 1e-8) + 1e-12:
        raise PreconditionError(f"integral {total} exceeds declared bound {h.integral_bound}")
    return total / mu


@dataclass(frozen=True)
class TailEstimate:
    value: float
    se: float


def size_biased_from(xi: np.ndarray, y: np.ndarray, c: float) -> TailEstimate:
    """Ratio estimate ``mean(xi 1{y > c}) / mean(xi)`` with a delta-method error."""
    n = len(xi)
    mean_xi = xi.mean()
    w = xi * (y > c)
    lam = w.mean() / mean_xi
    infl = (w - lam * xi) / mean_xi
    se = float(infl.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return TailEstimate(float(lam), se)


def size_biased_tail(model: CycleModel, a: float, c: float, n: int, rng) -> TailEstimate:
    """Monte Carlo ``lambda_c = (1/mu) int_0^inf P(xi > s, Y > c) ds`` with ``Y = M + |a| xi``.

    Uses ``int_0^inf P(xi > s, Y > c) ds = E[xi 1{Y > c}]``.
    """
    if n < 1000:
        raise ValidationError("size_biased_tail needs n >= 1000 samples")
    st = stream_cycle_statistics(model, n, as_generator(rng), a=a)
    return size_biased_from(st.xi, st.y, c)


def duration_table(model: CycleModel, t_max: float, h: float | None = None) -> RenewalTable:
    """Renewal function of a model's declared duration law up to ``t_max``."""
    pmf = model.pmf()
    if pmf is not None and model.span is not None:
        return renewal_function_arithmetic(pmf, model.span, int(math.ceil(t_max / model.span)))
    if model.cdf(0.0) is None:
        raise PreconditionError(f"{model!r} declares no duration distribution")
    if h is None:
        h = min(0.01, t_max / 1000)
    return renewal_function_numeric(model.cdf, h, t_max)
