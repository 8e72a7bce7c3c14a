"""Cycle data model, path functionals and the built-in generative models.

A cycle is a pair ``(xi, path)``: the duration between two regeneration
epochs and the increment of the process over that cycle, stored as a
finite list of breakpoints with either right-continuous step or linear
interpolation.  An optional linear ``drift`` term is added on top of the
interpolated value; it is how a constant-rate centring ``Z(t) - a t`` is
represented without leaving the two interpolation modes.

Two representations are provided:

* :class:`CyclePath` / :class:`CycleSample` -- scalar, readable reference
  objects used by the public per-cycle operations;
* :class:`CycleBatch` -- ``n`` cycles stored as padded ``(n, K)`` arrays,
  which every simulation hot path uses.  Both compute functionals with the
  same floating-point expressions.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError, ValidationError

STEP = "step"
LINEAR = "linear"
MODES = (STEP, LINEAR)

# Relative slack when deciding whether a duration sits on the lattice d*N.
LATTICE_RTOL = 1e-9


# ---------------------------------------------------------------------------
# scalar paths


@dataclass(frozen=True)
class CyclePath:
    """Finite-breakpoint cadlag path starting at ``(0, 0)``."""

    times: tuple
    values: tuple
    mode: str = STEP
    drift: float = 0.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if self.mode not in MODES:
            raise ValidationError(f"unknown interpolation mode {self.mode!r}")
        if not times or len(times) != len(values):
            raise ValidationError("times and values must be non-empty and of equal length")
        if times[0] != 0.0 or values[0] != 0.0:
            raise ValidationError("a cycle path must start at (0, 0)")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("breakpoint times must be strictly increasing")
        if not all(math.isfinite(x) for x in times + values):
            raise ValidationError("breakpoints must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "drift", float(self.drift))

    def _base(self, t: float) -> float:
        j = bisect_right(self.times, t) - 1
        v0 = self.values[j]
        if self.mode == STEP or j == len(self.times) - 1:
            return v0
        t0, t1 = self.times[j], self.times[j + 1]
        v1 = self.values[j + 1]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def value(self, t: float) -> float:
        return self._base(t) + self.drift * t

    def left_limit(self, t: float) -> float:
        """Value of ``Z(t-)``; equals ``value(t)`` in linear mode."""
        if t <= 0.0 or self.mode == LINEAR:
            return self.value(t)
        j = bisect_left(self.times, t) - 1
        return self.values[j] + self.drift * t

    def refined(self, t: float) -> "CyclePath":
        """Same path with a redundant breakpoint inserted at ``t``."""
        if t in self.times:
            return self
        k = bisect_right(self.times, t)
        v = self._base(t)
        return CyclePath(
            self.times[:k] + (t,) + self.times[k:],
            self.values[:k] + (v,) + self.values[k:],
            self.mode,
            self.drift,
        )


@dataclass(frozen=True)
class CycleSample:
    """One i.i.d. cycle: duration ``xi`` and the path increment on ``[0, xi]``."""

    xi: float
    path: CyclePath

    def __post_init__(self):
        xi = float(self.xi)
        if not (xi > 0.0 and math.isfinite(xi)):
            raise ValidationError(f"cycle duration must be positive and finite, got {xi}")
        if self.path.times[-1] > xi:
            raise ValidationError("path breakpoints must lie in [0, xi]")
        object.__setattr__(self, "xi", xi)


def path_value(sample: CycleSample, t: float) -> float:
    """Path value at local time ``t`` in ``[0, xi]``."""
    if not 0.0 <= t <= sample.xi:
        raise DomainError(f"t={t} outside [0, {sample.xi}]")
    return sample.path.value(t)


def _sup_candidates(sample: CycleSample, include_end: bool) -> list[float]:
    p, xi = sample.path, sample.xi
    cands = [abs(p.left_limit(xi))]
    if include_end:
        cands.append(abs(p.value(xi)))
    for k, t in enumerate(p.times):
        if t < xi or include_end:
            cands.append(abs(p.values[k] + p.drift * t))
            if p.mode == STEP and k > 0:
                cands.append(abs(p.values[k - 1] + p.drift * t))
    return cands


def path_sup_abs(sample: CycleSample) -> float:
    """``sup |path|`` over the closed interval ``[0, xi]``.

    Every segment is monotone, so the supremum is attained among breakpoint
    values, left limits at jumps, and the end point.
    """
    return max(_sup_candidates(sample, include_end=True))


def path_sup_abs_open(sample: CycleSample) -> float:
    """``sup |path|`` over ``[0, xi)``; a jump located exactly at ``xi`` is excluded."""
    return max(_sup_candidates(sample, include_end=False))


def path_integral(sample: CycleSample) -> float:
    """Exact ``int_0^xi path(s) ds``."""
    p, xi = sample.path, sample.xi
    if p.mode == STEP:
        # Sum over jumps: invariant under redundant breakpoints.
        total = 0.0
        prev = 0.0
        for t, v in zip(p.times, p.values):
            total += (v - prev) * (xi - t)
            prev = v
    else:
        total = 0.0
        for (t0, v0), (t1, v1) in zip(zip(p.times, p.values), zip(p.times[1:], p.values[1:])):
            total += 0.5 * (v0 + v1) * (t1 - t0)
        total += p.values[-1] * (xi - p.times[-1])
    return total + 0.5 * p.drift * xi * xi


def lattice_steps(xi: float, d: float) -> int:
    """``xi / d`` as an integer, or DomainError if ``xi`` is off the lattice."""
    if not d > 0:
        raise DomainError(f"span must be positive, got {d}")
    k = round(xi / d)
    if k < 1 or abs(xi - k * d) > LATTICE_RTOL * max(1.0, abs(xi)):
        raise DomainError(f"duration {xi} is not a positive multiple of span {d}")
    return int(k)


def path_lattice_sum(sample: CycleSample, d: float) -> float:
    """``d * sum_{k=1}^{xi/d - 1} path(k d)``; empty sums are 0."""
    k_end = lattice_steps(sample.xi, d)
    return d * sum(sample.path.value(k * d) for k in range(1, k_end))


# ---------------------------------------------------------------------------
# batches


def _eval_rows(T: np.ndarray, V: np.ndarray, s: np.ndarray, mode: str) -> np.ndarray:
    """Interpolated base value of each row of ``(T, V)`` at its own time ``s``."""
    n, K = T.shape
    rows = np.arange(n)
    j = (T <= s[:, None]).sum(axis=1) - 1
    v0 = V[rows, j]
    if mode == STEP or K == 1:
        return v0
    j1 = np.minimum(j + 1, K - 1)
    t0, t1, v1 = T[rows, j], T[rows, j1], V[rows, j1]
    inner = (j1 > j) & np.isfinite(t1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lin = v0 + (v1 - v0) * (s - t0) / (t1 - t0)
    return np.where(inner, lin, v0)


@dataclass
class CycleBatch:
    """``n`` cycles as padded breakpoint arrays.

    ``times`` is padded with ``+inf`` and ``values`` with the last valid value.
    ``steps`` holds ``xi / span`` for arithmetic models.
    """

    xi: np.ndarray
    times: np.ndarray
    values: np.ndarray
    mode: str
    drift: float = 0.0
    steps: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.xi)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.times)

    def with_drift(self, extra: float) -> "CycleBatch":
        return CycleBatch(self.xi, self.times, self.values, self.mode, self.drift + extra, self.steps)

    def take(self, idx) -> "CycleBatch":
        if not isinstance(idx, slice):
            idx = np.asarray(idx)
        steps = None if self.steps is None else self.steps[idx]
        return CycleBatch(self.xi[idx], self.times[idx], self.values[idx], self.mode, self.drift, steps)

    @staticmethod
    def concat(batches: list["CycleBatch"]) -> "CycleBatch":
        if len(batches) == 1:
            return batches[0]
        first = batches[0]
        K = max(b.times.shape[1] for b in batches)

        def pad(b):
            extra = K - b.times.shape[1]
            if not extra:
                return b.times, b.values
            t = np.pad(b.times, ((0, 0), (0, extra)), constant_values=np.inf)
            v = np.pad(b.values, ((0, 0), (0, extra)), mode="edge")
            return t, v

        parts = [pad(b) for b in batches]
        steps = None if first.steps is None else np.concatenate([b.steps for b in batches])
        return CycleBatch(
            np.concatenate([b.xi for b in batches]),
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            first.mode,
            first.drift,
            steps,
        )

    def sample(self, i: int) -> CycleSample:
        ok = self.valid[i]
        path = CyclePath(tuple(self.times[i][ok]), tuple(self.values[i][ok]), self.mode, self.drift)
        return CycleSample(float(self.xi[i]), path)

    def samples(self) -> list[CycleSample]:
        return [self.sample(i) for i in range(len(self))]

    # -- functionals -------------------------------------------------------

    def value_at(self, idx, s) -> np.ndarray:
        """Path value of cycles ``idx`` at local times ``s`` (same shape)."""
        idx = np.atleast_1d(np.asarray(idx))
        s = np.broadcast_to(np.asarray(s, dtype=float), idx.shape).ravel()
        flat = idx.ravel()
        base = _eval_rows(self.times[flat], self.values[flat], s, self.mode)
        return (base + self.drift * s).reshape(idx.shape)

    def eta(self) -> np.ndarray:
        """End-of-cycle increments ``Z(T_n) - Z(T_{n-1})``."""
        return _eval_rows(self.times, self.values, self.xi, self.mode) + self.drift * self.xi

    def _left_limit_at_end(self) -> np.ndarray:
        if self.mode == LINEAR:
            return self.eta()
        rows = np.arange(len(self))
        j = (self.times < self.xi[:, None]).sum(axis=1) - 1
        return self.values[rows, j] + self.drift * self.xi

    def _sup(self, include_end: bool) -> np.ndarray:
        valid = self.valid
        T = np.where(valid, self.times, 0.0)
        keep = valid if include_end else valid & (T < self.xi[:, None])
        best = np.abs(self._left_limit_at_end())
        if include_end:
            best = np.maximum(best, np.abs(self.eta()))
        at_bp = np.where(keep, np.abs(self.values + self.drift * T), 0.0)
        best = np.maximum(best, at_bp.max(axis=1))
        if self.mode == STEP and T.shape[1] > 1:
            left = np.abs(self.values[:, :-1] + self.drift * T[:, 1:])
            best = np.maximum(best, np.where(keep[:, 1:], left, 0.0).max(axis=1))
        return best

    def sup_abs(self) -> np.ndarray:
        return self._sup(include_end=True)

    def sup_abs_open(self) -> np.ndarray:
        return self._sup(include_end=False)

    def integral(self) -> np.ndarray:
        valid = self.valid
        xi = self.xi
        if self.mode == STEP:
            jumps = np.diff(self.values, axis=1, prepend=0.0)
            span = xi[:, None] - np.where(valid, self.times, 0.0)
            total = np.where(valid, jumps * span, 0.0).sum(axis=1)
        else:
            T = np.where(valid, self.times, 0.0)
            pair = valid[:, 1:]
            trap = 0.5 * (self.values[:, :-1] + self.values[:, 1:]) * (T[:, 1:] - T[:, :-1])
            total = np.where(pair, trap, 0.0).sum(axis=1)
            rows = np.arange(len(self))
            last = valid.sum(axis=1) - 1
            total = total + self.values[rows, last] * (xi - T[rows, last])
        return total + 0.5 * self.drift * xi * xi

    def lattice_steps(self, d: float) -> np.ndarray:
        if not d > 0:
            raise DomainError(f"span must be positive, got {d}")
        if self.steps is not None:
            return self.steps
        k = np.rint(self.xi / d)
        bad = (k < 1) | (np.abs(self.xi - k * d) > LATTICE_RTOL * np.maximum(1.0, np.abs(self.xi)))
        if bad.any():
            raise DomainError(f"duration {self.xi[bad][0]} is not a positive multiple of span {d}")
        return k.astype(np.int64)

    def lattice_sum(self, d: float) -> np.ndarray:
        k_end = self.lattice_steps(d)
        out = np.zeros(len(self))
        kmax = int(k_end.max(initial=1)) - 1
        if kmax <= 0:
            return out
        ks = np.arange(1, kmax + 1)
        # chunk rows so the (rows x kmax) grid stays small
        rows_per = max(1, 2_000_000 // kmax)
        for start in range(0, len(self), rows_per):
            sl = slice(start, start + rows_per)
            m = len(self.xi[sl])
            idx = np.repeat(np.arange(start, start + m), kmax)
            s = np.tile(ks * d, m)
            vals = self.value_at(idx, s).reshape(m, kmax)
            mask = ks[None, :] < k_end[sl, None]
            out[sl] = d * np.where(mask, vals, 0.0).sum(axis=1)
        return out


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class KnownMoments:
    """Analytic cycle moments: ``mu = E T1``, ``a = E Z(T1) / mu``, ``sigma2 = Var(Z(T1) - a T1)``."""

    mu: float
    a: float
    sigma2: float


def _exponential(rng, scale, n):
    # Exp draws of exactly 0 (probability ~2^-53) would violate xi > 0
    return np.maximum(rng.exponential(scale, n), np.finfo(float).tiny)


def _counting_batch(xi: np.ndarray, steps=None) -> CycleBatch:
    n = len(xi)
    times = np.column_stack([np.zeros(n), xi])
    values = np.column_stack([np.zeros(n), np.ones(n)])
    return CycleBatch(xi, times, values, STEP, 0.0, steps)


class CycleModel:
    """Base class for generative cycle models.

    Subclasses set ``kind``, validate their parameters, and implement
    :meth:`sample_batch`.  Analytic metadata (``span``, ``known_moments``,
    moment finiteness via :meth:`joint_moment_finite`) is declared by each
    model, never estimated from samples.
    """

    kind: str = ""
    counting: bool = False
    summary: str = ""
    constraints: str = ""
    notes: tuple = ()

    def __init__(self, **params):
        self.params = {k: float(v) for k, v in params.items()}

    span: float | None = None

    @property
    def known_moments(self) -> KnownMoments | None:
        return None

    def sample_batch(self, rng: np.random.Generator, n: int) -> CycleBatch:
        raise NotImplementedError

    def sample_cycle(self, rng: np.random.Generator) -> CycleSample:
        return self.sample_batch(rng, 1).sample(0)

    def joint_moment_finite(self, u: float, v: float) -> bool:
        """Whether ``E[T1^u M1^v] < inf`` (declared from the construction)."""
        return True

    def cdf(self, t):
        """Distribution function of the cycle duration, or None if not declared."""
        return None

    def pmf(self) -> dict[int, float] | None:
        """``{k: P(xi = k * span)}`` for arithmetic models."""
        return None

    @property
    def mean_duration_hint(self) -> float:
        km = self.known_moments
        return km.mu if km is not None else 1.0

    def hypotheses(self) -> dict[str, bool]:
        f = self.joint_moment_finite
        return {
            "M1<inf a.s.": True,
            "E[T1]<inf": f(1, 0),
            "E[T1^2]<inf": f(2, 0),
            "E[M1]<inf": f(0, 1),
            "E[M1^2]<inf": f(0, 2),
            "E[T1*M1]<inf": f(1, 1),
        }

    def describe(self) -> dict:
        km = self.known_moments
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "span": self.span,
            "known_moments": None if km is None else {"mu": km.mu, "a": km.a, "sigma2": km.sigma2},
            "hypotheses": self.hypotheses(),
            "constraints": self.constraints,
            "notes": list(self.notes),
        }

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValidationError(f"{name} must be positive and finite, got {value}")


class DeterministicDrift(CycleModel):
    kind = "deterministic_drift"
    summary = "xi = c; path linear from 0 to slope*c (Z(t) = slope*t)"
    constraints = "c > 0"

    def __init__(self, c: float = 1.0, slope: float = 0.0):
        super().__init__(c=c, slope=slope)
        _positive("c", self.params["c"])
        if not math.isfinite(self.params["slope"]):
            raise ValidationError("slope must be finite")
        self.span = self.params["c"]

    @property
    def known_moments(self):
        return KnownMoments(self.params["c"], self.params["slope"], 0.0)

    def sample_batch(self, rng, n):
        c, b = self.params["c"], self.params["slope"]
        xi = np.full(n, c)
        times = np.column_stack([np.zeros(n), xi])
        values = np.column_stack([np.zeros(n), np.full(n, b * c)])
        return CycleBatch(xi, times, values, LINEAR, 0.0, np.ones(n, dtype=np.int64))

    def cdf(self, t):
        return np.where(np.asarray(t) >= self.params["c"], 1.0, 0.0)

    def pmf(self):
        return {1: 1.0}


class LinearToEta(CycleModel):
    kind = "linear_to_eta"
    summary = "xi ~ Exp(rate); path linear from 0 to eta = slope*xi + noise*N(0,1)"
    constraints = "rate > 0, noise >= 0"

    def __init__(self, rate: float = 1.0, slope: float = 1.0, noise: float = 0.0):
        super().__init__(rate=rate, slope=slope, noise=noise)
        _positive("rate", self.params["rate"])
        if not self.params["noise"] >= 0:
            raise ValidationError("noise must be >= 0")

    @property
    def known_moments(self):
        p = self.params
        return KnownMoments(1.0 / p["rate"], p["slope"], p["noise"] ** 2)

    def sample_batch(self, rng, n):
        p = self.params
        xi = _exponential(rng, 1.0 / p["rate"], n)
        eta = p["slope"] * xi
        if p["noise"] > 0:
            eta = eta + p["noise"] * rng.standard_normal(n)
        times = np.column_stack([np.zeros(n), xi])
        values = np.column_stack([np.zeros(n), eta])
        return CycleBatch(xi, times, values, LINEAR)

    def cdf(self, t):
        return -np.expm1(-self.params["rate"] * np.maximum(np.asarray(t, dtype=float), 0.0))


class PoissonCount(CycleModel):
    kind = "poisson_count"
    counting = True
    summary = "xi ~ Exp(lam); Z counts renewals (jump of 1 at the end of each cycle)"
    constraints = "lam > 0"

    def __init__(self, lam: float = 1.0):
        super().__init__(lam=lam)
        _positive("lam", self.params["lam"])

    @property
    def known_moments(self):
        lam = self.params["lam"]
        return KnownMoments(1.0 / lam, lam, 1.0)

    def sample_batch(self, rng, n):
        return _counting_batch(_exponential(rng, 1.0 / self.params["lam"], n))

    def cdf(self, t):
        return -np.expm1(-self.params["lam"] * np.maximum(np.asarray(t, dtype=float), 0.0))


class UniformCount(CycleModel):
    kind = "uniform_count"
    counting = True
    summary = "xi ~ Uniform(0, width]; Z counts renewals"
    constraints = "width > 0"

    def __init__(self, width: float = 2.0):
        super().__init__(width=width)
        _positive("width", self.params["width"])

    @property
    def known_moments(self):
        w = self.params["width"]
        mu = w / 2.0
        return KnownMoments(mu, 1.0 / mu, (w * w / 12.0) / (mu * mu))

    def sample_batch(self, rng, n):
        return _counting_batch(self.params["width"] * (1.0 - rng.random(n)))

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float) / self.params["width"], 0.0, 1.0)


class ArithmeticCount(CycleModel):
    kind = "arithmetic_count"
    counting = True
    summary = "xi = K*span with K ~ pmf on {1, 2, ...}; Z counts renewals"
    constraints = "span > 0; pmf over k >= 1 sums to 1"

    def __init__(self, pmf: Mapping | list | tuple = (1.0,), span: float = 1.0):
        table = _normalize_pmf(pmf)
        super().__init__(span=span)
        _positive("span", self.params["span"])
        self.span = self.params["span"]
        self._pmf = table
        self._ks = np.array(sorted(table), dtype=np.int64)
        self._ps = np.array([table[k] for k in self._ks])

    @property
    def known_moments(self):
        d = self.span
        m1 = d * float(np.dot(self._ks, self._ps))
        m2 = d * d * float(np.dot(self._ks.astype(float) ** 2, self._ps))
        var = max(m2 - m1 * m1, 0.0)
        return KnownMoments(m1, 1.0 / m1, var / (m1 * m1))

    def sample_batch(self, rng, n):
        if len(self._ks) == 1:
            k = np.full(n, self._ks[0])
        else:
            k = self._ks[np.searchsorted(np.cumsum(self._ps), rng.random(n), side="right").clip(max=len(self._ks) - 1)]
        return _counting_batch(k * self.span, steps=k)

    def pmf(self):
        return dict(self._pmf)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.array([sum(p for k, p in self._pmf.items() if k * self.span <= x) for x in np.ravel(t)]).reshape(t.shape)

    def describe(self):
        out = super().describe()
        out["params"]["pmf"] = {str(k): v for k, v in self._pmf.items()}
        return out

    def __repr__(self):
        return f"ArithmeticCount(pmf={self._pmf}, span={self.span:g})"


def _normalize_pmf(pmf) -> dict[int, float]:
    if isinstance(pmf, Mapping):
        items = [(int(k), float(p)) for k, p in pmf.items()]
    else:
        items = [(i + 1, float(p)) for i, p in enumerate(pmf)]
    table = {k: p for k, p in items if p != 0.0}
    if not table:
        raise ValidationError("pmf is empty")
    if any(k < 1 for k in table) or any(not (p >= 0 and math.isfinite(p)) for p in table.values()):
        raise ValidationError("pmf must put non-negative mass on integers k >= 1 only")
    if abs(math.fsum(table.values()) - 1.0) > 1e-12:
        raise ValidationError(f"pmf must sum to 1 (got {math.fsum(table.values())!r})")
    return dict(sorted(table.items()))


class ParetoCounterexample(CycleModel):
    kind = "pareto_counterexample"
    summary = "P(xi > t) = t^-alpha (t >= 1); Z = xi^beta on [1, xi) of each cycle, 0 elsewhere"
    constraints = "alpha > 1, beta > 0"
    notes = ("Z(T_n) = 0 for all n, so a = 0", "E[M1^q] < inf iff q*beta < alpha")

    def __init__(self, alpha: float = 1.5, beta: float = 1.0):
        super().__init__(alpha=alpha, beta=beta)
        if not self.params["alpha"] > 1:
            raise ValidationError("pareto_counterexample requires alpha > 1")
        _positive("beta", self.params["beta"])

    @property
    def known_moments(self):
        al = self.params["alpha"]
        return KnownMoments(al / (al - 1.0), 0.0, 0.0)

    def sample_batch(self, rng, n):
        al, be = self.params["alpha"], self.params["beta"]
        xi = (1.0 - rng.random(n)) ** (-1.0 / al)
        spike = xi > 1.0
        times = np.column_stack([np.zeros(n), np.where(spike, 1.0, np.inf), np.where(spike, xi, np.inf)])
        values = np.column_stack([np.zeros(n), np.where(spike, xi**be, 0.0), np.zeros(n)])
        return CycleBatch(xi, times, values, STEP)

    def joint_moment_finite(self, u, v):
        return u + self.params["beta"] * v < self.params["alpha"]

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 1.0, 1.0 - np.maximum(t, 1.0) ** (-self.params["alpha"]), 0.0)


class HeavySpike(CycleModel):
    kind = "heavy_spike"
    summary = "xi ~ Exp(rate); Z jumps to H at xi/2 and back to 0 at xi, P(H > h) = 1/h (h >= 1)"
    constraints = "rate > 0"
    notes = ("E[M1]=inf, M1<inf a.s.", "weak LLN holds, strong LLN fails")

    def __init__(self, rate: float = 1.0):
        super().__init__(rate=rate)
        _positive("rate", self.params["rate"])

    @property
    def known_moments(self):
        return KnownMoments(1.0 / self.params["rate"], 0.0, 0.0)

    def sample_batch(self, rng, n):
        xi = _exponential(rng, 1.0 / self.params["rate"], n)
        h = 1.0 / (1.0 - rng.random(n))
        times = np.column_stack([np.zeros(n), 0.5 * xi, xi])
        values = np.column_stack([np.zeros(n), h, np.zeros(n)])
        return CycleBatch(xi, times, values, STEP)

    def joint_moment_finite(self, u, v):
        return v < 1

    def cdf(self, t):
        return -np.expm1(-self.params["rate"] * np.maximum(np.asarray(t, dtype=float), 0.0))


class CenteredModel(CycleModel):
    """``Z(t) - a t`` for an underlying model; step paths acquire a linear drift."""

    def __init__(self, base: CycleModel, a: float):
        self.base = base
        self.shift = float(a)
        self.params = dict(base.params)
        self.kind = base.kind
        self.span = base.span
        self.counting = False
        self.summary = f"{base.kind} centred by a={self.shift:g}"

    @property
    def known_moments(self):
        km = self.base.known_moments
        if km is None:
            return None
        return KnownMoments(km.mu, km.a - self.shift, km.sigma2)

    def sample_batch(self, rng, n):
        return self.base.sample_batch(rng, n).with_drift(-self.shift)

    def joint_moment_finite(self, u, v):
        # M_hat <= M + |a| T
        return self.base.joint_moment_finite(u, v) and self.base.joint_moment_finite(u + v, 0)

    def cdf(self, t):
        return self.base.cdf(t)

    def pmf(self):
        return self.base.pmf()

    def __repr__(self):
        return f"CenteredModel({self.base!r}, a={self.shift:g})"


def center_model(model: CycleModel, a: float) -> CenteredModel:
    """Model whose paths are ``path(t) - a t``."""
    return CenteredModel(model, a)


REGISTRY: dict[str, type[CycleModel]] = {
    cls.kind: cls
    for cls in (
        DeterministicDrift,
        LinearToEta,
        PoissonCount,
        UniformCount,
        ArithmeticCount,
        ParetoCounterexample,
        HeavySpike,
    )
}


def make_model(kind: str, **params) -> CycleModel:
    """Build a registered model; parameter errors raise ValidationError."""
    try:
        cls = REGISTRY[kind]
    except KeyError:
        raise ValidationError(f"unknown model kind {kind!r}; known: {sorted(REGISTRY)}") from None
    try:
        return cls(**params)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad parameters for {kind}: {exc}") from None


def sample_cycle(model: CycleModel, rng: np.random.Generator) -> CycleSample:
    return model.sample_cycle(rng)
