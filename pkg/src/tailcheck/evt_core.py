"""GEV primitives, self-normalized top-k spacings and their limiting densities.

All densities are evaluated in log space and exponentiated only by the
public, non-``log_`` functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import ConfigError, DegenerateSpacingsError, DomainError, NumericError

# Below this tail index vstar_density switches to the analytic Gumbel limit.
GAMMA_ZERO_THRESHOLD = 1e-6

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class TailIndex:
    """Nonnegative GEV shape parameter (0 = Gumbel domain, > 0 = Frechet)."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v < 0:
            raise ConfigError(f"tail index must be finite and >= 0, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


def _gamma_value(gamma) -> float:
    if isinstance(gamma, TailIndex):
        return gamma.value
    return TailIndex(gamma).value


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TopKSample:
    """The ``k`` largest observations of a subsample, in nonincreasing order.

    Ties are allowed here; :func:`self_normalize` rejects a zero range.
    """

    values: np.ndarray
    source_size: int | None = None

    def __post_init__(self):
        v = _frozen(np.atleast_1d(np.asarray(self.values, dtype=float)))
        if v.ndim != 1 or v.size < 1:
            raise ConfigError("TopKSample needs a non-empty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise DomainError("TopKSample values must be finite")
        if np.any(np.diff(v) > 0):
            raise ConfigError("TopKSample values must be sorted nonincreasing")
        n0 = self.source_size
        if n0 is not None and n0 < v.size:
            raise ConfigError(f"source_size={n0} is smaller than k={v.size}")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, TopKSample):
            return NotImplemented
        return np.array_equal(self.values, other.values) and self.source_size == other.source_size

    def __repr__(self):
        return f"TopKSample(values={self.values.tolist()!r}, source_size={self.source_size})"


@dataclass(frozen=True, eq=False)
class SelfNormalizedSpacings:
    """Top-k vector shifted by its k-th entry and scaled by its range.

    First entry is exactly 1, last exactly 0, entries nonincreasing in [0, 1].
    """

    vstar: np.ndarray

    def __post_init__(self):
        v = _frozen(np.asarray(self.vstar, dtype=float))
        if v.ndim != 1:
            raise ConfigError("spacings must be a 1-d vector")
        if v.size < 3:
            raise ConfigError(f"k must be >= 3, got k={v.size}")
        if v[0] != 1.0 or v[-1] != 0.0:
            raise ConfigError("spacings must start at exactly 1 and end at exactly 0")
        if np.any(np.diff(v) > 0) or np.any(v < 0) or np.any(v > 1):
            raise ConfigError("spacings must be nonincreasing within [0, 1]")
        object.__setattr__(self, "vstar", v)

    @property
    def k(self) -> int:
        return int(self.vstar.size)

    def __eq__(self, other):
        if not isinstance(other, SelfNormalizedSpacings):
            return NotImplemented
        return np.array_equal(self.vstar, other.vstar)

    def __repr__(self):
        return f"SelfNormalizedSpacings(vstar={self.vstar.tolist()!r})"


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("GEV argument must be finite")
    return x


def _log_gev_cdf(g: float, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if g == 0.0:
            return -np.exp(-x)
        z = 1.0 + g * x
        out = -np.exp(-np.log1p(g * x) / g)
        return np.where(z > 0, out, -np.inf)


def _log_gev_pdf(g: float, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if g == 0.0:
            return -x - np.exp(-x)
        z = 1.0 + g * x
        lz = np.log1p(g * x)
        out = -(1.0 + 1.0 / g) * lz - np.exp(-lz / g)
        return np.where(z > 0, out, -np.inf)


def _scalar_or_array(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


def gev_cdf(gamma, x):
    """GEV distribution function ``G_gamma(x)``; 0 left of the support."""
    g = _gamma_value(gamma)
    xa = _check_finite(x)
    return _scalar_or_array(x, np.exp(_log_gev_cdf(g, xa)))


def gev_sf(gamma, x):
    """Survival function ``1 - G_gamma(x)``, accurate far into the right tail."""
    g = _gamma_value(gamma)
    xa = _check_finite(x)
    return _scalar_or_array(x, -np.expm1(_log_gev_cdf(g, xa)))


def gev_pdf(gamma, x):
    """GEV density ``dG_gamma/dx``; 0 outside the support."""
    g = _gamma_value(gamma)
    xa = _check_finite(x)
    return _scalar_or_array(x, np.exp(_log_gev_pdf(g, xa)))


def log_joint_topk_density(gamma, v) -> float:
    """Log of the joint limiting density of the top-k normalized order statistics."""
    g = _gamma_value(gamma)
    v = np.atleast_1d(_check_finite(v))
    if v.ndim != 1 or v.size < 1:
        raise ConfigError("joint density needs k >= 1")
    if np.any(np.diff(v) > 0):
        return -np.inf
    if g == 0.0:
        ratio = -v
    else:
        z = 1.0 + g * v
        if np.any(z <= 0):
            return -np.inf
        ratio = -(1.0 + 1.0 / g) * np.log1p(g * v)
    return float(_log_gev_cdf(g, v[-1]) + ratio.sum())


def joint_topk_density(gamma, v) -> float:
    """Joint density ``G(v_k) * prod_j g(v_j) / G(v_j)`` on ``v_1 >= ... >= v_k``.

    Zero when the ordering is violated or a coordinate leaves the support.
    """
    return float(np.exp(log_joint_topk_density(gamma, v)))


def self_normalize(sample) -> SelfNormalizedSpacings:
    """Map a top-k vector to ``(x_j - x_k) / (x_1 - x_k)``.

    Accepts a :class:`TopKSample` or anything convertible to one. The result
    is invariant under ``x -> a*x + b`` for ``a > 0``.
    """
    if not isinstance(sample, TopKSample):
        sample = TopKSample(sample)
    x = sample.values
    if x.size < 3:
        raise ConfigError(f"k must be >= 3, got k={x.size}")
    span = x[0] - x[-1]
    if not span > 0:
        raise DegenerateSpacingsError(
            "top-k values have zero range (ties in the tail); the continuous-tail "
            "premise is violated"
        )
    v = (x - x[-1]) / span
    v[0] = 1.0
    v[-1] = 0.0
    return SelfNormalizedSpacings(v)


def log_vstar_density_gumbel(vstar) -> float:
    """Closed-form log density of the spacings at tail index zero.

    ``log[Gamma(k) Gamma(k-1) (sum_j v*_j)^-(k-1)]``.
    """
    v = vstar.vstar if isinstance(vstar, SelfNormalizedSpacings) else np.asarray(vstar, float)
    k = v.size
    return float(gammaln(k) + gammaln(k - 1) - (k - 1) * np.log(v.sum()))


def _mode_log_u(g: float, v: np.ndarray, k: int) -> float:
    """Newton iteration for the maximiser of the (concave) log integrand in log u."""
    c = 1.0 + 1.0 / g
    s = np.log((k - 1) / v.sum())
    for _ in range(200):
        z = g * v * np.exp(s)
        w = z / (1.0 + z)
        d1 = (k - 1) - c * w.sum()
        d2 = -c * (w / (1.0 + z)).sum()
        step = d1 / d2
        step = float(np.clip(step, -5.0, 5.0))
        s -= step
        if abs(step) < 1e-12:
            break
    return float(s)


def divergence_index(vstar) -> float:
    """Smallest tail index at which the spacing density is infinite.

    With ``m`` nonzero entries among ``v*_1..v*_{k-1}`` the integrand decays
    like ``u^(k-2-m(1+1/g))``, so the integral diverges once
    ``g >= m / (k-1-m)``. Only ties at the k-th value make ``m < k-1``.
    """
    v = np.asarray(vstar.vstar if isinstance(vstar, SelfNormalizedSpacings) else vstar, float)
    k = v.shape[-1]
    m = np.count_nonzero(v[..., :-1] > 0, axis=-1)
    with np.errstate(divide="ignore"):
        out = np.where(m < k - 1, m / np.maximum(k - 1 - m, 1), np.inf)
    return float(out) if out.ndim == 0 else out


def log_vstar_density(gamma, spacings: SelfNormalizedSpacings) -> float:
    """Log density of the self-normalized spacings under tail index ``gamma``.

    For ``gamma >= 1e-6`` the integral over ``u`` is mapped to ``[0, 1)`` via
    ``u = t / (1 - t)`` and handed to adaptive Gauss-Kronrod quadrature
    (QUADPACK). Smaller indices use the analytic Gumbel limit.
    """
    g = _gamma_value(gamma)
    if not isinstance(spacings, SelfNormalizedSpacings):
        spacings = SelfNormalizedSpacings(spacings)
    if g < GAMMA_ZERO_THRESHOLD:
        return log_vstar_density_gumbel(spacings)

    if g >= divergence_index(spacings):
        raise DegenerateSpacingsError(
            f"spacings density is unbounded at gamma={g}: too many ties at the k-th value"
        )
    v = spacings.vstar[:-1]  # last entry contributes log1p(0) = 0
    k = spacings.k
    c = 1.0 + 1.0 / g
    s_mode = _mode_log_u(g, v, k)
    u_mode = np.exp(s_mode)
    # integrand max in u sits near the s-mode; used only as an overflow guard
    shift = (k - 2) * s_mode - c * np.log1p(g * v * u_mode).sum()

    def integrand(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        u = t / (1.0 - t)
        lf = (k - 2) * np.log(u) - c * np.log1p(g * v * u).sum() - shift
        return np.exp(lf) / (1.0 - t) ** 2

    t_mode = u_mode / (1.0 + u_mode)
    res, err, info, *rest = integrate.quad(
        integrand, 0.0, 1.0, points=[t_mode], epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL, limit=400, full_output=1,
    )
    if rest or not res > 0:
        raise NumericError(
            f"vstar density quadrature did not converge at gamma={g}", err / res if res else err
        )
    return float(gammaln(k) + np.log(res) + shift)


def vstar_density(gamma, spacings: SelfNormalizedSpacings) -> float:
    """Density of the self-normalized spacings under tail index ``gamma``."""
    return float(np.exp(log_vstar_density(gamma, spacings)))
