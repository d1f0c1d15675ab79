"""Weighted likelihood-ratio statistic, null simulation, critical values and p-values.

The statistic compares the spacing density averaged over a weight on the
tail index against the Gumbel (index zero) density::

    LR(v*) = int f(v* | g) w(g) dg / f(v* | 0)

Null draws come from the Poisson-arrival representation of the fixed-k
extreme-value limit, ``V_j = -log(E_1 + ... + E_j)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gammaln

from . import rng as _rng
from .errors import ConfigError, DegenerateSpacingsError, NumericError
from .evt_core import SelfNormalizedSpacings, TailIndex, divergence_index

DEFAULT_SEED = 20251103
DEFAULT_DRAWS = 10_000
MIN_DRAWS = 1000

TABLE_K = (10, 25, 50, 70, 100)
TABLE_ALPHA = (0.10, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01)

CV_CSV_VERSION = "tailcheck-cv/1"

# trapezoid tails are cut once the log integrand drops this far below its peak
_TAIL_DROP = 40.0
_EXTEND = 10.0
_MAX_EXTENSIONS = 60
_CHUNK = 128


@dataclass(frozen=True)
class WeightSpec:
    """Uniform weight over tail indices in ``[lower, upper]``, integrated by
    ``nodes``-point Gauss-Legendre quadrature."""

    kind: str = "uniform_on_interval"
    lower: float = 0.0
    upper: float = 1.0
    nodes: int = 50

    def __post_init__(self):
        if self.kind != "uniform_on_interval":
            raise ConfigError(f"unsupported weight kind {self.kind!r}")
        lo, hi = float(self.lower), float(self.upper)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi <= lo:
            raise ConfigError(f"weight interval must satisfy 0 <= lower < upper, got [{lo}, {hi}]")
        if int(self.nodes) < 2:
            raise ConfigError("weight quadrature needs at least 2 nodes")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "nodes", int(self.nodes))

    @property
    def density(self) -> float:
        return 1.0 / (self.upper - self.lower)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights of ``int . w(g) dg``; weights sum to 1."""
        return _gl_rule(self.lower, self.upper, self.nodes)


@lru_cache(maxsize=32)
def _gl_rule(lower: float, upper: float, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (upper - lower)
    g = lower + half * (x + 1.0)
    wt = w * half / (upper - lower)
    g.setflags(write=False)
    wt.setflags(write=False)
    return g, wt


@dataclass(frozen=True)
class TestConfig:
    """Everything needed to turn spacings into a decision."""

    __test__ = False  # not a pytest class

    k: int
    alpha: float = 0.05
    weight: WeightSpec = field(default_factory=WeightSpec)
    null_draws: int = DEFAULT_DRAWS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        _check_k(self.k)
        _check_alpha(self.alpha)
        _check_draws(self.null_draws)
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    p_value: float
    critical_value: float
    reject: bool
    k_used: int
    n_subsample: int | None
    tail: str
    alpha: float
    plug_in: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _check_k(k):
    if int(k) != k or k < 3:
        raise ConfigError(f"k must be an integer >= 3, got {k!r}")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_draws(draws):
    if int(draws) != draws or draws < MIN_DRAWS:
        raise ConfigError(f"draws must be an integer >= {MIN_DRAWS}, got {draws!r}")


# ---------------------------------------------------------------------------
# statistic
# ---------------------------------------------------------------------------


def _as_matrix(spacings) -> np.ndarray:
    if isinstance(spacings, SelfNormalizedSpacings):
        return spacings.vstar[None, :]
    V = np.atleast_2d(np.asarray(spacings, dtype=float))
    if V.ndim != 2 or V.shape[1] < 3:
        raise ConfigError("spacings matrix must have shape (n, k) with k >= 3")
    if (
        np.any(V[:, 0] != 1.0)
        or np.any(V[:, -1] != 0.0)
        or np.any(np.diff(V, axis=1) > 0)
        or np.any(V < 0)
    ):
        raise ConfigError("every row must be valid self-normalized spacings")
    return V


def _base_grid(k: int, weight: WeightSpec) -> tuple[int, int, float]:
    """Step and initial node range (in steps from 0) of the ``log t`` grid."""
    gammas, _ = weight.quadrature()
    h = min(0.25, 0.5 / math.sqrt(k - 1))
    lo = math.log(gammas[0]) - _TAIL_DROP / (k - 1) - 1.0
    hi = math.log(gammas[-1]) + 3.0 + _TAIL_DROP / (k - 1)
    return math.floor(lo / h), math.ceil(hi / h), h


def _log_integrand(V, x, log_scale, gammas, log_w, k):
    """Log of the gamma-averaged integrand on the per-row grid ``t = scale * e^x``."""
    s = log_scale[:, None] + x[None, :]
    t = np.exp(s)
    S = np.zeros_like(t)
    for j in range(k - 1):  # last spacing is 0 and contributes nothing
        S += np.log1p(V[:, j : j + 1] * t)
    a = (log_w - (k - 1) * np.log(gammas))[None, None, :] - S[:, :, None] / gammas[None, None, :]
    amax = a.max(axis=2)
    mix = amax + np.log(np.exp(a - amax[:, :, None]).sum(axis=2))
    return (k - 1) * s - S + mix


def _log_lr_rows(V: np.ndarray, weight: WeightSpec) -> np.ndarray:
    n, k = V.shape
    gammas, wts = weight.quadrature()
    log_w = np.log(wts)
    n_lo, n_hi, h = _base_grid(k, weight)
    sig = V.sum(axis=1)
    log_scale = np.log((k - 1) / sig)

    out = np.full(n, np.nan)
    ext_lo = np.zeros(n, dtype=int)
    ext_hi = np.zeros(n, dtype=int)
    pending = np.arange(n)
    step = int(round(_EXTEND / h))
    for _ in range(_MAX_EXTENSIONS):
        if pending.size == 0:
            break
        # rows sharing an extension state are evaluated together
        keys = np.stack([ext_lo[pending], ext_hi[pending]], axis=1)
        still = []
        for key in np.unique(keys, axis=0):
            rows = pending[np.all(keys == key, axis=1)]
            x = h * np.arange(n_lo - key[0] * step, n_hi + key[1] * step + 1)
            for a in range(0, rows.size, _CHUNK):
                r = rows[a : a + _CHUNK]
                e = _log_integrand(V[r], x, log_scale[r], gammas, log_w, k)
                emax = e.max(axis=1)
                bad_lo = e[:, 0] > emax - _TAIL_DROP
                bad_hi = e[:, -1] > emax - _TAIL_DROP
                ok = ~(bad_lo | bad_hi)
                lse = emax + np.log(np.exp(e - emax[:, None]).sum(axis=1))
                out[r[ok]] = lse[ok] + math.log(h)
                ext_lo[r[bad_lo]] += 1
                ext_hi[r[bad_hi]] += 1
                still.append(r[~ok])
        pending = np.concatenate(still) if still else np.array([], dtype=int)
    if pending.size:
        raise NumericError("likelihood-ratio integral tails did not decay", float(pending.size))
    return out - gammaln(k - 1) + (k - 1) * np.log(sig)


def log_lr_statistics(spacings, weight: WeightSpec | None = None) -> np.ndarray:
    """Vectorised log LR statistic for a batch of spacings (rows of an ``(n, k)`` array).

    The weighted mixture over tail indices is exchanged with the integral over
    ``t = g*u``, leaving one smooth integral per row in ``log t``. It is
    evaluated with the trapezoid rule, which converges geometrically for
    such integrands; the grid is extended until both tails fall ``e^-40``
    below the peak. Rows are processed independently, so a row's value does
    not depend on the batch it came in.
    """
    weight = weight or WeightSpec()
    V = _as_matrix(spacings)
    bad = np.flatnonzero(divergence_index(V) < weight.upper)
    if bad.size:
        raise DegenerateSpacingsError(
            f"row {int(bad[0])}: ties at the k-th value make the weighted spacing density "
            "unbounded, so the likelihood ratio is infinite"
        )
    return _log_lr_rows(V, weight)


def lr_statistic(spacings, weight: WeightSpec | None = None) -> float:
    """Weighted likelihood ratio for one set of spacings (strictly positive)."""
    if not isinstance(spacings, SelfNormalizedSpacings):
        spacings = SelfNormalizedSpacings(spacings)
    return float(np.exp(log_lr_statistics(spacings, weight)[0]))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _arrival_topk(k: int, gen: np.random.Generator, gamma: float) -> np.ndarray:
    arrivals = np.cumsum(gen.standard_exponential(k))
    if gamma == 0.0:
        return -np.log(arrivals)
    return np.expm1(-gamma * np.log(arrivals)) / gamma


def _arrival_spacings(k: int, gen: np.random.Generator, gamma: float) -> np.ndarray:
    v = _arrival_topk(k, gen, gamma)
    v = (v - v[-1]) / (v[0] - v[-1])
    v[0], v[-1] = 1.0, 0.0
    return v


def simulate_topk(k: int, rng_stream: np.random.Generator, gamma=0.0) -> np.ndarray:
    """Unnormalized limit top-k vector ``(V_1 >= ... >= V_k)``; ``V_1 ~ G_gamma``."""
    if int(k) != k or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    return _arrival_topk(int(k), rng_stream, TailIndex(gamma).value)


def simulate_spacings(k: int, rng_stream: np.random.Generator, gamma=0.0) -> SelfNormalizedSpacings:
    """One draw of the fixed-k limit spacings under tail index ``gamma``.

    Uses ``V_j = (Gamma_j^-g - 1) / g`` (``-log Gamma_j`` at ``g = 0``) with
    ``Gamma_j`` the partial sums of standard exponentials.
    """
    _check_k(k)
    g = TailIndex(gamma).value
    return SelfNormalizedSpacings(_arrival_spacings(k, rng_stream, g))


def simulate_null_spacings(k: int, rng_stream: np.random.Generator) -> SelfNormalizedSpacings:
    """One draw of the spacings under the Gumbel null."""
    return simulate_spacings(k, rng_stream, 0.0)


def simulate_spacings_matrix(k: int, draws: int, seed: int, gamma=0.0, tag: int | None = None,
                             workers: int = 1) -> np.ndarray:
    """``draws`` spacings, row ``i`` drawn from its own stream ``(seed, tag, k, i)``."""
    _check_k(k)
    g = TailIndex(gamma).value
    if tag is None:
        tag = _rng.NULL_DRAWS if g == 0.0 else _rng.ALT_DRAWS
    # alternatives at different indices get different streams
    gkey = int(np.float64(g).view(np.uint64))

    def block(bounds):
        a, b = bounds
        return np.stack([
            _arrival_spacings(k, _rng.stream(seed, tag, k, gkey, i), g) for i in range(a, b)
        ])

    parts = _rng.ordered_map(block, _rng.chunk_ranges(draws, 1000), workers)
    return np.concatenate(parts)


@lru_cache(maxsize=64)
def _null_sample(k: int, draws: int, seed: int, weight: WeightSpec, workers: int = 1) -> np.ndarray:
    V = simulate_spacings_matrix(k, draws, seed, 0.0, workers=workers)
    parts = _rng.ordered_map(
        lambda ab: log_lr_statistics(V[ab[0] : ab[1]], weight),
        _rng.chunk_ranges(draws, 1000),
        workers,
    )
    sample = np.sort(np.exp(np.concatenate(parts)))
    sample.setflags(write=False)
    return sample


def null_statistics(k: int, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
                    weight: WeightSpec | None = None, workers: int = 1) -> np.ndarray:
    """Sorted LR statistics of ``draws`` simulated null spacings (cached, read-only).

    Critical values and p-values for the same ``(k, draws, seed, weight)``
    share this sample.
    """
    _check_k(k)
    _check_draws(draws)
    return _null_sample(int(k), int(draws), int(seed), weight or WeightSpec(), int(workers))


def _quantile_index(alpha: float, draws: int) -> int:
    # 0-based index of the ceil((1 - alpha) * draws)-th order statistic
    return max(math.ceil((1.0 - alpha) * draws - 1e-9), 1) - 1


def critical_value(k: int, alpha: float, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
                   weight: WeightSpec | None = None) -> float:
    """Empirical ``1 - alpha`` quantile of the simulated null LR distribution."""
    _check_alpha(alpha)
    sample = null_statistics(k, draws, seed, weight)
    return float(sample[_quantile_index(alpha, draws)])


def critical_value_se(k: int, alpha: float, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
                      weight: WeightSpec | None = None) -> float:
    """Distribution-free Monte Carlo standard error of :func:`critical_value`.

    Half the distance between the order statistics one binomial standard
    deviation either side of the quantile rank.
    """
    _check_alpha(alpha)
    sample = null_statistics(k, draws, seed, weight)
    m = _quantile_index(alpha, draws)
    s = math.sqrt(draws * alpha * (1.0 - alpha))
    lo = max(int(math.floor(m - s)), 0)
    hi = min(int(math.ceil(m + s)), draws - 1)
    return float(sample[hi] - sample[lo]) / 2.0


def p_value(statistic: float, k: int, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
            weight: WeightSpec | None = None) -> float:
    """``(1 + #{null LR >= statistic}) / (draws + 1)``."""
    if math.isnan(statistic):
        raise ConfigError("statistic must not be NaN")
    sample = null_statistics(k, draws, seed, weight)
    n_ge = draws - int(np.searchsorted(sample, statistic, side="left"))
    return (1 + n_ge) / (draws + 1)


def decide(spacings, config: TestConfig, tail: str = "right", n_subsample: int | None = None,
           plug_in: bool = False) -> TestResult:
    """Statistic, critical value and p-value bundled into a :class:`TestResult`."""
    if not isinstance(spacings, SelfNormalizedSpacings):
        spacings = SelfNormalizedSpacings(spacings)
    if spacings.k != config.k:
        raise ConfigError(f"spacings have k={spacings.k} but config has k={config.k}")
    stat = lr_statistic(spacings, config.weight)
    cv = critical_value(config.k, config.alpha, config.null_draws, config.seed, config.weight)
    p = p_value(stat, config.k, config.null_draws, config.seed, config.weight)
    return TestResult(
        statistic=stat, p_value=p, critical_value=cv, reject=bool(stat > cv), k_used=config.k,
        n_subsample=n_subsample, tail=tail, alpha=config.alpha, plug_in=plug_in,
    )


# ---------------------------------------------------------------------------
# critical value tables
# ---------------------------------------------------------------------------


@dataclass
class CriticalValueTable:
    entries: dict[tuple[int, float], float]
    draws: int
    seed: int

    def ks(self) -> list[int]:
        return sorted({k for k, _ in self.entries})

    def alphas(self) -> list[float]:
        return sorted({a for _, a in self.entries}, reverse=True)

    def __getitem__(self, key: tuple[int, float]) -> float:
        return self.entries[key]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {CV_CSV_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "alpha", "cv", "draws", "seed"])
        for k in self.ks():
            for a in self.alphas():
                if (k, a) in self.entries:
                    w.writerow([k, repr(a), repr(self.entries[(k, a)]), self.draws, self.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CriticalValueTable":
        lines = text.splitlines()
        if not lines or lines[0].strip() != f"# {CV_CSV_VERSION}":
            raise ConfigError(f"not a {CV_CSV_VERSION} critical-value file")
        rows = list(csv.DictReader(lines[1:]))
        if not rows:
            raise ConfigError("critical-value file has no rows")
        entries = {(int(r["k"]), float(r["alpha"])): float(r["cv"]) for r in rows}
        draws = {int(r["draws"]) for r in rows}
        seeds = {int(r["seed"]) for r in rows}
        if len(draws) != 1 or len(seeds) != 1:
            raise ConfigError("critical-value file mixes draws or seeds")
        return cls(entries, draws.pop(), seeds.pop())

    def to_text(self) -> str:
        """Aligned table with one row per k and one column per alpha."""
        alphas = self.alphas()
        head = "k \\ alpha " + " ".join(f"{a:>6.2f}" for a in alphas)
        lines = [head, "-" * len(head)]
        for k in self.ks():
            cells = " ".join(
                f"{self.entries[(k, a)]:>6.2f}" if (k, a) in self.entries else f"{'':>6}"
                for a in alphas
            )
            lines.append(f"{k:<9d} {cells}")
        return "\n".join(lines) + "\n"


def critical_value_table(ks: Iterable[int] = TABLE_K, alphas: Iterable[float] = TABLE_ALPHA,
                         draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
                         weight: WeightSpec | None = None) -> CriticalValueTable:
    entries: dict[tuple[int, float], float] = {}
    for k in ks:
        for a in alphas:
            entries[(int(k), float(a))] = critical_value(k, a, draws, seed, weight)
    return CriticalValueTable(entries, int(draws), int(seed))


def combined_p(p_values: Iterable[float] | Mapping, n_tests: int | None = None) -> float:
    """Bonferroni combination ``min(1, m * min p)``."""
    ps = list(p_values.values() if isinstance(p_values, Mapping) else p_values)
    if not ps:
        raise ConfigError("no p-values to combine")
    m = len(ps) if n_tests is None else n_tests
    return min(1.0, m * min(ps))
