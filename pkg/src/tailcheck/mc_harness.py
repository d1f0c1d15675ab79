"""Simulation designs and rejection-rate studies for the tail test.

Designs (``b`` Bernoulli(0.5), ``a_i ~ U(0, 1)``)::

    cross_section   Y_i  = 1{X_i + N_i + b_i - e_i >= 0}
    static_panel    Y_it = 1{X_it + N_it + b_it + a_i - e_it >= 0}
    dynamic_panel   Y_it = 1{X_it + Y_i,t-1 + N_it + b_it + a_i - e_it >= 0}

with ``Y_i0`` drawn from the static design. Random draws per replication are
taken in a fixed order from that replication's own stream: ``a`` (panels),
then for each period ``X``, ``N``, ``b``, ``e``.

Distribution strings: ``normal``, ``logistic``, ``student_t(df)``,
``pareto(shape)`` (``P(X > x) = x^-shape`` on ``x >= 1``, tail index
``1/shape``) and ``point(c)`` (a point mass, for degenerate checks).
Student-t draws are ``Z / sqrt(G / df)`` with ``Z`` standard normal and
``G = 2 * Gamma(df / 2)`` a chi-square variate. Logistic draws use numpy's
inverse-CDF ``Generator.logistic``.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import diagnostics, lr_test
from . import rng as _rng
from .diagnostics import BinaryDataset, TailTestRequest
from .errors import ConfigError, InsufficientTailError
from .lr_test import TestConfig

DESIGNS = ("cross_section", "static_panel", "dynamic_panel")

_DIST_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$")


@dataclass(frozen=True)
class Dist:
    kind: str
    param: float | None = None

    @classmethod
    def parse(cls, text: "str | Dist") -> "Dist":
        if isinstance(text, Dist):
            return text
        m = _DIST_RE.match(str(text).lower())
        if not m:
            raise ConfigError(f"cannot parse distribution {text!r}")
        kind, arg = m.group(1), m.group(2)
        kind = {"t": "student_t", "gaussian": "normal"}.get(kind, kind)
        param = float(arg) if arg is not None else None
        if kind in ("normal", "logistic"):
            if param is not None:
                raise ConfigError(f"{kind} takes no parameter")
        elif kind in ("student_t", "pareto"):
            if param is None or not param > 0:
                raise ConfigError(f"{kind} needs a positive parameter, got {text!r}")
        elif kind == "point":
            if param is None:
                raise ConfigError("point needs a location")
        else:
            raise ConfigError(f"unknown distribution {kind!r}")
        return cls(kind, param)

    def __str__(self):
        if self.param is None:
            return self.kind
        return f"{self.kind}({self.param:g})"

    def draw(self, gen: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            return gen.standard_normal(size)
        if self.kind == "logistic":
            return gen.logistic(size=size)
        if self.kind == "student_t":
            z = gen.standard_normal(size)
            chi2 = 2.0 * gen.standard_gamma(self.param / 2.0, size)
            return z / np.sqrt(chi2 / self.param)
        if self.kind == "pareto":
            return (1.0 - gen.random(size)) ** (-1.0 / self.param)
        return np.full(size, self.param)


@dataclass(frozen=True)
class DgpSpec:
    design: str = "cross_section"
    n: int = 2000
    T: int = 1
    error_dist: str = "normal"
    dominating_dist: str = "student_t(2)"
    include_lag: bool | None = None
    auxiliary: bool = True
    binary_p: float = 0.5
    seed: int = lr_test.DEFAULT_SEED

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ConfigError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.n < 1 or self.T < 1:
            raise ConfigError("n and T must be >= 1")
        if self.design == "cross_section" and self.T != 1:
            raise ConfigError("cross-section designs have T = 1")
        lag = self.design == "dynamic_panel" if self.include_lag is None else bool(self.include_lag)
        if lag != (self.design == "dynamic_panel"):
            raise ConfigError("include_lag is only valid for (and implied by) dynamic_panel")
        object.__setattr__(self, "include_lag", lag)
        object.__setattr__(self, "error_dist", str(Dist.parse(self.error_dist)))
        object.__setattr__(self, "dominating_dist", str(Dist.parse(self.dominating_dist)))

    @property
    def is_panel(self) -> bool:
        return self.design != "cross_section"


def _period(spec: DgpSpec, gen, dom: Dist, err: Dist, shift):
    n = spec.n
    x = dom.draw(gen, n)
    index = x + shift
    if spec.auxiliary:
        index = index + gen.standard_normal(n)
        index = index + (gen.random(n) < spec.binary_p)
    eps = err.draw(gen, n)
    return x, (index - eps >= 0).astype(np.int8)


def generate(spec: DgpSpec, rng: np.random.Generator | None = None) -> BinaryDataset:
    """One simulated dataset; panels come back in long format sorted by (unit, period)."""
    gen = rng if rng is not None else _rng.stream(spec.seed, _rng.MC_REPLICATION)
    dom, err = Dist.parse(spec.dominating_dist), Dist.parse(spec.error_dist)
    if spec.design == "cross_section":
        x, y = _period(spec, gen, dom, err, 0.0)
        return BinaryDataset(y, x)

    n, T = spec.n, spec.T
    alpha_i = gen.random(n)
    ys = np.empty((n, T), dtype=np.int8)
    xs = np.empty((n, T))
    prev = None
    if spec.include_lag:
        _, prev = _period(spec, gen, dom, err, alpha_i)
    for t in range(T):
        shift = alpha_i if prev is None else alpha_i + prev
        xs[:, t], ys[:, t] = _period(spec, gen, dom, err, shift)
        if spec.include_lag:
            prev = ys[:, t]
    unit = np.repeat(np.arange(n), T)
    period = np.tile(np.arange(1, T + 1), n)
    return BinaryDataset(ys.ravel(), xs.ravel(), unit=unit, period=period)


@dataclass(frozen=True)
class ExperimentGrid:
    dgps: tuple
    k_values: tuple = (10, 25, 50, 70)
    alpha: float = 0.05
    replications: int = 2000
    tails: tuple = ("left", "right", "both")
    seed: int = lr_test.DEFAULT_SEED
    null_draws: int = lr_test.DEFAULT_DRAWS
    weight: lr_test.WeightSpec = field(default_factory=lr_test.WeightSpec)

    def __post_init__(self):
        object.__setattr__(self, "dgps", tuple(self.dgps))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "tails", tuple(self.tails))
        if self.replications < 100:
            raise ConfigError("replications must be >= 100")
        if not self.dgps or not self.k_values or not self.tails:
            raise ConfigError("grid needs at least one dgp, k and tail")
        for t in self.tails:
            if t not in diagnostics.TAILS:
                raise ConfigError(f"unknown tail {t!r}")
        for k in self.k_values:
            TestConfig(k=k, alpha=self.alpha, null_draws=self.null_draws, seed=self.seed)


@dataclass
class RejectionTable:
    """Rejection counts keyed by ``(error_dist, n, k, tail)`` for one design."""

    design: str
    counts: dict[tuple, int]
    valid: dict[tuple, int]
    replications: int
    seed: int
    T: int = 1

    def rate(self, error_dist, n, k, tail) -> float:
        key = (str(Dist.parse(error_dist)), n, k, tail)
        return self.counts[key] / self.valid[key] if self.valid[key] else float("nan")

    @property
    def rates(self) -> dict[tuple, float]:
        return {key: self.rate(*key) for key in self.counts}

    def failures(self, key) -> int:
        return self.replications - self.valid[key]

    @property
    def flagged(self) -> list[tuple]:
        """Cells where at least one replication could not be tested."""
        return [key for key in self.counts if self.failures(key)]

    def mc_se(self, error_dist, n, k, tail) -> float:
        p = self.rate(error_dist, n, k, tail)
        key = (str(Dist.parse(error_dist)), n, k, tail)
        return float(np.sqrt(p * (1 - p) / max(self.valid[key], 1)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["design", "error_dist", "n", "T", "k", "tail", "rate", "rejections",
                    "replications", "failures", "seed"])
        for key in self.counts:
            dist, n, k, tail = key
            w.writerow([self.design, dist, n, self.T, k, tail, repr(self.rate(*key)),
                        self.counts[key], self.replications, self.failures(key), self.seed])
        return buf.getvalue()

    def to_text(self) -> str:
        """Aligned layout: one row per (error_dist, n), Left/Right/Both per k."""
        ks = sorted({key[2] for key in self.counts})
        tails = [t for t in ("left", "right", "both") if any(key[3] == t for key in self.counts)]
        rows = list(dict.fromkeys((key[0], key[1]) for key in self.counts))
        w = 6
        head1 = f"{'dist':<14}{'n':>7}  " + "".join(
            f"{('k=' + str(k)):^{w * len(tails)}}" for k in ks)
        head2 = f"{'':<14}{'':>7}  " + "".join(
            "".join(f"{t.capitalize():>{w}}" for t in tails) for _ in ks)
        lines = [head1, head2, "-" * len(head2)]
        last = None
        for dist, n in rows:
            label = dist if dist != last else ""
            last = dist
            cells = []
            for k in ks:
                for t in tails:
                    key = (dist, n, k, t)
                    if key in self.counts:
                        flag = "*" if self.failures(key) else " "
                        cells.append(f"{self.rate(*key):>{w - 1}.2f}{flag}")
                    else:
                        cells.append(" " * w)
            lines.append(f"{label:<14}{n:>7}  " + "".join(cells))
        if self.flagged:
            lines.append("* cell had replications with too few tail observations")
        return "\n".join(lines) + "\n"


def _replication_outcomes(data: BinaryDataset, spec: DgpSpec, grid: ExperimentGrid):
    """Reject flags for every (k, tail) on one dataset; None when untestable."""
    out = {}
    for k in grid.k_values:
        cfg = TestConfig(k=k, alpha=grid.alpha, weight=grid.weight, null_draws=grid.null_draws,
                         seed=grid.seed)
        for tail in grid.tails:
            req = TailTestRequest(tail, k, cfg)
            try:
                if spec.is_panel:
                    res = diagnostics.run_panel_test(data, req)
                    ok = not res.skipped
                    out[(k, tail)] = res.reject if ok else None
                else:
                    res = diagnostics.run_tail_test(data, req)
                    out[(k, tail)] = res.reject
            except InsufficientTailError:
                out[(k, tail)] = None
    return out


def rejection_study(grid: ExperimentGrid, workers: int = 1) -> RejectionTable:
    """Rejection frequencies over ``grid.replications`` simulated datasets per design.

    Replication ``r`` of design ``c`` uses the stream ``(seed, c, r)``, so the
    table is bit-identical for any ``workers``. Replications where a tail
    (or, for panels, any period) is too thin are excluded from that cell's
    denominator and the cell is reported as flagged.
    """
    designs = {d.design for d in grid.dgps}
    Ts = {d.T for d in grid.dgps}
    if len(designs) != 1 or len(Ts) != 1:
        raise ConfigError("one RejectionTable covers a single design and T")
    for k in grid.k_values:
        for a in (grid.alpha, grid.alpha / 2):
            lr_test.critical_value(k, a, grid.null_draws, grid.seed, grid.weight)

    counts: dict[tuple, int] = {}
    valid: dict[tuple, int] = {}
    for c, spec in enumerate(grid.dgps):
        def one(r, c=c, spec=spec):
            data = generate(spec, _rng.stream(grid.seed, _rng.MC_REPLICATION, c, r))
            return _replication_outcomes(data, spec, grid)

        outcomes = _rng.ordered_map(one, range(grid.replications), workers)
        for k in grid.k_values:
            for tail in grid.tails:
                key = (spec.error_dist, spec.n, k, tail)
                flags = [o[(k, tail)] for o in outcomes]
                counts[key] = counts.get(key, 0) + sum(1 for f in flags if f)
                valid[key] = valid.get(key, 0) + sum(1 for f in flags if f is not None)
    return RejectionTable(designs.pop(), counts, valid, grid.replications, grid.seed, Ts.pop())


def full_grid(design: str, replications: int = 2000, ns: Iterable[int] = (1000, 2000, 5000),
             errors: Iterable[str] = ("normal", "logistic", "student_t(2)", "student_t(1)"),
             k_values=(10, 25, 50, 70), seed: int = lr_test.DEFAULT_SEED) -> ExperimentGrid:
    """Every n x error-distribution cell of a design, at the default replication count."""
    T = 1 if design == "cross_section" else 2
    dgps = [DgpSpec(design=design, n=n, T=T, error_dist=e) for e in errors for n in ns]
    return ExperimentGrid(dgps=dgps, k_values=k_values, replications=replications, seed=seed)

