"""Dataset-level orchestration of the tail test plus Hill / Pareto tail checks.

Right tail: the top ``k`` covariate values among ``Y == 0``. Left tail: the
top ``k`` of ``-X`` among ``Y == 1``, which turns the left tail into a
right-tail problem handled by the same engine and critical values.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Hashable

import numpy as np

from . import lr_test
from .errors import ConfigError, DomainError, InsufficientTailError, ValidationError
from .evt_core import SelfNormalizedSpacings, TopKSample, self_normalize
from .lr_test import TestConfig, TestResult

log = logging.getLogger(__name__)

TAILS = ("right", "left", "both")


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """Binary outcomes with the dominating covariate, optionally in panel form.

    Use :meth:`from_raw` to drop rows with missing values; the constructor
    itself expects clean data.
    """

    y: np.ndarray
    x: np.ndarray
    unit: np.ndarray | None = None
    period: np.ndarray | None = None
    fitted_index: np.ndarray | None = None
    dropped: int = 0

    def __post_init__(self):
        y = np.asarray(self.y)
        x = np.asarray(self.x, dtype=float)
        n = x.shape[0]
        if y.ndim != 1 or x.ndim != 1 or y.shape[0] != n:
            raise ValidationError(f"y and x must be 1-d of equal length, got {y.shape} and {x.shape}")
        bad = ~np.isin(y, (0, 1))
        if np.any(bad):
            raise ValidationError(f"y must be 0/1, got {y[bad][0]!r}", row=int(np.argmax(bad)))
        if not np.all(np.isfinite(x)):
            raise ValidationError("x contains non-finite values", row=int(np.argmax(~np.isfinite(x))))
        object.__setattr__(self, "y", _ro(y.astype(np.int8)))
        object.__setattr__(self, "x", _ro(x))
        for name in ("unit", "period"):
            col = getattr(self, name)
            if col is not None:
                col = np.asarray(col)
                if col.shape != (n,):
                    raise ValidationError(f"{name} must have length {n}")
                object.__setattr__(self, name, _ro(col))
        if self.fitted_index is not None:
            w = np.asarray(self.fitted_index, dtype=float)
            if w.shape != (n,):
                raise ValidationError(f"fitted_index has length {w.shape[0]} but y has length {n}")
            if not np.all(np.isfinite(w)):
                raise ValidationError("fitted_index contains non-finite values")
            object.__setattr__(self, "fitted_index", _ro(w))

    @classmethod
    def from_raw(cls, y, x, unit=None, period=None, fitted_index=None) -> "BinaryDataset":
        """Build a dataset, dropping rows where ``y``, ``x`` or the fitted index is non-finite."""
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        keep = np.isfinite(y) & np.isfinite(x)
        if fitted_index is not None:
            fitted_index = np.asarray(fitted_index, dtype=float)
            if fitted_index.shape != x.shape:
                raise ValidationError(
                    f"fitted_index has length {fitted_index.shape[0]} but x has length {x.shape[0]}"
                )
            keep &= np.isfinite(fitted_index)

        def sel(a):
            return None if a is None else np.asarray(a)[keep]

        return cls(
            y=y[keep].astype(np.int8) if np.all(np.isin(y[keep], (0, 1))) else y[keep],
            x=x[keep], unit=sel(unit), period=sel(period), fitted_index=sel(fitted_index),
            dropped=int((~keep).sum()),
        )

    def __len__(self):
        return int(self.x.shape[0])

    @property
    def is_panel(self) -> bool:
        return self.period is not None

    def periods(self) -> list:
        if self.period is None:
            raise ConfigError("dataset has no period labels")
        return _sorted_labels(np.unique(self.period))

    def subset(self, mask) -> "BinaryDataset":
        def sel(a):
            return None if a is None else a[mask]

        return BinaryDataset(self.y[mask], self.x[mask], sel(self.unit), sel(self.period),
                             sel(self.fitted_index))

    def with_covariate(self, x) -> "BinaryDataset":
        return BinaryDataset(self.y, x, self.unit, self.period, self.fitted_index, self.dropped)

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return all(
            same(getattr(self, f), getattr(other, f))
            for f in ("y", "x", "unit", "period", "fitted_index")
        )


def _ro(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def _sorted_labels(labels):
    labels = list(labels.tolist() if hasattr(labels, "tolist") else labels)
    try:
        return sorted(labels)
    except TypeError:
        return sorted(labels, key=str)


@dataclass(frozen=True)
class TailTestRequest:
    tail: str
    k: int
    config: TestConfig | None = None

    def __post_init__(self):
        if self.tail not in TAILS:
            raise ConfigError(f"tail must be one of {TAILS}, got {self.tail!r}")
        cfg = self.config if self.config is not None else TestConfig(k=self.k)
        if cfg.k != self.k:
            raise ConfigError(f"request k={self.k} disagrees with config k={cfg.k}")
        object.__setattr__(self, "config", cfg)


@dataclass(frozen=True)
class TwoSidedResult:
    """Both tails at the same ``k``; the global decision uses ``cv(alpha/2, k)``.

    ``right`` and ``left`` are the single-tail results at the nominal alpha.
    """

    right: TestResult
    left: TestResult
    combined_p: float
    critical_value: float
    reject: bool
    alpha: float
    k_used: int
    plug_in: bool = False

    @property
    def p_value(self) -> float:
        return self.combined_p

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PanelTestResult:
    per_period: dict[Hashable, TestResult | TwoSidedResult]
    combined_p: float
    n_tests: int
    reject: bool
    alpha: float
    tail: str
    skipped: dict[Hashable, str] = field(default_factory=dict)

    def component_p_values(self) -> list[float]:
        return _component_ps(self.per_period)

    def to_dict(self) -> dict:
        return {
            "per_period": [
                {"period": p, **r.to_dict()} for p, r in self.per_period.items()
            ],
            "combined_p": self.combined_p,
            "n_tests": self.n_tests,
            "reject": self.reject,
            "alpha": self.alpha,
            "tail": self.tail,
            "skipped": [{"period": p, "reason": why} for p, why in self.skipped.items()],
        }


# ---------------------------------------------------------------------------
# single-sample tests
# ---------------------------------------------------------------------------


def _covariate(data: BinaryDataset, use_index: bool) -> np.ndarray:
    if not use_index:
        return data.x
    if data.fitted_index is None:
        raise ConfigError("dataset has no fitted_index column")
    return data.fitted_index


def extract_topk(data: BinaryDataset, tail: str, k: int, use_index: bool = False) -> TopKSample:
    """Top ``k`` of ``X | Y=0`` (right) or of ``-X | Y=1`` (left)."""
    if tail not in ("right", "left"):
        raise ConfigError(f"extract_topk needs tail 'right' or 'left', got {tail!r}")
    if k < 1:
        raise ConfigError("k must be positive")
    x = _covariate(data, use_index)
    sub = x[data.y == 0] if tail == "right" else -x[data.y == 1]
    n0 = int(sub.size)
    if n0 < k:
        raise InsufficientTailError(n0, k, f"{tail} tail")
    top = np.partition(sub, n0 - k)[n0 - k:] if k < n0 else sub.copy()
    return TopKSample(np.sort(top)[::-1], source_size=n0)


def _one_tail(data, tail, config, use_index):
    top = extract_topk(data, tail, config.k, use_index)
    return lr_test.decide(self_normalize(top), config, tail=tail, n_subsample=top.source_size,
                          plug_in=use_index)


def _two_sided(right: TestResult, left: TestResult, config: TestConfig) -> TwoSidedResult:
    cv_half = lr_test.critical_value(config.k, config.alpha / 2, config.null_draws, config.seed,
                                     config.weight)
    return TwoSidedResult(
        right=right, left=left,
        combined_p=lr_test.combined_p([right.p_value, left.p_value]),
        critical_value=cv_half,
        reject=bool(right.statistic > cv_half or left.statistic > cv_half),
        alpha=config.alpha, k_used=config.k, plug_in=right.plug_in,
    )


def _run(data, request, use_index):
    cfg = request.config
    if request.tail != "both":
        return _one_tail(data, request.tail, cfg, use_index)
    right = _one_tail(data, "right", cfg, use_index)
    left = _one_tail(data, "left", cfg, use_index)
    return _two_sided(right, left, cfg)


def run_tail_test(data: BinaryDataset, request: TailTestRequest) -> TestResult | TwoSidedResult:
    """Right, left or Bonferroni two-sided test on the dominating covariate."""
    return _run(data, request, use_index=False)


def run_fitted_index_test(data: BinaryDataset, request: TailTestRequest):
    """Same pipeline on a user-supplied fitted linear index instead of ``x``.

    Results carry ``plug_in=True``.
    """
    if data.fitted_index is None:
        raise ConfigError("run_fitted_index_test needs data.fitted_index")
    return _run(data, request, use_index=True)


# ---------------------------------------------------------------------------
# panels
# ---------------------------------------------------------------------------


def _component_ps(per_period) -> list[float]:
    ps = []
    for r in per_period.values():
        if isinstance(r, TwoSidedResult):
            ps.extend([r.right.p_value, r.left.p_value])
        else:
            ps.append(r.p_value)
    return ps


def combine_periods(per_period: dict, alpha: float, tail: str,
                    skipped: dict | None = None) -> PanelTestResult:
    """Bonferroni over every period (and tail) component test."""
    ps = _component_ps(per_period)
    if not ps:
        raise InsufficientTailError(0, 0, "no testable period")
    n_tests = len(ps)
    return PanelTestResult(
        per_period=per_period,
        combined_p=lr_test.combined_p(ps),
        n_tests=n_tests,
        reject=bool(min(ps) < alpha / n_tests),
        alpha=alpha, tail=tail, skipped=dict(skipped or {}),
    )


def run_panel_test(data: BinaryDataset, request: TailTestRequest,
                   use_index: bool = False) -> PanelTestResult:
    """Per-period tests combined with one Bonferroni correction.

    Periods whose outcome subsample is smaller than ``k`` are skipped, logged
    and listed in ``skipped``; they do not count toward ``n_tests``.
    """
    per_period: dict = {}
    skipped: dict = {}
    for p in data.periods():
        part = data.subset(data.period == p)
        try:
            per_period[p] = _run(part, request, use_index)
        except InsufficientTailError as exc:
            skipped[p] = str(exc)
            log.warning("period %r skipped: %s", p, exc)
    if not per_period:
        raise InsufficientTailError(0, request.k, "no period has enough tail observations")
    return combine_periods(per_period, request.config.alpha, request.tail, skipped)


# ---------------------------------------------------------------------------
# tail heaviness checks
# ---------------------------------------------------------------------------


def hill_estimator(sample, k: int) -> float:
    """Hill estimate ``mean(log(X_(n-i+1) / X_(n-k)))`` over the top ``k``."""
    x = np.asarray(sample, dtype=float)
    x = x[np.isfinite(x)]
    if int(k) != k or k < 2:
        raise ConfigError(f"Hill estimator needs integer k >= 2, got {k!r}")
    n = x.size
    if n < k + 1:
        raise InsufficientTailError(n, k + 1, "Hill estimator needs k+1 observations")
    top = np.partition(x, n - k - 1)[n - k - 1:]
    threshold = top.min()
    if threshold <= 0:
        raise DomainError(
            f"Hill threshold X_(n-k)={threshold:g} is not positive; shift the sample "
            "or use a smaller k"
        )
    top = np.sort(top)[1:]
    # ratios first: exact invariance under power-of-two rescaling
    return float(np.mean(np.log(top / threshold)))


@dataclass
class TailFitReport:
    hill_index: float
    threshold: float
    top_fraction: float
    n_exceedances: int
    x: np.ndarray
    empirical_cdf: np.ndarray
    fitted_cdf: np.ndarray

    @property
    def empirical_cdf_points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.empirical_cdf.tolist()))

    @property
    def fitted_cdf_points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.fitted_cdf.tolist()))

    def fitted(self, x) -> np.ndarray:
        """Fitted Pareto CDF of the exceedances (0 below the threshold)."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 - (x / self.threshold) ** (-1.0 / self.hill_index)
        return np.where(x >= self.threshold, out, 0.0)

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.empirical_cdf - self.fitted_cdf)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "empirical_cdf", "fitted_cdf"])
        for row in zip(self.x.tolist(), self.empirical_cdf.tolist(), self.fitted_cdf.tolist()):
            w.writerow([repr(v) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "hill_index": self.hill_index,
            "threshold": self.threshold,
            "top_fraction": self.top_fraction,
            "n_exceedances": self.n_exceedances,
            "max_gap": self.max_gap,
        }


def pareto_tail_fit(sample, top_fraction: float) -> TailFitReport:
    """Fit a Pareto tail to the top ``top_fraction`` of ``sample``.

    The threshold is the ``(k+1)``-th largest value with
    ``k = floor(top_fraction * n)``, the shape is the Hill estimate over the
    ``k`` exceedances, and the report pairs the empirical CDF of the
    exceedances (``i / k`` at the ``i``-th smallest) with the fitted
    ``1 - (x / threshold)^(-1 / shape)``.
    """
    if not 0.0 < top_fraction < 1.0:
        raise ConfigError(f"top_fraction must lie in (0, 1), got {top_fraction!r}")
    x = np.asarray(sample, dtype=float)
    x = x[np.isfinite(x)]
    n = x.size
    k = int(math.floor(top_fraction * n + 1e-9))
    if k < 10:
        raise InsufficientTailError(k, 10, "Pareto fit needs at least 10 exceedances")
    shape = hill_estimator(x, k)
    if not shape > 0:
        raise DomainError("exceedances are all tied with the threshold; no tail to fit")
    xs = np.sort(np.partition(x, n - k - 1)[n - k - 1:])
    threshold, exc = float(xs[0]), xs[1:]
    report = TailFitReport(
        hill_index=shape, threshold=threshold, top_fraction=float(top_fraction), n_exceedances=k,
        x=exc, empirical_cdf=np.arange(1, k + 1) / k, fitted_cdf=np.empty(k),
    )
    report.fitted_cdf = report.fitted(exc)
    return report
