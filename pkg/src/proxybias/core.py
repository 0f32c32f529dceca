"""Contingency-table estimators for the equal-opportunity gap under a noisy
attribute proxy.

The setting: a binary label classifier is audited for the gap in its
true-positive rates between two protected groups, but group membership is
only available through a second, imperfect attribute classifier. Everything
here is a function of the joint distribution of four binary variables,

    y      true label            (True = positive class)
    a      true attribute        (True = group 1)
    yhat   predicted label
    ahat   predicted attribute

held in a 16-cell :class:`JointTable` (axis order ``[y, a, yhat, ahat]``).

Quantities, with r = P(y=1, a=1) and s = P(y=1, a=0):

    alpha  = P(yhat=1 | y=1, a=1)       true group-conditional positives
    beta   = P(yhat=1 | y=1, a=0)
    alpha^ = P(yhat=1 | y=1, ahat=1)    proxy-conditional ("naive") versions
    beta^  = P(yhat=1 | y=1, ahat=0)
    g1     = P(ahat != a | a=0, y=1)    proxy error rates among positives
    g2     = P(ahat != a | a=1, y=1)
    delta1 = P(ahat=1 | yhat=1, a=0, y=1)
    delta2 = P(ahat=0 | yhat=1, a=1, y=1)

Estimators of the signed gap alpha - beta:

naive
    alpha^ - beta^, the gap computed with ahat in place of a.
corrected
    |alpha^ - beta^| / gamma. When yhat and ahat are conditionally
    independent given (y, a), the naive gap shrinks by exactly the
    distortion factor

        gamma = |1 - g1 - g2| / ((s/r (1-g1) + g2) (r/s (1-g2) + g1)),

    which lies in [0, 1], so the naive gap never overstates the true one
    and dividing by gamma undoes the shrinkage.
general
    an exact inversion that needs no independence assumption:

        alpha - beta = [ alpha^ (s/r g1 + 1 - g2)(1 - delta1 + r/s delta2)
                       - beta^  (1 - g1 + r/s g2)(1 + s/r delta1 - delta2) ]
                       / (1 - delta1 - delta2).

    On a fully populated table this is an algebraic identity: feeding it the
    table's own naive components, error profile and rates reproduces the
    table's true gap.
direct
    |alpha - beta| tallied from the (small) subset that carries true
    attributes.

Degeneracies are surfaced as typed errors, never smoothed over: gamma at or
below ``GAMMA_DEGENERATE`` cannot be inverted, and |1 - delta1 - delta2| at
or below ``DELTA_DEGENERATE`` breaks the general inversion.

All functions are pure; :class:`JointTable` is immutable after construction.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateDeltas,
    EmptyInput,
    EmptyPredictedGroup,
    InvalidParams,
    MissingConditioningEvent,
    MissingField,
    MissingGroup,
    UninvertibleDistortion,
    ZeroDenominator,
)

#: Distortion factors at or below this cannot be inverted.
GAMMA_DEGENERATE = 1e-6

#: |1 - delta1 - delta2| at or below this makes the general inversion degenerate.
DELTA_DEGENERATE = 1e-6


class AttributeSource(Enum):
    """Which attribute column(s) a joint table is built over."""

    TRUE_A = "true"
    PREDICTED_A = "predicted"
    BOTH = "both"


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x < 0.0 or x > 1.0:
        raise InvalidParams(f"{name} must be a probability in [0, 1], got {x}")
    return x


@dataclass(frozen=True)
class PredictionRecord:
    """One audited example: observed label/prediction pair plus whatever
    attribute information exists for it.

    ``score`` is the attribute classifier's confidence that a=1, in [0, 1];
    it drives uncertainty-ordered label acquisition and is otherwise unused.
    """

    id: str
    y: bool
    y_hat: bool
    a: bool | None = None
    a_hat: bool | None = None
    score: float | None = None

    def __post_init__(self) -> None:
        if self.score is not None:
            s = float(self.score)
            if not np.isfinite(s) or s < 0.0 or s > 1.0:
                raise InvalidParams(
                    f"record {self.id!r}: score must lie in [0, 1], got {self.score}"
                )


@dataclass(frozen=True)
class Rates:
    """Joint base rates r = P(y=1, a=1) and s = P(y=1, a=0)."""

    r: float
    s: float

    def __post_init__(self) -> None:
        r, s = float(self.r), float(self.s)
        if not (np.isfinite(r) and np.isfinite(s)) or r < 0.0 or s < 0.0:
            raise InvalidParams(f"rates must be nonnegative and finite, got r={r}, s={s}")
        if r + s > 1.0 + 1e-12:
            raise InvalidParams(f"r + s must not exceed 1, got {r + s}")

    @property
    def missing_group(self) -> str | None:
        """Name of the empty group, if either base rate is zero."""
        if self.r == 0.0:
            return "(y=1, a=1)"
        if self.s == 0.0:
            return "(y=1, a=0)"
        return None

    def require_both(self) -> None:
        missing = self.missing_group
        if missing is not None:
            raise MissingGroup(missing)


@dataclass(frozen=True)
class ErrorProfile:
    """Attribute-classifier conditional error rates on the positive slice."""

    g1: float
    g2: float
    delta1: float
    delta2: float

    def __post_init__(self) -> None:
        for name in ("g1", "g2", "delta1", "delta2"):
            _check_prob(getattr(self, name), name)


@dataclass(frozen=True)
class JointTable:
    """Immutable nonnegative mass over the 16 cells of (y, a, yhat, ahat).

    Cells may hold raw counts or probability mass; every estimator is a
    ratio, so normalization never matters. A collapsed attribute axis (table
    built without true or without predicted attributes) parks all mass at
    index 0 of that axis and clears the corresponding flag; estimators that
    need the axis refuse to run without it.
    """

    cells: np.ndarray
    has_true_attr: bool = True
    has_pred_attr: bool = True

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.shape != (2, 2, 2, 2):
            raise InvalidParams(f"cells must have shape (2, 2, 2, 2), got {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise InvalidParams("cells must be finite")
        if np.any(cells < -1e-12):
            raise InvalidParams("cells must be nonnegative")
        cells = np.where(cells < 0.0, 0.0, cells)
        if cells.sum() <= 0.0:
            raise InvalidParams("table must carry positive total mass")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_arrays(
        cls,
        y: np.ndarray,
        yhat: np.ndarray,
        a: np.ndarray | None = None,
        ahat: np.ndarray | None = None,
    ) -> "JointTable":
        """Tally integer/boolean column arrays into a table. ``None`` for an
        attribute column collapses that axis."""
        y = np.asarray(y, dtype=np.int64)
        yhat = np.asarray(yhat, dtype=np.int64)
        n = y.shape[0]
        if n == 0:
            raise EmptyInput("no records to tally")
        av = np.zeros(n, dtype=np.int64) if a is None else np.asarray(a, dtype=np.int64)
        hv = np.zeros(n, dtype=np.int64) if ahat is None else np.asarray(ahat, dtype=np.int64)
        for name, col in (("y", y), ("a", av), ("y_hat", yhat), ("a_hat", hv)):
            if col.shape != (n,):
                raise InvalidParams(f"column {name} has shape {col.shape}, expected ({n},)")
            if np.any((col != 0) & (col != 1)):
                raise InvalidParams(f"column {name} must be binary")
        code = (y << 3) | (av << 2) | (yhat << 1) | hv
        counts = np.bincount(code, minlength=16).astype(np.float64).reshape(2, 2, 2, 2)
        return cls(counts, has_true_attr=a is not None, has_pred_attr=ahat is not None)

    @property
    def total(self) -> float:
        return float(self.cells.sum())

    def mass(
        self,
        *,
        y: int | None = None,
        a: int | None = None,
        yhat: int | None = None,
        ahat: int | None = None,
    ) -> float:
        """Total mass of the event fixing any subset of the four axes."""
        idx = tuple(
            slice(None) if v is None else int(v) for v in (y, a, yhat, ahat)
        )
        return float(self.cells[idx].sum())

    def normalized(self) -> np.ndarray:
        """Cell probabilities (cells divided by total)."""
        return self.cells / self.total


def _require_axes(table: JointTable, *, true_attr: bool = False, pred_attr: bool = False) -> None:
    if true_attr and not table.has_true_attr:
        raise MissingField("<table>", "a")
    if pred_attr and not table.has_pred_attr:
        raise MissingField("<table>", "a_hat")


def build_joint_table(
    records: Sequence[PredictionRecord] | Iterable[PredictionRecord],
    attribute_source: AttributeSource = AttributeSource.BOTH,
) -> JointTable:
    """Tally records into a :class:`JointTable` of exact counts.

    Every record must supply the attribute fields demanded by
    ``attribute_source``; the axis not requested is collapsed.
    """
    records = list(records)
    if not records:
        raise EmptyInput("no records to tally")
    need_a = attribute_source in (AttributeSource.TRUE_A, AttributeSource.BOTH)
    need_ahat = attribute_source in (AttributeSource.PREDICTED_A, AttributeSource.BOTH)
    n = len(records)
    y = np.empty(n, dtype=np.int64)
    yh = np.empty(n, dtype=np.int64)
    a = np.zeros(n, dtype=np.int64)
    ah = np.zeros(n, dtype=np.int64)
    for i, rec in enumerate(records):
        y[i] = int(rec.y)
        yh[i] = int(rec.y_hat)
        if need_a:
            if rec.a is None:
                raise MissingField(rec.id, "a")
            a[i] = int(rec.a)
        if need_ahat:
            if rec.a_hat is None:
                raise MissingField(rec.id, "a_hat")
            ah[i] = int(rec.a_hat)
    return JointTable.from_arrays(
        y, yh, a if need_a else None, ah if need_ahat else None
    )


def rates(table: JointTable) -> Rates:
    """Joint base rates (r, s) of the table.

    Requires positive mass on y=1. A zero r or s is returned, not raised;
    ``Rates.missing_group`` flags it for the operations that need the ratio.
    """
    _require_axes(table, true_attr=True)
    if table.mass(y=1) <= 0.0:
        raise MissingGroup("(y=1)")
    total = table.total
    return Rates(r=table.mass(y=1, a=1) / total, s=table.mass(y=1, a=0) / total)


def true_components(table: JointTable) -> tuple[float, float]:
    """Group-conditional positive rates (alpha, beta) from true attributes."""
    _require_axes(table, true_attr=True)
    m1 = table.mass(y=1, a=1)
    m0 = table.mass(y=1, a=0)
    if m1 <= 0.0:
        raise MissingGroup("(y=1, a=1)")
    if m0 <= 0.0:
        raise MissingGroup("(y=1, a=0)")
    return table.mass(y=1, a=1, yhat=1) / m1, table.mass(y=1, a=0, yhat=1) / m0


def true_bias(table: JointTable) -> float:
    """Signed gap alpha - beta; callers take abs() for the bias."""
    alpha, beta = true_components(table)
    return alpha - beta


def naive_components(table: JointTable) -> tuple[float, float]:
    """Proxy-conditional positive rates (alpha^, beta^) from predicted attributes."""
    _require_axes(table, pred_attr=True)
    m1 = table.mass(y=1, ahat=1)
    m0 = table.mass(y=1, ahat=0)
    if m1 <= 0.0:
        raise EmptyPredictedGroup("(y=1, ahat=1)")
    if m0 <= 0.0:
        raise EmptyPredictedGroup("(y=1, ahat=0)")
    return table.mass(y=1, ahat=1, yhat=1) / m1, table.mass(y=1, ahat=0, yhat=1) / m0


def naive_bias(table: JointTable) -> float:
    """Signed gap alpha^ - beta^ computed with predicted attributes."""
    alpha_hat, beta_hat = naive_components(table)
    return alpha_hat - beta_hat


def _smoothed_rate(k: float, n: float, smoothing: float, event: str, exc: type) -> float:
    if n <= 0.0 and smoothing <= 0.0:
        raise exc(event)
    return (k + smoothing) / (n + 2.0 * smoothing)


def conditional_errors(table: JointTable, smoothing: float = 0.0) -> tuple[float, float]:
    """Proxy error rates (g1, g2) on the positive slice.

    ``smoothing`` adds a pseudo-count to each binary outcome; the default 0
    raises :class:`MissingGroup` on empty groups instead of guessing.
    """
    _require_axes(table, true_attr=True, pred_attr=True)
    g1 = _smoothed_rate(
        table.mass(y=1, a=0, ahat=1), table.mass(y=1, a=0), smoothing, "(y=1, a=0)", MissingGroup
    )
    g2 = _smoothed_rate(
        table.mass(y=1, a=1, ahat=0), table.mass(y=1, a=1), smoothing, "(y=1, a=1)", MissingGroup
    )
    return g1, g2


def deltas(table: JointTable, smoothing: float = 0.0) -> tuple[float, float]:
    """Prediction-conditioned proxy error rates (delta1, delta2).

    delta1 = P(ahat=1 | yhat=1, a=0, y=1), delta2 = P(ahat=0 | yhat=1, a=1, y=1).
    """
    _require_axes(table, true_attr=True, pred_attr=True)
    d1 = _smoothed_rate(
        table.mass(y=1, a=0, yhat=1, ahat=1),
        table.mass(y=1, a=0, yhat=1),
        smoothing,
        "(yhat=1, a=0, y=1)",
        MissingConditioningEvent,
    )
    d2 = _smoothed_rate(
        table.mass(y=1, a=1, yhat=1, ahat=0),
        table.mass(y=1, a=1, yhat=1),
        smoothing,
        "(yhat=1, a=1, y=1)",
        MissingConditioningEvent,
    )
    return d1, d2


def error_profile(table: JointTable, smoothing: float = 0.0) -> ErrorProfile:
    """Full (g1, g2, delta1, delta2) profile of a table."""
    g1, g2 = conditional_errors(table, smoothing)
    d1, d2 = deltas(table, smoothing)
    return ErrorProfile(g1=g1, g2=g2, delta1=d1, delta2=d2)


def _gamma_raw(g1, g2, r, s):
    """Distortion factor, elementwise, no validation or clipping."""
    num = np.abs(1.0 - g1 - g2)
    f1 = (s / r) * (1.0 - g1) + g2
    f2 = (r / s) * (1.0 - g2) + g1
    return num / (f1 * f2)


def gamma_values(g1, g2, r, s) -> np.ndarray:
    """Vectorized distortion factor, clipped to [0, 1].

    The factor is mathematically bounded by 1; the clip only trims
    float-rounding overshoot at near-perfect classifiers. At the two corner
    profiles (g1, g2) = (1, 0) and (0, 1) the formula is 0/0 because the
    predicted attribute is constant on positives and the naive gap does not
    exist; those points are reported as 0 (no usable signal survives). The
    scalar :func:`distortion_factor` raises there instead.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = _gamma_raw(np.asarray(g1, dtype=np.float64), g2, r, s)
    return np.where(np.isfinite(raw), np.minimum(raw, 1.0), 0.0)


def distortion_factor(g1: float, g2: float, rates_: Rates) -> float:
    """Multiplicative shrinkage gamma relating the naive gap to the true gap
    under conditional independence of yhat and ahat given (y, a)."""
    g1 = _check_prob(g1, "g1")
    g2 = _check_prob(g2, "g2")
    rates_.require_both()
    r, s = rates_.r, rates_.s
    f1 = (s / r) * (1.0 - g1) + g2
    f2 = (r / s) * (1.0 - g2) + g1
    if f1 == 0.0:
        raise ZeroDenominator("(s/r)*(1-g1) + g2")
    if f2 == 0.0:
        raise ZeroDenominator("(r/s)*(1-g2) + g1")
    return min(abs(1.0 - g1 - g2) / (f1 * f2), 1.0)


def noisy_estimate_values(alpha, beta, r, s, g1, g2) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized forward map from true to proxy-conditional rates."""
    alpha = np.asarray(alpha, dtype=np.float64)
    d1 = r * (1.0 - g2) + s * g1
    d2 = r * g2 + s * (1.0 - g1)
    alpha_hat = (alpha * r * (1.0 - g2) + beta * s * g1) / d1
    beta_hat = (alpha * r * g2 + beta * s * (1.0 - g1)) / d2
    return alpha_hat, beta_hat


def forward_noisy_estimates(
    alpha: float, beta: float, rates_: Rates, g1: float, g2: float
) -> tuple[float, float]:
    """Proxy-conditional rates (alpha^, beta^) implied by true rates and a
    conditionally independent proxy.

    Satisfies |alpha^ - beta^| = gamma * |alpha - beta| exactly.
    """
    alpha = _check_prob(alpha, "alpha")
    beta = _check_prob(beta, "beta")
    g1 = _check_prob(g1, "g1")
    g2 = _check_prob(g2, "g2")
    r, s = rates_.r, rates_.s
    d1 = r * (1.0 - g2) + s * g1
    d2 = r * g2 + s * (1.0 - g1)
    if d1 == 0.0:
        raise ZeroDenominator("r*(1-g2) + s*g1")
    if d2 == 0.0:
        raise ZeroDenominator("r*g2 + s*(1-g1)")
    alpha_hat = (alpha * r * (1.0 - g2) + beta * s * g1) / d1
    beta_hat = (alpha * r * g2 + beta * s * (1.0 - g1)) / d2
    return alpha_hat, beta_hat


class CorrectedBias(NamedTuple):
    value: float
    clamped: bool


def corrected_bias(naive_abs: float, gamma: float) -> CorrectedBias:
    """|alpha - beta| recovered by dividing the naive gap by gamma.

    Sampling noise can push the quotient above 1; it is clamped to [0, 1]
    with the flag set, since a bias is a difference of probabilities.
    """
    if not np.isfinite(naive_abs) or naive_abs < 0.0:
        raise InvalidParams(f"naive_abs must be nonnegative and finite, got {naive_abs}")
    gamma = _check_prob(gamma, "gamma")
    if gamma <= GAMMA_DEGENERATE:
        raise UninvertibleDistortion(
            f"gamma={gamma} is at or below the invertibility threshold {GAMMA_DEGENERATE}"
        )
    value = naive_abs / gamma
    if value > 1.0:
        return CorrectedBias(1.0, True)
    return CorrectedBias(value, False)


def general_corrected_bias(
    alpha_hat: float, beta_hat: float, profile: ErrorProfile, rates_: Rates
) -> float:
    """Signed true gap recovered from proxy-conditional rates without any
    independence assumption.

    An algebraic identity on fully populated tables: with profile and rates
    tallied from the same table as (alpha^, beta^), the output equals the
    table's true gap.
    """
    alpha_hat = _check_prob(alpha_hat, "alpha_hat")
    beta_hat = _check_prob(beta_hat, "beta_hat")
    rates_.require_both()
    r, s = rates_.r, rates_.s
    g1, g2, d1, d2 = profile.g1, profile.g2, profile.delta1, profile.delta2
    denom = 1.0 - d1 - d2
    if abs(denom) <= DELTA_DEGENERATE:
        raise DegenerateDeltas(
            f"|1 - delta1 - delta2| = {abs(denom)} is at or below {DELTA_DEGENERATE}"
        )
    term_a = alpha_hat * ((s / r) * g1 + 1.0 - g2) * (1.0 - d1 + (r / s) * d2)
    term_b = beta_hat * (1.0 - g1 + (r / s) * g2) * (1.0 + (s / r) * d1 - d2)
    return (term_a - term_b) / denom


def ci_violation(table: JointTable) -> float:
    """Worst-case deviation of (yhat, ahat) from conditional independence.

    Over every (y, a) cell with positive mass, the largest absolute gap
    between the joint conditional P(yhat, ahat | y, a) and the product of
    its marginals. Zero exactly when conditional independence holds on the
    table. Empty cells are skipped. This diagnostic's scale is its own; it
    is not comparable to other dependence measures.
    """
    _require_axes(table, true_attr=True, pred_attr=True)
    worst = 0.0
    for yv in (0, 1):
        for av in (0, 1):
            block = table.cells[yv, av]
            m = block.sum()
            if m <= 0.0:
                continue
            joint = block / m
            p_yhat = joint.sum(axis=1)
            p_ahat = joint.sum(axis=0)
            dev = float(np.max(np.abs(joint - np.outer(p_yhat, p_ahat))))
            worst = max(worst, dev)
    return worst


@dataclass
class BiasReport:
    """Every estimate the toolkit can produce for one audit, with the
    intermediate quantities needed to recompute them.

    Optional estimates are None exactly when degenerate or not applicable;
    ``degenerate`` maps each missing name to its reason.
    """

    naive_signed: float | None = None
    true_bias_signed: float | None = None
    gamma: float | None = None
    corrected_abs: float | None = None
    corrected_clamped: bool = False
    general_signed: float | None = None
    direct_abs: float | None = None
    plug_in_abs: float | None = None
    error_profile: ErrorProfile | None = None
    rates: Rates | None = None
    ci_violation: float | None = None
    n_labeled: int = 0
    degenerate: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def absd(v: float | None) -> float | None:
            return None if v is None else abs(v)

        return {
            "naive_signed": self.naive_signed,
            "naive_abs": absd(self.naive_signed),
            "true_bias_signed": self.true_bias_signed,
            "true_bias_abs": absd(self.true_bias_signed),
            "gamma": self.gamma,
            "corrected_abs": self.corrected_abs,
            "corrected_clamped": self.corrected_clamped,
            "general_signed": self.general_signed,
            "general_abs": absd(self.general_signed),
            "direct_abs": self.direct_abs,
            "plug_in_abs": self.plug_in_abs,
            "g1": None if self.error_profile is None else self.error_profile.g1,
            "g2": None if self.error_profile is None else self.error_profile.g2,
            "delta1": None if self.error_profile is None else self.error_profile.delta1,
            "delta2": None if self.error_profile is None else self.error_profile.delta2,
            "r": None if self.rates is None else self.rates.r,
            "s": None if self.rates is None else self.rates.s,
            "ci_violation": self.ci_violation,
            "n_labeled": self.n_labeled,
            "degenerate": dict(sorted(self.degenerate.items())),
            "provenance": self.provenance,
        }


_ALL_ESTIMATORS = ("naive", "corrected", "general", "direct")


def build_bias_report(
    eval_table: JointTable,
    common_table: JointTable | None = None,
    *,
    estimators: Sequence[str] = _ALL_ESTIMATORS,
    plug_in_abs: float | None = None,
    smoothing: float = 0.0,
) -> BiasReport:
    """Assemble a :class:`BiasReport` from an evaluation table and an
    optional common-data table carrying true attributes.

    The naive gap comes from the evaluation table; gamma, the error profile,
    rates and the direct estimate come from the common table. Degenerate or
    inapplicable estimators are recorded by reason instead of raising.
    """
    unknown = set(estimators) - set(_ALL_ESTIMATORS)
    if unknown:
        raise InvalidParams(f"unknown estimators: {sorted(unknown)}")
    report = BiasReport(plug_in_abs=plug_in_abs)

    def attempt(name: str, fn):
        from .errors import AuditError

        try:
            return fn()
        except AuditError as exc:
            report.degenerate[name] = f"{type(exc).__name__}: {exc}"
            return None

    if eval_table.has_true_attr:
        report.true_bias_signed = attempt("true_bias", lambda: true_bias(eval_table))
    else:
        report.degenerate["true_bias"] = "MissingField: evaluation data has no true attributes"

    report.naive_signed = attempt("naive", lambda: naive_bias(eval_table))

    if common_table is not None:
        report.n_labeled = int(round(common_table.total))
        report.rates = attempt("rates", lambda: rates(common_table))
        profile = attempt("error_profile", lambda: error_profile(common_table, smoothing))
        report.error_profile = profile
        if "corrected" in estimators or "general" in estimators:
            if profile is not None and report.rates is not None:
                report.gamma = attempt(
                    "gamma", lambda: distortion_factor(profile.g1, profile.g2, report.rates)
                )
        if "corrected" in estimators and report.gamma is not None and report.naive_signed is not None:
            corrected = attempt(
                "corrected",
                lambda: corrected_bias(abs(report.naive_signed), report.gamma),
            )
            if corrected is not None:
                report.corrected_abs = corrected.value
                report.corrected_clamped = corrected.clamped
        if "general" in estimators and profile is not None and report.rates is not None:
            def run_general():
                alpha_hat, beta_hat = naive_components(eval_table)
                return general_corrected_bias(alpha_hat, beta_hat, profile, report.rates)

            report.general_signed = attempt("general", run_general)
        if "direct" in estimators:
            report.direct_abs = attempt("direct", lambda: abs(true_bias(common_table)))
    else:
        for name in ("corrected", "general", "direct"):
            if name in estimators:
                report.degenerate[name] = "MissingField: no common data supplied"

    if eval_table.has_true_attr and eval_table.has_pred_attr:
        report.ci_violation = ci_violation(eval_table)
        report.provenance["ci_source"] = "evaluation"
    elif common_table is not None and common_table.has_pred_attr:
        report.ci_violation = attempt("ci_violation", lambda: ci_violation(common_table))
        report.provenance["ci_source"] = "common"
    else:
        report.degenerate["ci_violation"] = "MissingField: no table carries both attribute columns"

    report.provenance["eval_n"] = int(round(eval_table.total))
    return report
