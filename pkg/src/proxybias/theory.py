"""Structural results about the distortion factor and about what a proxy
attribute can and cannot reveal.

Three constructions live here:

* **Budgeted error splits.** Fixing the total proxy error mass on positives,
  U = P(ahat != a, y=1) = s*g1 + r*g2, traces a line through (g1, g2) space.
  :func:`gamma_scan` evaluates the distortion factor along that line.
  At equal base rates (r = s) the maximizers have a closed form,
  :func:`optimal_error_split`: pile the whole budget onto one group.
  The scan lets the same endpoint behavior be checked numerically for
  unequal base rates, where no closed form is available.

* **An accuracy-is-not-enough table.** :func:`bayes_counterexample` builds a
  six-row distribution on which the label rule has exactly zero
  true-positive-rate gap, yet the most accurate possible attribute
  predictor reports a gap of one. Exact integer counts, so the paradox is
  reproduced without rounding.

* **An indistinguishable pair.** :func:`indistinguishable_pair` produces two
  distributions with identical (x, y) and (x, a) marginals — so any
  attribute classifier and any label-learning procedure behave identically
  on both — whose true gaps are 0 and 1. No amount of separate-dataset
  modeling can tell them apart; only jointly observed (y, a) data can.
"""

from __future__ import annotations

import csv
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import JointTable, PredictionRecord, gamma_values
from .errors import BayesOptimalInput, InfeasibleBudget, InvalidParams

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class ErrorBudget:
    """Total proxy error mass U on positives, at equal base rates r = s."""

    U: float
    r: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.U) and np.isfinite(self.r)) or self.r <= 0.0:
            raise InvalidParams(f"need finite U and r > 0, got U={self.U}, r={self.r}")
        if self.U < 0.0 or self.U > 2.0 * self.r + _FEAS_TOL:
            raise InfeasibleBudget(
                f"budget U={self.U} outside [0, 2r] for r={self.r}"
            )


def feasible_interval(r: float, s: float, U: float) -> tuple[float, float]:
    """Range of g1 values compatible with s*g1 + r*g2 = U and (g1, g2) in [0,1]^2."""
    if r <= 0.0 or s <= 0.0:
        raise InvalidParams(f"need r > 0 and s > 0, got r={r}, s={s}")
    if U < -_FEAS_TOL or U > r + s + _FEAS_TOL:
        raise InfeasibleBudget(f"no (g1, g2) in [0,1]^2 satisfies s*g1 + r*g2 = {U}")
    lo = max((U - r) / s, 0.0)
    hi = min(U / s, 1.0)
    if lo > hi:  # float slack at the feasibility boundary
        lo = hi
    return lo, hi


@dataclass(frozen=True)
class GammaScan:
    """Distortion factor evaluated along a fixed-budget constraint line."""

    g1: np.ndarray
    g2: np.ndarray
    gamma: np.ndarray
    r: float
    s: float
    U: float
    step: float

    @property
    def gamma_max(self) -> float:
        return float(self.gamma.max())

    @property
    def argmax_points(self) -> list[tuple[float, float]]:
        """Grid points attaining the maximum (within float rounding)."""
        keep = self.gamma >= self.gamma_max - 1e-12
        return [(float(a), float(b)) for a, b in zip(self.g1[keep], self.g2[keep])]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["g1", "g2", "gamma"])
            for a, b, g in zip(self.g1, self.g2, self.gamma):
                writer.writerow([repr(float(a)), repr(float(b)), repr(float(g))])


def gamma_scan(
    budget: ErrorBudget | float,
    s: float | None = None,
    U: float | None = None,
    *,
    step: float = 1e-3,
) -> GammaScan:
    """Evaluate the distortion factor along the budget line s*g1 + r*g2 = U.

    Accepts either an :class:`ErrorBudget` (equal base rates) or explicit
    ``(r, s, U)``. Interval endpoints are always included in the grid.
    """
    if isinstance(budget, ErrorBudget):
        r_, s_, U_ = budget.r, budget.r, budget.U
    else:
        if s is None or U is None:
            raise InvalidParams("gamma_scan needs an ErrorBudget or explicit (r, s, U)")
        r_, s_, U_ = float(budget), float(s), float(U)
    if step <= 0.0 or not np.isfinite(step):
        raise InvalidParams(f"step must be positive, got {step}")
    lo, hi = feasible_interval(r_, s_, U_)
    if hi - lo <= 0.0:
        g1 = np.array([lo])
    else:
        g1 = lo + step * np.arange(int((hi - lo) / step) + 1)
        if hi - g1[-1] > 1e-15:
            g1 = np.append(g1, hi)
        else:
            g1[-1] = hi
    g2 = np.clip((U_ - s_ * g1) / r_, 0.0, 1.0)
    gamma = gamma_values(g1, g2, r_, s_)
    return GammaScan(g1=g1, g2=g2, gamma=np.atleast_1d(gamma), r=r_, s=s_, U=U_, step=step)


def optimal_error_split(budget: ErrorBudget) -> set[tuple[float, float]]:
    """Global maximizers of the distortion factor under an error budget, at
    equal base rates.

    With u = U/r: {(0, u), (u, 0)} when U <= r, {(u-1, 1), (1, u-1)} when
    U >= r. At U = r the two branches coincide; the union is returned.
    """
    u = budget.U / budget.r
    out: set[tuple[float, float]] = set()
    if budget.U <= budget.r:
        out |= {(0.0, u), (u, 0.0)}
    if budget.U >= budget.r:
        out |= {(u - 1.0, 1.0), (1.0, u - 1.0)}
    return out


# Rows (x1, x2, a, y) of the counterexample distribution, one unit of mass
# each. The label rule reads off x2; the attribute predictor maximizing
# accuracy predicts ahat = x2 as well, which is what couples the two.
COUNTEREXAMPLE_ROWS: tuple[tuple[int, int, int, int], ...] = (
    (1, 0, 1, 1),
    (1, 1, 1, 1),
    (1, 1, 0, 1),
    (1, 0, 0, 1),
    (1, 1, 1, 0),
    (1, 0, 0, 0),
)


def counterexample_records() -> list[PredictionRecord]:
    """The six counterexample rows as prediction records (yhat = ahat = x2)."""
    return [
        PredictionRecord(
            id=f"q{i + 1}", y=bool(y), y_hat=bool(x2), a=bool(a), a_hat=bool(x2)
        )
        for i, (x1, x2, a, y) in enumerate(COUNTEREXAMPLE_ROWS)
    ]


def bayes_counterexample() -> JointTable:
    """Exact six-cell table where the true gap is 0 but the most accurate
    attribute predictor yields an estimated gap of 1."""
    cells = np.zeros((2, 2, 2, 2))
    for x1, x2, a, y in COUNTEREXAMPLE_ROWS:
        cells[y, a, x2, x2] += 1.0
    return JointTable(cells)


@dataclass(frozen=True)
class AttributedDistribution:
    """A discrete joint over (x, y, a) plus its collapsed (y, a, yhat) table
    with yhat given by the labeling rule."""

    masses: Mapping[tuple[str, int, int], float]
    table: JointTable

    def xy_marginal(self) -> dict[tuple[str, int], float]:
        out: dict[tuple[str, int], float] = {}
        for (x, y, a), m in self.masses.items():
            out[(x, y)] = out.get((x, y), 0.0) + m
        return out

    def xa_marginal(self) -> dict[tuple[str, int], float]:
        out: dict[tuple[str, int], float] = {}
        for (x, y, a), m in self.masses.items():
            out[(x, a)] = out.get((x, a), 0.0) + m
        return out


def indistinguishable_pair(
    base: Mapping[str, tuple[float, float]],
    f: Mapping[str, bool] | Callable[[str], bool],
    seed: int | None = None,
) -> tuple[AttributedDistribution, AttributedDistribution]:
    """Two attribute assignments over the same (x, y) base that no separate
    modeling of x can distinguish, with true gaps 0 and 1.

    ``base`` maps each point x to its (mass at y=0, mass at y=1). ``f`` is
    the labeling rule; it must err on some positive mass (both regions
    {f=1, y=1} and {f=0, y=1} nonempty), else :class:`BayesOptimalInput`.

    The first distribution assigns a by a fair coin everywhere. The second
    sets a = f(x) on positives; to keep the (x, a) marginals identical it
    must tilt the y=0 slice by P(x, y=1) / (2 P(x, y=0)), which is feasible
    only when P(x, y=0) >= P(x, y=1) for every x. The construction is exact
    and deterministic; ``seed`` is accepted for interface uniformity and
    unused.
    """
    del seed
    fmap = {x: bool(f(x)) for x in base} if callable(f) else {x: bool(f[x]) for x in base}
    xs = list(base.keys())
    total = 0.0
    for x in xs:
        m0, m1 = base[x]
        if m0 < 0.0 or m1 < 0.0 or not (np.isfinite(m0) and np.isfinite(m1)):
            raise InvalidParams(f"base masses for {x!r} must be finite and nonnegative")
        total += m0 + m1
    if total <= 0.0:
        raise InvalidParams("base distribution has no mass")

    mass_pos_hit = sum(base[x][1] for x in xs if fmap[x])
    mass_pos_miss = sum(base[x][1] for x in xs if not fmap[x])
    if mass_pos_hit <= 0.0 or mass_pos_miss <= 0.0:
        raise BayesOptimalInput(
            "labeling rule must have positive mass on both {f=1, y=1} and {f=0, y=1}"
        )

    masses1: dict[tuple[str, int, int], float] = {}
    masses2: dict[tuple[str, int, int], float] = {}
    cells1 = np.zeros((2, 2, 2, 2))
    cells2 = np.zeros((2, 2, 2, 2))
    for x in xs:
        m0, m1 = (v / total for v in base[x])
        fx = int(fmap[x])
        if m1 > 0.0 and m0 < m1 - _FEAS_TOL:
            raise InvalidParams(
                f"base infeasible for marginal matching at {x!r}: "
                f"need P(x, y=0) >= P(x, y=1), got {m0} < {m1}"
            )
        # fair coin everywhere
        for y, m in ((0, m0), (1, m1)):
            for a in (0, 1):
                masses1[(x, y, a)] = m / 2.0
                cells1[y, a, fx, 0] += m / 2.0
        # deterministic on positives, compensating tilt on negatives
        masses2[(x, 1, fx)] = m1
        masses2[(x, 1, 1 - fx)] = 0.0
        cells2[1, fx, fx, 0] += m1
        q = 0.5 if m0 == 0.0 else min(max(0.5 - (2 * fx - 1) * m1 / (2.0 * m0), 0.0), 1.0)
        masses2[(x, 0, 1)] = m0 * q
        masses2[(x, 0, 0)] = m0 * (1.0 - q)
        cells2[0, 1, fx, 0] += m0 * q
        cells2[0, 0, fx, 0] += m0 * (1.0 - q)

    q1 = AttributedDistribution(masses1, JointTable(cells1, has_pred_attr=False))
    q2 = AttributedDistribution(masses2, JointTable(cells2, has_pred_attr=False))
    return q1, q2
