"""Seeded synthetic data with known ground truth.

:func:`exact_table` builds the infinite-sample 16-cell joint distribution
implied by a parameter set; :func:`sample_records` draws i.i.d. records from
it. Both are deterministic functions of their inputs, so every experiment in
the test suite and the CLI is reproducible bit for bit.

The parameters pin the positive slice exactly — group-conditional positive
rates (alpha, beta), proxy error rates (g1, g2), joint base rates (r, s) —
and mirror them onto the negative slice by default (a classifier as accurate
on negatives as on positives, a proxy equally reliable on both). The
attribute split within y=0 follows the same r:s proportion as y=1.

``coupling`` dials conditional dependence between the label prediction and
the attribute prediction inside each (y, a) cell without touching any of the
marginal rates above: the within-cell joint of the two correctness events
interpolates linearly between the product measure (coupling 0) and the
extremal joint with the same margins (coupling +/-1). Positive coupling
makes the two classifiers err together.

Scores mimic an attribute classifier's confidence: a draw lands on its
prediction's side of 1/2, close to 1/2 when the prediction is wrong and far
from it when right, with ``score_noise`` controlling how reliable that
ordering is. Uncertainty-ordered acquisition therefore has signal to exploit
without any calibration claim attached.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import JointTable, PredictionRecord
from .errors import InvalidParams


def _prob(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x < 0.0 or x > 1.0:
        raise InvalidParams(f"{name} must be in [0, 1], got {x}")
    return x


@dataclass(frozen=True)
class SimParams:
    """Generator parameters; every field is a plain probability or rate."""

    alpha: float = 0.6
    beta: float = 0.4
    r: float = 0.25
    s: float = 0.25
    g1: float = 0.2
    g2: float = 0.3
    coupling: float = 0.0
    neg_alpha: float | None = None
    neg_beta: float | None = None
    neg_g1: float | None = None
    neg_g2: float | None = None
    score_noise: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "g1", "g2"):
            _prob(getattr(self, name), name)
        r, s = float(self.r), float(self.s)
        if r <= 0.0 or s <= 0.0 or not (np.isfinite(r) and np.isfinite(s)):
            raise InvalidParams(f"need r > 0 and s > 0, got r={r}, s={s}")
        if r + s > 1.0 + 1e-12:
            raise InvalidParams(f"r + s must not exceed 1, got {r + s}")
        c = float(self.coupling)
        if not np.isfinite(c) or c < -1.0 or c > 1.0:
            raise InvalidParams(f"coupling must be in [-1, 1], got {c}")
        for name in ("neg_alpha", "neg_beta", "neg_g1", "neg_g2"):
            v = getattr(self, name)
            if v is not None:
                _prob(v, name)
        if float(self.score_noise) < 0.0 or not np.isfinite(float(self.score_noise)):
            raise InvalidParams(f"score_noise must be nonnegative, got {self.score_noise}")

    def filled(self) -> "SimParams":
        """Defaults resolved: mirrored accuracy on the negative slice."""
        return replace(
            self,
            neg_alpha=1.0 - self.alpha if self.neg_alpha is None else self.neg_alpha,
            neg_beta=1.0 - self.beta if self.neg_beta is None else self.neg_beta,
            neg_g1=self.g1 if self.neg_g1 is None else self.neg_g1,
            neg_g2=self.g2 if self.neg_g2 is None else self.neg_g2,
        )


def _coupled_joint(p: float, q: float, coupling: float) -> float:
    """P(both events) for margins (p, q): product measure tilted toward the
    extremal joint with the same margins."""
    prod = p * q
    if coupling >= 0.0:
        return prod + coupling * (min(p, q) - prod)
    return prod + coupling * (prod - max(0.0, p + q - 1.0))


def exact_table(params: SimParams) -> JointTable:
    """Infinite-sample joint table over (y, a, yhat, ahat)."""
    p = params.filled()
    neg = 1.0 - p.r - p.s
    mass = {
        (1, 1): p.r,
        (1, 0): p.s,
        (0, 1): neg * p.r / (p.r + p.s),
        (0, 0): neg * p.s / (p.r + p.s),
    }
    p_pos = {(1, 1): p.alpha, (1, 0): p.beta, (0, 1): p.neg_alpha, (0, 0): p.neg_beta}
    p_err = {(1, 1): p.g2, (1, 0): p.g1, (0, 1): p.neg_g2, (0, 0): p.neg_g1}
    cells = np.zeros((2, 2, 2, 2))
    for (y, a), m in mass.items():
        if m <= 0.0:
            continue
        prob_label_correct = p_pos[(y, a)] if y == 1 else 1.0 - p_pos[(y, a)]
        prob_attr_correct = 1.0 - p_err[(y, a)]
        both = _coupled_joint(prob_label_correct, prob_attr_correct, p.coupling)
        # correctness joint -> (yhat, ahat) values
        for label_ok in (0, 1):
            for attr_ok in (0, 1):
                if label_ok and attr_ok:
                    cp = both
                elif label_ok:
                    cp = prob_label_correct - both
                elif attr_ok:
                    cp = prob_attr_correct - both
                else:
                    cp = 1.0 - prob_label_correct - prob_attr_correct + both
                if cp < 0.0:
                    if cp < -1e-12:
                        raise InvalidParams(
                            f"cell probability {cp} out of range in cell (y={y}, a={a})"
                        )
                    cp = 0.0
                yhat = y if label_ok else 1 - y
                ahat = a if attr_ok else 1 - a
                cells[y, a, yhat, ahat] += m * cp
    return JointTable(cells)


def sample_columns(params: SimParams, n: int) -> dict[str, np.ndarray]:
    """Vectorized i.i.d. draws from :func:`exact_table`'s distribution.

    Returns parallel columns ``y, a, y_hat, a_hat`` (int64) and ``score``
    (float64). Deterministic given (params, n).
    """
    if n < 1:
        raise InvalidParams(f"n must be >= 1, got {n}")
    probs = exact_table(params).normalized().reshape(16)
    rng = np.random.default_rng(params.seed)
    code = rng.choice(16, size=n, p=probs)
    y = (code >> 3) & 1
    a = (code >> 2) & 1
    yhat = (code >> 1) & 1
    ahat = code & 1
    spread = np.abs(rng.normal(0.0, params.score_noise, size=n)) if params.score_noise > 0 \
        else np.zeros(n)
    correct = ahat == a
    margin = np.where(correct, np.maximum(0.0, 0.5 - spread), -np.minimum(0.5, spread))
    score = 0.5 + (2.0 * a - 1.0) * margin
    return {"y": y, "a": a, "y_hat": yhat, "a_hat": ahat, "score": score}


def sample_records(params: SimParams, n: int) -> list[PredictionRecord]:
    """I.i.d. prediction records carrying y, a, yhat, ahat and a score."""
    cols = sample_columns(params, n)
    return [
        PredictionRecord(
            id=f"r{i:07d}",
            y=bool(cols["y"][i]),
            y_hat=bool(cols["y_hat"][i]),
            a=bool(cols["a"][i]),
            a_hat=bool(cols["a_hat"][i]),
            score=float(cols["score"][i]),
        )
        for i in range(n)
    ]
