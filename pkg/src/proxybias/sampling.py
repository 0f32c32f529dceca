"""Label-acquisition strategies against a true-attribute oracle.

The estimators in :mod:`proxybias.core` need a handful of attribute-classifier
error rates that can only be tallied on records whose true attribute is
known. Revealing a true attribute costs one oracle query, so the point of a
strategy is to spend as few queries as possible before the assumption-free
inversion stabilizes.

Strategies
----------
active
    Per iteration, draw a uniform batch of b unrevealed positives, order it
    by attribute-classifier uncertainty |score - 1/2| (most uncertain
    first), reveal the first w, and retally (g1, g2, delta1, delta2) on all
    revealed labels. Stop once all four move by at most epsilon in one
    iteration. Base rates come from a dedicated initial batch of b positives
    and are not revisited. The final estimate applies the general inversion
    to the whole pool's proxy-conditional rates.
uniform / positive
    Reveal uniform batches over the whole pool, or over the positive slice
    only, recomputing every quantity cumulatively after each batch.
direct
    Same reveal policy as positive, but each step estimates |alpha - beta|
    from the revealed records alone, ignoring the proxy.

Each run returns its :class:`SamplingTrace`: one snapshot per iteration plus
the reason the loop ended. Early iterations can leave a conditioning cell
empty; the affected quantity keeps its previous value, is excluded from that
iteration's convergence test, and is listed in the snapshot's ``suppressed``
field.

Oracles are stateful (they meter the query budget), so one oracle instance
belongs to one run. ``InMemoryOracle`` answers from records it was given;
``FileExchangeOracle`` writes a request file of ids and polls for an answer
file, letting a human or an external process label at the batch boundary.
"""

from __future__ import annotations

import csv
import time
from abc import ABC, abstractmethod
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    AttributeSource,
    ErrorProfile,
    JointTable,
    PredictionRecord,
    Rates,
    build_joint_table,
    general_corrected_bias,
    naive_components,
    true_bias,
)
from .errors import (
    AuditError,
    EmptyPredictedGroup,
    InvalidParams,
    MissingField,
    OracleTimeout,
    PoolExhausted,
)


@dataclass(frozen=True)
class OracleBudgetState:
    """Accounting snapshot of an oracle: which ids were disclosed and how
    much budget remains."""

    revealed: frozenset[str]
    queries_used: int
    budget: int | None

    @property
    def remaining(self) -> int | None:
        if self.budget is None:
            return None
        return max(self.budget - self.queries_used, 0)


class AttributeOracle(ABC):
    """Stateful source of true attributes, queried by record id."""

    def __init__(self, budget: int | None = None):
        if budget is not None and budget < 0:
            raise InvalidParams(f"budget must be nonnegative, got {budget}")
        self._budget = budget
        self._revealed: dict[str, bool] = {}

    @property
    def state(self) -> OracleBudgetState:
        return OracleBudgetState(
            revealed=frozenset(self._revealed),
            queries_used=len(self._revealed),
            budget=self._budget,
        )

    @property
    def queries_used(self) -> int:
        return len(self._revealed)

    def remaining(self) -> int | None:
        if self._budget is None:
            return None
        return max(self._budget - len(self._revealed), 0)

    def reveal(self, ids: Sequence[str]) -> dict[str, bool]:
        """Disclose true attributes for ``ids``; re-queries are free."""
        new = [i for i in ids if i not in self._revealed]
        rem = self.remaining()
        if rem is not None and len(new) > rem:
            raise InvalidParams(
                f"reveal of {len(new)} new ids exceeds remaining budget {rem}"
            )
        if new:
            answers = self._answer(new)
            self._revealed.update(answers)
        return {i: self._revealed[i] for i in ids}

    @abstractmethod
    def _answer(self, ids: list[str]) -> dict[str, bool]:
        """Produce true attributes for ids not yet revealed."""


class InMemoryOracle(AttributeOracle):
    """Oracle backed by records (or an id -> attribute mapping) held in
    memory; the engine only ever sees what it pays for."""

    def __init__(
        self,
        source: Sequence[PredictionRecord] | Mapping[str, bool],
        budget: int | None = None,
    ):
        super().__init__(budget)
        if isinstance(source, Mapping):
            self._truth = {str(k): bool(v) for k, v in source.items()}
        else:
            truth: dict[str, bool] = {}
            for rec in source:
                if rec.a is None:
                    raise MissingField(rec.id, "a")
                truth[rec.id] = bool(rec.a)
            self._truth = truth

    def _answer(self, ids: list[str]) -> dict[str, bool]:
        missing = [i for i in ids if i not in self._truth]
        if missing:
            raise InvalidParams(f"oracle has no attribute for ids {missing[:5]}")
        return {i: self._truth[i] for i in ids}


class FileExchangeOracle(AttributeOracle):
    """Oracle that hands each batch to the filesystem.

    ``reveal`` overwrites the request file with one id per row (header
    ``id``) and polls the response file — a cumulative CSV with header
    ``id,a`` — until every requested id has an answer or the timeout
    elapses.
    """

    def __init__(
        self,
        request_path: str | Path,
        response_path: str | Path,
        *,
        budget: int | None = None,
        poll_interval: float = 0.05,
        timeout: float = 60.0,
    ):
        super().__init__(budget)
        self.request_path = Path(request_path)
        self.response_path = Path(response_path)
        self.poll_interval = float(poll_interval)
        self.timeout = float(timeout)

    def _read_responses(self) -> dict[str, bool]:
        if not self.response_path.exists():
            return {}
        out: dict[str, bool] = {}
        with open(self.response_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "id" not in reader.fieldnames or "a" not in reader.fieldnames:
                return {}
            for row in reader:
                if row["id"] is None or row["a"] in (None, ""):
                    continue
                out[row["id"]] = row["a"].strip() == "1"
        return out

    def _answer(self, ids: list[str]) -> dict[str, bool]:
        with open(self.request_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"])
            for i in ids:
                writer.writerow([i])
        deadline = time.monotonic() + self.timeout
        while True:
            answers = self._read_responses()
            if all(i in answers for i in ids):
                return {i: answers[i] for i in ids}
            if time.monotonic() >= deadline:
                missing = [i for i in ids if i not in answers]
                raise OracleTimeout(
                    f"no answer for {len(missing)} ids within {self.timeout}s "
                    f"(first missing: {missing[:3]})"
                )
            time.sleep(self.poll_interval)


@dataclass(frozen=True)
class TraceStep:
    """One iteration's snapshot."""

    iteration: int
    labels_used: int
    g1: float
    g2: float
    delta1: float
    delta2: float
    r_hat: float
    s_hat: float
    estimate: float | None
    estimator: str
    plug_in: float | None = None
    suppressed: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "labels_used": self.labels_used,
            "g1": self.g1,
            "g2": self.g2,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "r_hat": self.r_hat,
            "s_hat": self.s_hat,
            "estimate": self.estimate,
            "estimator": self.estimator,
            "plug_in": self.plug_in,
            "suppressed": list(self.suppressed),
        }


@dataclass
class SamplingTrace:
    """Full history of a run: per-iteration snapshots and why it stopped.

    ``reason`` is one of converged / pool_exhausted / budget_exhausted /
    target_reached / max_iters. ``error`` carries the degeneracy message
    when the final estimate could not be computed.
    """

    strategy: str
    steps: list[TraceStep] = field(default_factory=list)
    reason: str | None = None
    error: str | None = None

    @property
    def labels_used(self) -> int:
        return self.steps[-1].labels_used if self.steps else 0

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "reason": self.reason,
            "error": self.error,
            "labels_used": self.labels_used,
            "steps": [s.to_dict() for s in self.steps],
        }


class _Pool:
    """Column view of a record pool. True attributes are deliberately not
    copied here: the engine learns them only through the oracle."""

    def __init__(self, records: Sequence[PredictionRecord], *, need_scores_on_positives: bool):
        if not records:
            raise PoolExhausted("pool is empty")
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise InvalidParams("pool record ids must be unique")
        n = len(records)
        self.ids = np.array(ids, dtype=object)
        self.y = np.fromiter((int(r.y) for r in records), dtype=np.int64, count=n)
        self.yhat = np.fromiter((int(r.y_hat) for r in records), dtype=np.int64, count=n)
        self.ahat = np.fromiter(
            (-1 if r.a_hat is None else int(r.a_hat) for r in records), dtype=np.int64, count=n
        )
        self.score = np.fromiter(
            (np.nan if r.score is None else float(r.score) for r in records),
            dtype=np.float64,
            count=n,
        )
        if np.any(self.ahat < 0):
            bad = int(np.argmax(self.ahat < 0))
            raise MissingField(str(self.ids[bad]), "a_hat")
        if need_scores_on_positives:
            missing = (self.y == 1) & ~np.isfinite(self.score)
            if np.any(missing):
                bad = int(np.argmax(missing))
                raise MissingField(str(self.ids[bad]), "score")
        self.n = n
        self.positive_rate = float((self.y == 1).mean())
        # revealed state, filled through the oracle
        self.revealed = np.zeros(n, dtype=bool)
        self.a_true = np.zeros(n, dtype=np.int64)
        self._index_of = {rid: i for i, rid in enumerate(ids)}

    def apply_reveals(self, answers: Mapping[str, bool]) -> None:
        for rid, val in answers.items():
            i = self._index_of[rid]
            self.revealed[i] = True
            self.a_true[i] = int(val)

    def naive_table(self) -> JointTable:
        return JointTable.from_arrays(self.y, self.yhat, None, self.ahat)


@dataclass
class _Quantities:
    """(g1, g2, delta1, delta2) with per-quantity definedness."""

    values: dict[str, float]
    suppressed: tuple[str, ...]


_ZERO = {"g1": 0.0, "g2": 0.0, "delta1": 0.0, "delta2": 0.0}


def _tally_quantities(
    pool: _Pool, prev: dict[str, float], smoothing: float
) -> _Quantities:
    rev = pool.revealed
    pos = rev & (pool.y == 1)
    a0 = pos & (pool.a_true == 0)
    a1 = pos & (pool.a_true == 1)
    specs = {
        "g1": (float((a0 & (pool.ahat == 1)).sum()), float(a0.sum())),
        "g2": (float((a1 & (pool.ahat == 0)).sum()), float(a1.sum())),
        "delta1": (
            float((a0 & (pool.yhat == 1) & (pool.ahat == 1)).sum()),
            float((a0 & (pool.yhat == 1)).sum()),
        ),
        "delta2": (
            float((a1 & (pool.yhat == 1) & (pool.ahat == 0)).sum()),
            float((a1 & (pool.yhat == 1)).sum()),
        ),
    }
    values: dict[str, float] = {}
    suppressed: list[str] = []
    for name, (num, den) in specs.items():
        if den <= 0.0 and smoothing <= 0.0:
            values[name] = prev[name]
            suppressed.append(name)
        else:
            values[name] = (num + smoothing) / (den + 2.0 * smoothing)
    return _Quantities(values=values, suppressed=tuple(suppressed))


def _plug_in_from_pool(pool: _Pool) -> float | None:
    a_star = np.where(pool.revealed, pool.a_true, pool.ahat)
    pos = pool.y == 1
    n1 = float((pos & (a_star == 1)).sum())
    n0 = float((pos & (a_star == 0)).sum())
    if n1 <= 0.0 or n0 <= 0.0:
        return None
    alpha = float((pos & (a_star == 1) & (pool.yhat == 1)).sum()) / n1
    beta = float((pos & (a_star == 0) & (pool.yhat == 1)).sum()) / n0
    return alpha - beta


def _general_estimate(
    naive: tuple[float, float], values: dict[str, float], r_hat: float, s_hat: float
) -> tuple[float | None, str | None]:
    try:
        profile = ErrorProfile(
            g1=values["g1"], g2=values["g2"], delta1=values["delta1"], delta2=values["delta2"]
        )
        est = general_corrected_bias(naive[0], naive[1], profile, Rates(r_hat, s_hat))
        return est, None
    except AuditError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _direct_estimate(pool: _Pool) -> tuple[float | None, str | None]:
    rev = pool.revealed & (pool.y == 1)
    n1 = float((rev & (pool.a_true == 1)).sum())
    n0 = float((rev & (pool.a_true == 0)).sum())
    if n1 <= 0.0 or n0 <= 0.0:
        return None, "MissingGroup: revealed positives cover only one group"
    alpha = float((rev & (pool.a_true == 1) & (pool.yhat == 1)).sum()) / n1
    beta = float((rev & (pool.a_true == 0) & (pool.yhat == 1)).sum()) / n0
    return abs(alpha - beta), None


def active_sampling(
    records: Sequence[PredictionRecord],
    oracle: AttributeOracle,
    *,
    b: int,
    w: int,
    epsilon: float,
    max_iters: int = 200,
    seed: int = 0,
    smoothing: float = 0.0,
) -> tuple[float | None, SamplingTrace]:
    """Uncertainty-ordered label acquisition; returns (estimate, trace).

    See the module docstring for the loop. The estimate is the general
    inversion of the pool's proxy-conditional rates using the sampled error
    profile; when it is degenerate the estimate is None and the trace's
    ``error`` says why.
    """
    if not (b >= w >= 1):
        raise InvalidParams(f"need b >= w >= 1, got b={b}, w={w}")
    if epsilon <= 0.0:
        raise InvalidParams(f"epsilon must be positive, got {epsilon}")
    if max_iters < 1:
        raise InvalidParams(f"max_iters must be >= 1, got {max_iters}")
    pool = _Pool(records, need_scores_on_positives=True)
    positives = np.flatnonzero(pool.y == 1)
    if positives.size < b:
        raise PoolExhausted(
            f"need at least b={b} positives to draw the initial batch, have {positives.size}"
        )
    rem = oracle.remaining()
    if rem is not None and rem < b:
        raise InvalidParams(f"budget {rem} is smaller than the initial batch b={b}")

    rng = np.random.default_rng(seed)
    trace = SamplingTrace(strategy="active")
    naive = naive_components(pool.naive_table())

    initial = rng.choice(positives, size=b, replace=False)
    pool.apply_reveals(oracle.reveal([str(i) for i in pool.ids[initial]]))
    r_hat = pool.positive_rate * float((pool.a_true[initial] == 1).mean())
    s_hat = pool.positive_rate * float((pool.a_true[initial] == 0).mean())

    prev = dict(_ZERO)
    estimate: float | None = None
    for t in range(1, max_iters + 1):
        unlabeled = positives[~pool.revealed[positives]]
        if unlabeled.size < b:
            trace.reason = "pool_exhausted"
            break
        rem = oracle.remaining()
        take = w if rem is None else min(w, rem)
        if take == 0:
            trace.reason = "budget_exhausted"
            break
        batch = rng.choice(unlabeled, size=b, replace=False)
        order = np.lexsort((pool.ids[batch].astype(str), np.abs(pool.score[batch] - 0.5)))
        chosen = batch[order[:take]]
        pool.apply_reveals(oracle.reveal([str(i) for i in pool.ids[chosen]]))

        quantities = _tally_quantities(pool, prev, smoothing)
        values = quantities.values
        estimate, err = _general_estimate(naive, values, r_hat, s_hat)
        trace.steps.append(
            TraceStep(
                iteration=t,
                labels_used=oracle.queries_used,
                g1=values["g1"],
                g2=values["g2"],
                delta1=values["delta1"],
                delta2=values["delta2"],
                r_hat=r_hat,
                s_hat=s_hat,
                estimate=estimate,
                estimator="general",
                plug_in=_plug_in_from_pool(pool),
                suppressed=quantities.suppressed,
            )
        )
        tested = [k for k in _ZERO if k not in quantities.suppressed]
        converged = bool(tested) and all(abs(values[k] - prev[k]) <= epsilon for k in tested)
        prev = values
        if err is not None:
            trace.error = err
        if converged:
            trace.reason = "converged"
            break
        if take < w:
            trace.reason = "budget_exhausted"
            break
    else:
        trace.reason = "max_iters"
    return estimate, trace


def _batched_sampling(
    records: Sequence[PredictionRecord],
    oracle: AttributeOracle,
    *,
    strategy: str,
    batch: int,
    target: int | None,
    seed: int,
    smoothing: float,
) -> tuple[float | None, SamplingTrace]:
    if batch < 1:
        raise InvalidParams(f"batch must be >= 1, got {batch}")
    if target is not None and target < 1:
        raise InvalidParams(f"target must be >= 1, got {target}")
    pool = _Pool(records, need_scores_on_positives=False)
    if strategy == "uniform":
        frame = np.arange(pool.n)
    else:
        frame = np.flatnonzero(pool.y == 1)
    if frame.size == 0:
        raise PoolExhausted(f"sampling frame for strategy {strategy!r} is empty")

    rng = np.random.default_rng(seed)
    trace = SamplingTrace(strategy=strategy)
    naive = naive_components(pool.naive_table())

    prev = dict(_ZERO)
    estimate: float | None = None
    t = 0
    while True:
        t += 1
        unlabeled = frame[~pool.revealed[frame]]
        rem = oracle.remaining()
        take = batch
        if target is not None:
            take = min(take, target - oracle.queries_used)
        if rem is not None:
            take = min(take, rem)
        take = min(take, unlabeled.size)
        if take <= 0:
            if target is not None and oracle.queries_used >= target:
                trace.reason = "target_reached"
            elif unlabeled.size == 0:
                trace.reason = "pool_exhausted"
            else:
                trace.reason = "budget_exhausted"
            break
        chosen = rng.choice(unlabeled, size=take, replace=False)
        pool.apply_reveals(oracle.reveal([str(i) for i in pool.ids[chosen]]))

        rev = pool.revealed
        if strategy == "uniform":
            n_rev = float(rev.sum())
            r_hat = float((rev & (pool.y == 1) & (pool.a_true == 1)).sum()) / n_rev
            s_hat = float((rev & (pool.y == 1) & (pool.a_true == 0)).sum()) / n_rev
        else:
            pos_rev = rev & (pool.y == 1)
            n_pos = float(pos_rev.sum())
            frac1 = float((pos_rev & (pool.a_true == 1)).sum()) / n_pos if n_pos else 0.0
            frac0 = float((pos_rev & (pool.a_true == 0)).sum()) / n_pos if n_pos else 0.0
            r_hat = pool.positive_rate * frac1
            s_hat = pool.positive_rate * frac0

        quantities = _tally_quantities(pool, prev, smoothing)
        values = quantities.values
        prev = values
        if strategy == "direct":
            estimate, err = _direct_estimate(pool)
            kind = "direct"
        else:
            estimate, err = _general_estimate(naive, values, r_hat, s_hat)
            kind = "general"
        if err is not None:
            trace.error = err
        trace.steps.append(
            TraceStep(
                iteration=t,
                labels_used=oracle.queries_used,
                g1=values["g1"],
                g2=values["g2"],
                delta1=values["delta1"],
                delta2=values["delta2"],
                r_hat=r_hat,
                s_hat=s_hat,
                estimate=estimate,
                estimator=kind,
                plug_in=_plug_in_from_pool(pool),
                suppressed=quantities.suppressed,
            )
        )
    return estimate, trace


def uniform_sampling(
    records: Sequence[PredictionRecord],
    oracle: AttributeOracle,
    *,
    batch: int,
    target: int | None = None,
    seed: int = 0,
    smoothing: float = 0.0,
) -> tuple[float | None, SamplingTrace]:
    """Reveal uniform batches over the whole pool until target/pool/budget
    runs out, re-estimating after each batch."""
    return _batched_sampling(
        records, oracle, strategy="uniform", batch=batch, target=target, seed=seed,
        smoothing=smoothing,
    )


def positive_sampling(
    records: Sequence[PredictionRecord],
    oracle: AttributeOracle,
    *,
    batch: int,
    target: int | None = None,
    seed: int = 0,
    smoothing: float = 0.0,
) -> tuple[float | None, SamplingTrace]:
    """Reveal uniform batches over the positive slice only."""
    return _batched_sampling(
        records, oracle, strategy="positive", batch=batch, target=target, seed=seed,
        smoothing=smoothing,
    )


def direct_sampling(
    records: Sequence[PredictionRecord],
    oracle: AttributeOracle,
    *,
    batch: int,
    target: int | None = None,
    seed: int = 0,
    smoothing: float = 0.0,
) -> tuple[float | None, SamplingTrace]:
    """Positive-frame reveals scored by the proxy-free direct estimate."""
    return _batched_sampling(
        records, oracle, strategy="direct", batch=batch, target=target, seed=seed,
        smoothing=smoothing,
    )


def direct_estimation(labeled: Sequence[PredictionRecord]) -> float:
    """|alpha - beta| from records carrying true attributes, nothing else."""
    table = build_joint_table(labeled, AttributeSource.TRUE_A)
    return abs(true_bias(table))


def plug_in_bias(
    records: Sequence[PredictionRecord],
    revealed: Mapping[str, bool] | Collection[str],
) -> float:
    """Signed gap using true attributes where revealed and predicted ones
    elsewhere.

    ``revealed`` is either an id -> attribute mapping (answers straight from
    an oracle) or a collection of ids whose records carry ``a``.
    """
    if isinstance(revealed, Mapping):
        lookup = {str(k): bool(v) for k, v in revealed.items()}
    else:
        lookup = {}
        by_id = {r.id: r for r in records}
        for rid in revealed:
            rec = by_id.get(rid)
            if rec is None:
                raise InvalidParams(f"revealed id {rid!r} is not in the pool")
            if rec.a is None:
                raise MissingField(rid, "a")
            lookup[rid] = bool(rec.a)
    num = {0: 0, 1: 0}
    den = {0: 0, 1: 0}
    for rec in records:
        if not rec.y:
            continue
        if rec.id in lookup:
            a_star = int(lookup[rec.id])
        else:
            if rec.a_hat is None:
                raise MissingField(rec.id, "a_hat")
            a_star = int(rec.a_hat)
        den[a_star] += 1
        num[a_star] += int(rec.y_hat)
    if den[1] == 0:
        raise EmptyPredictedGroup("(y=1, a*=1)")
    if den[0] == 0:
        raise EmptyPredictedGroup("(y=1, a*=0)")
    return num[1] / den[1] - num[0] / den[0]
