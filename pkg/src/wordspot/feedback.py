"""Rocchio query refinement and interactive feedback sessions.

Three strategies are supported: positive-only, negative-only, and combined.
Every round recomputes the refined query from the ORIGINAL query vector and
the cumulative union of all judgments made so far, so a session's state is
a pure function of its judgment history.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import subspace as subspace_mod
from .corpus import CorpusIndex
from .errors import (
    DimensionError,
    EmptyFeedbackError,
    JudgmentError,
    RangeError,
)
from .retrieval import (
    SPACE_SUBSPACE,
    QueryVector,
    RankedList,
    RankedResult,
    rank,
)

STRATEGY_POSITIVE = "positive"
STRATEGY_NEGATIVE = "negative"
STRATEGY_COMBINED = "combined"
STRATEGIES = (STRATEGY_POSITIVE, STRATEGY_NEGATIVE, STRATEGY_COMBINED)

SESSION_FILE_VERSION = 1
DEFAULT_SHOWN = 10


@dataclass(frozen=True)
class RocchioParams:
    """Weights for the refinement formula.

    Defaults follow the usual practice of weighting positive evidence above
    negative (gamma < beta); pass ``enforce_gamma_below_beta=False`` to
    experiment outside that rule.
    """

    alpha: float = 1.0
    beta: float = 0.82
    gamma: float = 0.25
    strategy: str = STRATEGY_POSITIVE
    enforce_gamma_below_beta: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise RangeError(f"{name} must be finite and non-negative")
        if self.strategy not in STRATEGIES:
            raise RangeError(f"unknown strategy {self.strategy!r}")
        if self.enforce_gamma_below_beta and self.gamma >= self.beta:
            raise RangeError(
                "gamma must stay below beta (pass enforce_gamma_below_beta=False "
                "to override)"
            )


@dataclass(frozen=True)
class Judgment:
    word_id: int
    relevant: bool


def _stack(vectors, dim: int) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(list(vectors), dtype=float))
    if rows.shape[1] != dim:
        raise DimensionError(
            f"feedback vectors have dimension {rows.shape[1]}, query has {dim}"
        )
    return rows


def _wrap_like(q0, vector: np.ndarray):
    if isinstance(q0, QueryVector):
        return QueryVector(vector, q0.space)
    return vector


def _vector_of(q0) -> np.ndarray:
    return q0.v if isinstance(q0, QueryVector) else np.asarray(q0, dtype=float)


def rocchio_positive(q0, relevant, alpha: float = 1.0, beta: float = 0.82):
    """Refined query: alpha * q0 + beta * centroid(relevant)."""
    base = _vector_of(q0)
    rows = np.asarray(list(relevant), dtype=float)
    if rows.size == 0:
        raise EmptyFeedbackError("no relevant vectors supplied")
    rows = _stack(rows, base.shape[0])
    return _wrap_like(q0, alpha * base + (beta / rows.shape[0]) * rows.sum(axis=0))


def rocchio_negative(q0, nonrelevant, alpha: float = 1.0, gamma: float = 0.25):
    """Refined query: alpha * q0 - gamma * centroid(nonrelevant)."""
    base = _vector_of(q0)
    rows = np.asarray(list(nonrelevant), dtype=float)
    if rows.size == 0:
        raise EmptyFeedbackError("no non-relevant vectors supplied")
    rows = _stack(rows, base.shape[0])
    return _wrap_like(q0, alpha * base - (gamma / rows.shape[0]) * rows.sum(axis=0))


def rocchio_combined(q0, relevant, nonrelevant, params: RocchioParams):
    """Refined query with both centroids; an empty side contributes nothing."""
    base = _vector_of(q0)
    rel = np.asarray(list(relevant), dtype=float)
    non = np.asarray(list(nonrelevant), dtype=float)
    if rel.size == 0 and non.size == 0:
        raise EmptyFeedbackError("no feedback vectors supplied")
    out = params.alpha * base
    if rel.size:
        rel = _stack(rel, base.shape[0])
        out = out + (params.beta / rel.shape[0]) * rel.sum(axis=0)
    if non.size:
        non = _stack(non, base.shape[0])
        out = out - (params.gamma / non.shape[0]) * non.sum(axis=0)
    return _wrap_like(q0, out)


@dataclass(frozen=True)
class RoundRecord:
    judgments: tuple[Judgment, ...]
    ranking: RankedList


@dataclass
class FeedbackSession:
    """Live state of one interactive query.

    ``q0`` never changes; ``q_current`` is replaced after each round.
    ``q0_original`` keeps the raw 93-component descriptor so subspace
    sessions can be re-fit (the optional refit extension).
    """

    session_id: str
    q0: QueryVector
    q_current: QueryVector
    params: RocchioParams
    rounds: list[RoundRecord] = field(default_factory=list)
    shown_n: int = DEFAULT_SHOWN
    q0_original: np.ndarray | None = None
    refit_min_positives: int | None = None
    cumulative: dict[int, bool] = field(default_factory=dict)
    local_model: subspace_mod.PcaModel | None = None
    local_matrix: np.ndarray | None = None
    index_path: str | None = None

    @property
    def space(self) -> str:
        return self.q0.space

    @property
    def round_index(self) -> int:
        return max(len(self.rounds) - 1, 0)

    def shown_ids(self) -> list[int]:
        if not self.rounds:
            return []
        return [int(w) for w in self.rounds[-1].ranking.word_ids[: self.shown_n]]


def create_session(
    index: CorpusIndex,
    q0: QueryVector,
    params: RocchioParams,
    shown_n: int = DEFAULT_SHOWN,
    session_id: str | None = None,
    q0_original: np.ndarray | None = None,
    refit_min_positives: int | None = None,
) -> FeedbackSession:
    """Open a session and perform the initial ranking (round 0)."""
    session = FeedbackSession(
        session_id=session_id or uuid.uuid4().hex,
        q0=q0,
        q_current=q0,
        params=params,
        shown_n=shown_n,
        q0_original=q0_original,
        refit_min_positives=refit_min_positives,
    )
    session.rounds.append(RoundRecord(judgments=(), ranking=rank(q0, index)))
    return session


def _session_vectors(session: FeedbackSession, index: CorpusIndex, ids: list[int]):
    positions = [index.position(w) for w in ids]
    if session.space == SPACE_SUBSPACE:
        matrix = (
            session.local_matrix
            if session.local_matrix is not None
            else index.subspace_matrix
        )
        return matrix[positions]
    return index.matrix[positions]


def _partition(session: FeedbackSession) -> tuple[list[int], list[int]]:
    relevant = sorted(w for w, r in session.cumulative.items() if r)
    nonrelevant = sorted(w for w, r in session.cumulative.items() if not r)
    return relevant, nonrelevant


def _maybe_refit(session: FeedbackSession, index: CorpusIndex, relevant_ids):
    """Optional extension: refit the subspace on positive examples only."""
    if (
        session.refit_min_positives is None
        or session.space != SPACE_SUBSPACE
        or len(relevant_ids) < max(2, session.refit_min_positives)
    ):
        return
    positions = [index.position(w) for w in relevant_ids]
    samples = index.matrix[positions]
    try:
        model = subspace_mod.fit_pca(samples, whiten=index.pca.whiten)
    except Exception:
        return
    session.local_model = model
    session.local_matrix = subspace_mod.project(model, index.matrix)
    session.q0 = QueryVector(
        subspace_mod.project(model, session.q0_original), SPACE_SUBSPACE
    )


def run_feedback_round(
    session: FeedbackSession, judgments, index: CorpusIndex
) -> RankedList:
    """Apply one round of judgments and re-rank.

    Judgments must reference word ids shown in the previous round. The
    refined query is recomputed from q0 using the cumulative judgment set;
    a judgment set that leaves the session strategy with no usable side
    raises EmptyFeedbackError.
    """
    judgments = tuple(
        j if isinstance(j, Judgment) else Judgment(int(j[0]), bool(j[1]))
        for j in judgments
    )
    if not judgments:
        raise EmptyFeedbackError("no judgments supplied")
    shown = set(session.shown_ids())
    for j in judgments:
        try:
            index.position(j.word_id)
        except KeyError:
            raise JudgmentError(f"unknown word_id {j.word_id}") from None
        if j.word_id not in shown:
            raise JudgmentError(
                f"word_id {j.word_id} was not shown in the previous round"
            )

    for j in judgments:
        session.cumulative[j.word_id] = j.relevant
    relevant_ids, nonrelevant_ids = _partition(session)

    strategy = session.params.strategy
    if strategy == STRATEGY_POSITIVE:
        if not relevant_ids:
            raise EmptyFeedbackError("positive-only round needs a relevant judgment")
        _maybe_refit(session, index, relevant_ids)
        refined = rocchio_positive(
            session.q0,
            _session_vectors(session, index, relevant_ids),
            session.params.alpha,
            session.params.beta,
        )
    elif strategy == STRATEGY_NEGATIVE:
        if not nonrelevant_ids:
            raise EmptyFeedbackError(
                "negative-only round needs a non-relevant judgment"
            )
        refined = rocchio_negative(
            session.q0,
            _session_vectors(session, index, nonrelevant_ids),
            session.params.alpha,
            session.params.gamma,
        )
    else:
        if not relevant_ids and not nonrelevant_ids:
            raise EmptyFeedbackError("combined round needs at least one judgment")
        _maybe_refit(session, index, relevant_ids)
        refined = rocchio_combined(
            session.q0,
            _session_vectors(session, index, relevant_ids),
            _session_vectors(session, index, nonrelevant_ids),
            session.params,
        )

    refined = _renormalize(refined, session.params, relevant_ids, nonrelevant_ids)
    session.q_current = refined
    if session.local_matrix is not None:
        ranking = _rank_local(refined, index, session.local_matrix)
    else:
        ranking = rank(refined, index)
    session.rounds.append(RoundRecord(judgments=judgments, ranking=ranking))
    return ranking


def _renormalize(refined, params: RocchioParams, relevant_ids, nonrelevant_ids):
    """Scale the refined query back by the net applied weight mass.

    The raw update inflates the query norm by alpha + beta (positive side)
    or deflates it (negative side), which would push every entry's
    similarity rate down and starve a fixed retrieval threshold. Dividing
    by the net weight keeps the refined query on the descriptor scale; a
    judged exact duplicate of the query therefore stays at distance zero.
    """
    strategy = params.strategy
    mass = params.alpha
    if strategy in (STRATEGY_POSITIVE, STRATEGY_COMBINED) and relevant_ids:
        mass += params.beta
    if strategy in (STRATEGY_NEGATIVE, STRATEGY_COMBINED) and nonrelevant_ids:
        mass -= params.gamma
    if mass <= 1e-9:
        return refined
    return QueryVector(refined.v / mass, refined.space)


def _rank_local(query: QueryVector, index: CorpusIndex, matrix: np.ndarray):
    """Rank against a session-local projected matrix (refit extension)."""
    diff = matrix - query.v
    distances = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((index.ids, distances))
    sorted_d = distances[order]
    max_md = float(sorted_d[-1])
    rates = (
        100.0 * (1.0 - sorted_d / max_md)
        if max_md > 0
        else np.full(len(sorted_d), 100.0)
    )
    return RankedList(
        word_ids=index.ids[order],
        distances=sorted_d,
        rates=rates,
        max_distance=max_md,
        space=query.space,
        doc_ids=index.doc_ids[order],
    )


# ---------------------------------------------------------------------------
# Session files (CLI round-tripping)
# ---------------------------------------------------------------------------


def session_to_dict(session: FeedbackSession, keep_top: int | None = None) -> dict:
    keep = keep_top if keep_top is not None else session.shown_n
    return {
        "file_version": SESSION_FILE_VERSION,
        "session_id": session.session_id,
        "space": session.space,
        "shown_n": session.shown_n,
        "index_path": session.index_path,
        "params": {
            "alpha": session.params.alpha,
            "beta": session.params.beta,
            "gamma": session.params.gamma,
            "strategy": session.params.strategy,
            "enforce_gamma_below_beta": session.params.enforce_gamma_below_beta,
        },
        "q0": session.q0.v.tolist(),
        "q_current": session.q_current.v.tolist(),
        "q0_original": (
            session.q0_original.tolist() if session.q0_original is not None else None
        ),
        "cumulative": [[int(w), bool(r)] for w, r in sorted(session.cumulative.items())],
        "rounds": [
            {
                "judgments": [[j.word_id, j.relevant] for j in rec.judgments],
                "max_distance": rec.ranking.max_distance,
                "total": len(rec.ranking),
                "top": [
                    [int(w), float(d), float(r)]
                    for w, d, r in zip(
                        rec.ranking.word_ids[:keep],
                        rec.ranking.distances[:keep],
                        rec.ranking.rates[:keep],
                    )
                ],
            }
            for rec in session.rounds
        ],
    }


def session_from_dict(doc: dict) -> FeedbackSession:
    if doc.get("file_version") != SESSION_FILE_VERSION:
        raise ValueError(f"unsupported session file version {doc.get('file_version')}")
    params = RocchioParams(**doc["params"])
    space = doc["space"]
    q0 = QueryVector(np.array(doc["q0"], dtype=float), space)
    session = FeedbackSession(
        session_id=doc["session_id"],
        q0=q0,
        q_current=QueryVector(np.array(doc["q_current"], dtype=float), space),
        params=params,
        shown_n=doc["shown_n"],
        q0_original=(
            np.array(doc["q0_original"], dtype=float)
            if doc.get("q0_original") is not None
            else None
        ),
        cumulative={int(w): bool(r) for w, r in doc["cumulative"]},
        index_path=doc.get("index_path"),
    )
    for rec in doc["rounds"]:
        top = rec["top"]
        ranking = RankedList(
            word_ids=np.array([t[0] for t in top], dtype=np.int64),
            distances=np.array([t[1] for t in top]),
            rates=np.array([t[2] for t in top]),
            max_distance=rec["max_distance"],
            space=space,
        )
        session.rounds.append(
            RoundRecord(
                judgments=tuple(Judgment(int(w), bool(r)) for w, r in rec["judgments"]),
                ranking=ranking,
            )
        )
    return session


def save_session(session: FeedbackSession, path: str | Path) -> None:
    Path(path).write_text(json.dumps(session_to_dict(session), indent=2))


def load_session(path: str | Path) -> FeedbackSession:
    return session_from_dict(json.loads(Path(path).read_text()))
