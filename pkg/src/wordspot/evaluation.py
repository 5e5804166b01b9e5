"""Batch retrieval experiments with a simulated relevance oracle.

Samples random query words from a labeled index, runs ranking plus optional
feedback rounds where an oracle judges the shown items by exact label
match, and reports precision/recall per query and on average. Reports are
deterministic functions of (index, config); wall-clock scan timings are
kept on the report object and in console output but stay out of the
canonical serialized document.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import subspace as subspace_mod
from .corpus import CorpusIndex
from .errors import GenerationError, NoGroundTruthError, RangeError
from .feedback import (
    STRATEGIES,
    Judgment,
    RocchioParams,
    create_session,
    run_feedback_round,
)
from .retrieval import query_from_descriptor, rank

STRATEGY_BASELINE = "baseline"
REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EvalConfig:
    """Protocol knobs for one experiment run."""

    n_queries: int = 30
    shown_per_round: int = 10
    rounds: int = 1
    rate_threshold: float = 75.0
    strategy: str = STRATEGY_BASELINE
    params: RocchioParams = field(
        default_factory=lambda: RocchioParams(strategy="positive")
    )
    use_subspace: bool = False
    variance_target: float = 0.95
    # Two-phase subspace mode: plain L1 on raw projections. Whitening is the
    # ad-hoc search default but concentrates distances on this protocol.
    subspace_whiten: bool = False
    seed: int = 42
    refit_min_positives: int | None = None

    def __post_init__(self):
        if self.n_queries < 1:
            raise RangeError("need at least one query")
        if not 0.0 <= self.rate_threshold <= 100.0:
            raise RangeError("rate threshold must lie in [0, 100]")
        if self.strategy != STRATEGY_BASELINE and self.strategy not in STRATEGIES:
            raise RangeError(f"unknown strategy {self.strategy!r}")

    def describe(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "shown_per_round": self.shown_per_round,
            "rounds": self.rounds,
            "rate_threshold": self.rate_threshold,
            "strategy": self.strategy,
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "use_subspace": self.use_subspace,
            "variance_target": self.variance_target,
            "subspace_whiten": self.subspace_whiten,
            "seed": self.seed,
            "refit_min_positives": self.refit_min_positives,
            "self_match_excluded": True,
        }


@dataclass
class QueryResult:
    word: str
    source_word_id: int
    n_relevant: int
    precision: float
    recall: float
    per_round: list[dict]
    scan_seconds: float


@dataclass
class EvalReport:
    config: dict
    queries: list[QueryResult]
    avg_precision: float
    avg_recall: float
    per_query_scan_seconds: list[float]

    @property
    def mean_scan_seconds(self) -> float:
        return float(np.mean(self.per_query_scan_seconds))

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "avg_precision": self.avg_precision,
            "avg_recall": self.avg_recall,
            "queries": [
                {
                    "word": q.word,
                    "source_word_id": q.source_word_id,
                    "n_relevant": q.n_relevant,
                    "precision": q.precision,
                    "recall": q.recall,
                    "rounds": q.per_round,
                }
                for q in self.queries
            ],
        }

    def to_canonical_json(self) -> str:
        """Deterministic report document; timing is deliberately excluded."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def precision_recall(retrieved, relevant) -> tuple[float, float]:
    """Set precision and recall; empty retrieved set scores zero precision."""
    retrieved = set(retrieved)
    relevant = set(relevant)
    if not relevant:
        raise NoGroundTruthError("relevant set is empty")
    hits = len(retrieved & relevant)
    precision = hits / len(retrieved) if retrieved else 0.0
    return precision, hits / len(relevant)


def feedback_oracle(shown_ids, query_label: str, index: CorpusIndex, strategy: str):
    """Judge shown items by exact lowercased label match.

    The judgment list is filtered to what the strategy consumes: positive
    keeps only relevant items, negative only non-relevant ones.
    """
    if not query_label:
        raise NoGroundTruthError("query label is empty")
    target = query_label.lower()
    judgments = []
    for word_id in shown_ids:
        entry = index.entry(int(word_id))
        if entry.label is None:
            raise NoGroundTruthError(f"entry {entry.word_id} has no label")
        judgments.append(Judgment(int(word_id), entry.label == target))
    if strategy == "positive":
        return [j for j in judgments if j.relevant]
    if strategy == "negative":
        return [j for j in judgments if not j.relevant]
    return judgments


def _label_occurrences(index: CorpusIndex) -> dict[str, list[int]]:
    table: dict[str, list[int]] = {}
    for e in index.entries:
        if e.label:
            table.setdefault(e.label, []).append(e.word_id)
    return table


def eligible_query_words(index: CorpusIndex, min_length: int = 4) -> dict[str, list[int]]:
    """Words usable as queries: length >= 4 with at least two occurrences."""
    return {
        w: ids
        for w, ids in _label_occurrences(index).items()
        if len(w) >= min_length and len(ids) >= 2
    }


def _prepare_index(index: CorpusIndex, config: EvalConfig) -> CorpusIndex:
    if config.use_subspace and index.pca is None:
        model = subspace_mod.fit_pca(
            index.matrix,
            variance_target=config.variance_target,
            whiten=config.subspace_whiten,
        )
        return index.with_pca(model)
    return index


def run_experiment(index: CorpusIndex, config: EvalConfig) -> EvalReport:
    """Run the batch protocol and average precision/recall over queries.

    The retrieved set is every entry whose final similarity rate reaches the
    threshold; the query's own source occurrence is excluded from both the
    retrieved and the relevant sets.
    """
    index = _prepare_index(index, config)
    vocabulary = eligible_query_words(index)
    if len(vocabulary) < config.n_queries:
        raise GenerationError(
            f"only {len(vocabulary)} eligible query words, need {config.n_queries}"
        )

    rng = np.random.default_rng(config.seed)
    words = sorted(vocabulary)
    chosen = [words[i] for i in rng.choice(len(words), config.n_queries, replace=False)]

    results = []
    timings = []
    for word in chosen:
        occurrences = vocabulary[word]
        source_id = occurrences[int(rng.integers(0, len(occurrences)))]
        descriptor = index.entry(source_id).descriptor
        query = query_from_descriptor(descriptor, index, config.use_subspace)

        start = time.perf_counter()
        ranking = rank(query, index)
        elapsed = time.perf_counter() - start

        relevant = set(occurrences) - {source_id}
        per_round = [_round_metrics(0, ranking, relevant, source_id, config)]

        if config.strategy != STRATEGY_BASELINE:
            params = replace(config.params, strategy=config.strategy)
            session = create_session(
                index,
                query,
                params,
                shown_n=config.shown_per_round,
                q0_original=descriptor,
                refit_min_positives=config.refit_min_positives,
            )
            for round_no in range(1, config.rounds + 1):
                judgments = feedback_oracle(
                    session.shown_ids(), word, index, config.strategy
                )
                if not judgments:
                    break
                ranking = run_feedback_round(session, judgments, index)
                per_round.append(
                    _round_metrics(round_no, ranking, relevant, source_id, config)
                )

        final = per_round[-1]
        results.append(
            QueryResult(
                word=word,
                source_word_id=int(source_id),
                n_relevant=len(relevant),
                precision=final["precision"],
                recall=final["recall"],
                per_round=per_round,
                scan_seconds=elapsed,
            )
        )
        timings.append(elapsed)

    avg_p = sum(r.precision for r in results) / len(results)
    avg_r = sum(r.recall for r in results) / len(results)
    return EvalReport(
        config=config.describe(),
        queries=results,
        avg_precision=avg_p,
        avg_recall=avg_r,
        per_query_scan_seconds=timings,
    )


def _round_metrics(round_no, ranking, relevant, source_id, config) -> dict:
    keep = ranking.rates >= config.rate_threshold
    retrieved = set(int(w) for w in ranking.word_ids[keep]) - {int(source_id)}
    precision, recall = precision_recall(retrieved, relevant)
    return {
        "round": round_no,
        "precision": precision,
        "recall": recall,
        "retrieved": len(retrieved),
    }


STANDARD_METHODS = (
    ("baseline", STRATEGY_BASELINE, False),
    ("positive", "positive", False),
    ("negative", "negative", False),
    ("combined", "combined", False),
    ("pca-baseline", STRATEGY_BASELINE, True),
)


@dataclass
class StrategyComparison:
    rows: list[dict]
    reports: dict[str, EvalReport]

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "rows": [
                {k: v for k, v in row.items() if k != "mean_scan_seconds"}
                for row in self.rows
            ],
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_text_table(self, include_timing: bool = True) -> str:
        lines = ["Method        Precision  Recall" + ("    Scan ms" if include_timing else "")]
        for row in self.rows:
            line = (
                f"{row['method']:<13} {100 * row['avg_precision']:8.2f}%"
                f" {100 * row['avg_recall']:7.2f}%"
            )
            if include_timing:
                line += f" {1000 * row['mean_scan_seconds']:9.3f}"
            lines.append(line)
        return "\n".join(lines)


def compare_strategies(index: CorpusIndex, base_config: EvalConfig) -> StrategyComparison:
    """Run every standard method with a shared seed and tabulate averages."""
    subspace_index = _prepare_index(index, replace(base_config, use_subspace=True))
    rows = []
    reports = {}
    for method, strategy, use_subspace in STANDARD_METHODS:
        config = replace(base_config, strategy=strategy, use_subspace=use_subspace)
        report = run_experiment(subspace_index if use_subspace else index, config)
        reports[method] = report
        row = {
            "method": method,
            "avg_precision": report.avg_precision,
            "avg_recall": report.avg_recall,
            "mean_scan_seconds": report.mean_scan_seconds,
        }
        if use_subspace:
            model = subspace_index.pca
            row["retained_dim"] = model.m
            row["tail_error"] = subspace_mod.reconstruction_error(model)
        rows.append(row)
    return StrategyComparison(rows=rows, reports=reports)
