"""Forward selection by deviance-difference chi-square tests.

Phase 1 greedily adds the main effect with the smallest deviance-test
p-value while it stays under alpha; phase 2 repeats the rule over a
pool of two-way interactions.  Every candidate evaluation of every
step, including the terminating step where nothing clears alpha, is
kept on the trace so the whole run can be audited or re-derived.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, InputError
from .logit import (
    FitError,
    FittedLogitModel,
    ModelSpec,
    ModelTerm,
    fit,
    pattern_counts,
    predict_proba_many,
)
from .stats import chi_square_sf

P_TIE_TOL = 1e-12


@dataclass(frozen=True)
class CandidateEvaluation:
    term: ModelTerm
    deviance: float
    delta_deviance: float
    delta_df: int
    p_value: float
    failed: bool = False
    clamped: bool = False

    def to_json_dict(self) -> dict:
        return {
            "term": self.term.label(),
            "deviance": self.deviance,
            "delta_deviance": self.delta_deviance,
            "delta_df": self.delta_df,
            "p_value": self.p_value,
            "failed": self.failed,
            "clamped": self.clamped,
        }


@dataclass(frozen=True)
class SelectionStep:
    phase: str  # "main" | "interaction"
    base_terms: tuple[str, ...]
    base_deviance: float
    evaluations: tuple[CandidateEvaluation, ...]
    winner: ModelTerm | None
    tie: bool = False

    def to_json_dict(self) -> dict:
        return {
            "phase": self.phase,
            "base_terms": list(self.base_terms),
            "base_deviance": self.base_deviance,
            "evaluations": [e.to_json_dict() for e in self.evaluations],
            "winner": self.winner.label() if self.winner else None,
            "tie": self.tie,
        }


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    alpha: float
    final_spec: ModelSpec
    final_model: FittedLogitModel

    @property
    def selected_mains(self) -> list[str]:
        return [
            s.winner.attrs[0]
            for s in self.steps
            if s.phase == "main" and s.winner is not None
        ]

    @property
    def selected_interactions(self) -> list[ModelTerm]:
        return [
            s.winner for s in self.steps if s.phase == "interaction" and s.winner
        ]

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "final_terms": self.final_spec.term_labels(),
            "final_deviance": self.final_model.deviance,
            "steps": [s.to_json_dict() for s in self.steps],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    def save_csv(self, path: str | Path) -> None:
        """Step-by-step candidate table (base row, then one row per term)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "step",
                    "phase",
                    "term",
                    "raw_deviance",
                    "delta_deviance",
                    "delta_df",
                    "p_value",
                    "winner",
                ]
            )
            for num, step in enumerate(self.steps, start=1):
                writer.writerow(
                    [
                        num,
                        step.phase,
                        "+".join(step.base_terms),
                        f"{step.base_deviance:.6f}",
                        "0",
                        "-",
                        "-",
                        "",
                    ]
                )
                for ev in step.evaluations:
                    writer.writerow(
                        [
                            num,
                            step.phase,
                            ev.term.label(),
                            "" if ev.failed else f"{ev.deviance:.6f}",
                            "" if ev.failed else f"{ev.delta_deviance:.6f}",
                            ev.delta_df,
                            f"{ev.p_value:.10g}",
                            "yes" if step.winner == ev.term else "",
                        ]
                    )


def _evaluate_one(
    data: Dataset, base: FittedLogitModel, term: ModelTerm
) -> tuple[CandidateEvaluation, FittedLogitModel | None]:
    try:
        model = fit(data, base.spec.with_term(term), base.baseline_class)
    except FitError:
        return (
            CandidateEvaluation(term, math.nan, math.nan, 0, 1.0, failed=True),
            None,
        )
    raw_delta = base.deviance - model.deviance
    clamped = raw_delta < 0
    delta = max(raw_delta, 0.0)
    delta_df = model.n_params - base.n_params
    p = chi_square_sf(delta, delta_df)
    return (
        CandidateEvaluation(term, model.deviance, delta, delta_df, p, clamped=clamped),
        model,
    )


def _evaluate_all(
    data: Dataset,
    base: FittedLogitModel,
    candidates: list[ModelTerm],
    jobs: int = 1,
) -> list[tuple[CandidateEvaluation, FittedLogitModel | None]]:
    present = set(base.spec.terms)
    for term in candidates:
        if term in present:
            raise InputError(f"candidate {term.label()!r} is already in the base model")
    if jobs > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: _evaluate_one(data, base, t), candidates))
    return [_evaluate_one(data, base, t) for t in candidates]


def evaluate_candidates(
    data: Dataset,
    base: FittedLogitModel,
    candidates: list[ModelTerm],
    jobs: int = 1,
) -> list[CandidateEvaluation]:
    """Deviance test of each candidate term added to the base model.

    Results come back in candidate order; a candidate whose refit fails
    is flagged and given p = 1 so it can never win a selection step.
    """
    return [ev for ev, _ in _evaluate_all(data, base, candidates, jobs)]


def _pick_winner(
    evaluations: list[CandidateEvaluation], alpha: float
) -> tuple[int | None, bool]:
    best = None
    for i, ev in enumerate(evaluations):
        if ev.failed:
            continue
        if best is None or ev.p_value < evaluations[best].p_value - P_TIE_TOL:
            best = i
    if best is None or not evaluations[best].p_value < alpha:
        return None, False
    tie = any(
        i != best
        and not ev.failed
        and abs(ev.p_value - evaluations[best].p_value) <= P_TIE_TOL
        for i, ev in enumerate(evaluations)
    )
    return best, tie


def forward_select(
    data: Dataset,
    main_pool: list[str],
    interaction_pool: list[ModelTerm] | None = None,
    alpha: float = 0.05,
    jobs: int = 1,
    baseline_class: int | None = None,
) -> SelectionTrace:
    """Two-phase greedy forward selection starting from the intercept model.

    With interaction_pool=None the phase-2 pool is derived after phase 1:
    all pairs among the selected main effects plus all pairs among the
    main-pool attributes that were not selected.  Pass an explicit list
    (possibly empty) to control phase 2 directly.
    """
    if not 0 <= alpha <= 1:
        raise InputError(f"alpha must be in [0, 1], got {alpha}")
    base = fit(data, ModelSpec.intercept_only(data.schema), baseline_class)
    steps: list[SelectionStep] = []

    def run_phase(phase: str, pool: list[ModelTerm]) -> None:
        nonlocal base
        pool = [t for t in pool if t not in set(base.spec.terms)]
        while pool:
            results = _evaluate_all(data, base, pool, jobs)
            evaluations = [ev for ev, _ in results]
            best, tie = _pick_winner(evaluations, alpha)
            steps.append(
                SelectionStep(
                    phase=phase,
                    base_terms=tuple(base.spec.term_labels()),
                    base_deviance=base.deviance,
                    evaluations=tuple(evaluations),
                    winner=None if best is None else evaluations[best].term,
                    tie=tie,
                )
            )
            if best is None:
                return
            base = results[best][1]
            pool = [t for i, t in enumerate(pool) if i != best]

    run_phase("main", [ModelTerm.main(a) for a in main_pool])
    if interaction_pool is None:
        selected = [
            t.attrs[0] for t in base.spec.terms if t.kind == "main"
        ]
        interaction_pool = default_interaction_pool(selected, list(main_pool))
    run_phase("interaction", list(interaction_pool))

    return SelectionTrace(tuple(steps), alpha, base.spec, base)


def default_interaction_pool(
    selected: list[str], screened: list[str]
) -> list[ModelTerm]:
    """Candidate two-way interactions for phase 2.

    All pairs among the selected main effects, plus all pairs among the
    screened-but-unselected attributes.  Pair order is deterministic.
    """
    pool: list[ModelTerm] = []
    seen = set()

    def add_pairs(attrs: list[str]) -> None:
        for i in range(len(attrs)):
            for j in range(i + 1, len(attrs)):
                term = ModelTerm.interaction(attrs[i], attrs[j])
                if term not in seen:
                    seen.add(term)
                    pool.append(term)

    add_pairs(selected)
    add_pairs([a for a in screened if a not in selected])
    return pool


@dataclass(frozen=True)
class GoodnessOfFit:
    deviance: float
    residual_df: int
    p_value: float
    lack_of_fit: bool

    def to_json_dict(self) -> dict:
        return {
            "deviance": self.deviance,
            "residual_df": self.residual_df,
            "p_value": self.p_value,
            "lack_of_fit": self.lack_of_fit,
        }


def saturated_comparison(
    model: FittedLogitModel, data: Dataset
) -> tuple[float, int]:
    """(deviance vs the pattern-level saturated model, residual df).

    Covariate patterns are the distinct level combinations of the
    attributes the model actually uses.  residual df may be <= 0 when
    the model itself is saturated; goodness_of_fit rejects that case.
    """
    k = data.schema.class_attribute.n_levels
    reps, counts = pattern_counts(data, model.spec.involved_attributes())
    m = reps.shape[0]
    residual_df = (k - 1) * m - model.n_params
    totals = counts.sum(axis=1)
    pi = predict_proba_many(model, reps)
    mask = counts > 0
    loglik_model = float((counts[mask] * np.log(pi[mask])).sum())
    loglik_sat = float(
        (counts[mask] * np.log(counts[mask] / totals[:, None].repeat(k, 1)[mask])).sum()
    )
    return max(0.0, -2.0 * (loglik_model - loglik_sat)), residual_df


def goodness_of_fit(model: FittedLogitModel, data: Dataset) -> GoodnessOfFit:
    """Lack-of-fit test of the model deviance against the saturated model."""
    dev, residual_df = saturated_comparison(model, data)
    if residual_df <= 0:
        raise InputError(
            f"model is saturated or oversaturated: residual df = {residual_df}"
        )
    p = chi_square_sf(dev, residual_df)
    return GoodnessOfFit(dev, residual_df, p, p < 0.05)
