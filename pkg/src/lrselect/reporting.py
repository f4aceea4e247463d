"""Post-selection reporting.

Converts a common-denominator (ALR) model to its log-contrast form, reruns
it under an alternative denominator, attaches bootstrap percentile
intervals to the per-part coefficients and their multiplicative effects,
computes deviance scree data, and exports the selection graph as DOT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .composition import LogratioTerm, TermGraph, alr_terms
from .errors import ConvergenceError, DataValidationError, RankDeficiencyError
from .glm import Family, FitSummary, fit_glm
from .ingest import DatasetBundle, build_design
from .stepwise import SelectionSession

__all__ = [
    "LogContrastEntry",
    "LogContrastReport",
    "ScreeRow",
    "ScreeData",
    "to_logcontrast",
    "rerun_with_denominator",
    "bootstrap_logcontrast",
    "scree",
    "export_graph",
]


@dataclass(frozen=True)
class LogContrastEntry:
    part: str
    coefficient: float
    std_error: float | None
    p_value: float | None
    multiplicative_effect: float
    percent_effect: float  # 100 * (exp(coefficient) - 1)
    ci_lower: float | None = None
    ci_upper: float | None = None
    effect_ci_lower: float | None = None
    effect_ci_upper: float | None = None


@dataclass(frozen=True)
class LogContrastReport:
    """Per-part log-contrast coefficients, sorted descending."""

    entries: tuple[LogContrastEntry, ...]
    denominator: str
    bootstrap_b: int | None = None
    bootstrap_failures: int = 0
    levels: tuple[float, float] | None = None

    def entry_for(self, part: str) -> LogContrastEntry:
        for e in self.entries:
            if e.part == part:
                return e
        raise KeyError(part)


@dataclass(frozen=True)
class ScreeRow:
    step: int
    label: str
    incremental: float
    cumulative: float


@dataclass(frozen=True)
class ScreeData:
    rows: tuple[ScreeRow, ...]
    baseline: float
    floor: float | None
    max_explainable: float | None
    units: str  # "percent" when the floor is available, else "deviance"


def _common_denominator(terms: Sequence[LogratioTerm]) -> int:
    if not terms:
        raise DataValidationError("no logratio terms to convert")
    dens = {t.den for t in terms}
    if len(dens) != 1:
        raise DataValidationError(f"terms use mixed denominators (part indices {sorted(dens)})")
    return terms[0].den


def _entry(part: str, coef: float, se: float | None, p: float | None) -> LogContrastEntry:
    return LogContrastEntry(
        part=part,
        coefficient=coef,
        std_error=se,
        p_value=p,
        multiplicative_effect=math.exp(coef),
        percent_effect=100.0 * (math.exp(coef) - 1.0),
    )


def to_logcontrast(fit: FitSummary, terms: Sequence[LogratioTerm], parts: Sequence[str]) -> LogContrastReport:
    """Re-express an ALR model as one coefficient per involved part.

    Numerator parts keep their fitted coefficient, standard error and
    p-value; the denominator part gets minus the coefficient sum (rerun
    with another denominator to recover its standard error).
    """
    terms = list(terms)
    den = _common_denominator(terms)
    entries = []
    total = 0.0
    for t in terms:
        label = t.label(parts)
        idx = fit.term_labels.index(label)
        coef = float(fit.coefficients[idx])
        total += coef
        entries.append(_entry(parts[t.num], coef, float(fit.std_errors[idx]), float(fit.p_values[idx])))
    entries.append(_entry(parts[den], -total, None, None))
    entries.sort(key=lambda e: -e.coefficient)
    return LogContrastReport(entries=tuple(entries), denominator=parts[den])


def rerun_with_denominator(session: SelectionSession, new_den: int) -> FitSummary:
    """Refit a method-3 model with the ALR terms re-based on another part.

    The deviance is unchanged (any spanning set of the subcomposition fits
    identically); the point is to recover the standard error and p-value
    of the original denominator's log-contrast entry.
    """
    terms = session.all_terms()
    old_den = _common_denominator(terms)
    subcomposition = {old_den} | {t.num for t in terms}
    if new_den not in subcomposition:
        names = ", ".join(session.parts[p] for p in sorted(subcomposition))
        raise DataValidationError(
            f"part {session.parts[new_den]!r} is not in the selected subcomposition ({names})"
        )
    if new_den == old_den:
        return session.current_fit
    rebased = [
        LogratioTerm(old_den, new_den) if t.num == new_den else LogratioTerm(t.num, new_den)
        for t in terms
    ]
    X, labels = build_design(session.bundle, rebased, session.forced_covariates)
    return fit_glm(X, session.bundle.response, session.family, labels)


def bootstrap_logcontrast(
    bundle: DatasetBundle,
    terms: Sequence[LogratioTerm],
    B: int = 1000,
    seed: int = 0,
    levels: tuple[float, float] = (2.5, 97.5),
    covariate_indices: Sequence[int] = (),
    stratify: bool = False,
) -> LogContrastReport:
    """Nonparametric bootstrap CIs for the log-contrast coefficients.

    Rows (composition, response, covariates) are resampled jointly with
    replacement, each replicate refit and converted; per-part percentile
    bounds are reported on the coefficient scale and exponentiated as
    multiplicative-effect CIs. Point estimates are the full-data fit.
    Non-converged replicates are dropped; more than 10% failures aborts.
    """
    terms = list(terms)
    if B < 100:
        raise DataValidationError(f"need at least 100 bootstrap samples, got {B}")
    lo, hi = levels
    if not 0.0 < lo < hi < 100.0:
        raise DataValidationError(f"percentile levels must satisfy 0 < lo < hi < 100, got {levels}")
    den = _common_denominator(terms)
    parts = bundle.composition.parts
    X, labels = build_design(bundle, terms, covariate_indices)
    y = bundle.response
    full_fit = fit_glm(X, y, bundle.family, labels)
    report = to_logcontrast(full_fit, terms, parts)

    term_cols = [labels.index(t.label(parts)) for t in terms]
    n = bundle.n
    rng = np.random.default_rng(seed)
    if stratify and bundle.family is Family.BINOMIAL:
        class_idx = [np.flatnonzero(y == v) for v in (0.0, 1.0)]
    else:
        stratify = False

    draws = np.empty((B, len(terms) + 1))  # one column per numerator + denominator
    failures = 0
    kept = 0
    for _ in range(B):
        if stratify:
            idx = np.concatenate([cls[rng.integers(0, len(cls), len(cls))] for cls in class_idx])
        else:
            idx = rng.integers(0, n, n)
        try:
            fit = fit_glm(X[idx], y[idx], bundle.family, labels)
        except (RankDeficiencyError, DataValidationError):
            failures += 1
            continue
        if not fit.converged:
            failures += 1
            continue
        coefs = fit.coefficients[term_cols]
        draws[kept, :-1] = coefs
        draws[kept, -1] = -coefs.sum()
        kept += 1
    if failures > 0.10 * B:
        raise ConvergenceError(
            f"{failures} of {B} bootstrap replicates failed to converge; "
            "the percentile intervals would not be trustworthy"
        )
    draws = draws[:kept]

    bounds = {}
    for k, t in enumerate(terms):
        bounds[parts[t.num]] = np.percentile(draws[:, k], [lo, hi])
    bounds[parts[den]] = np.percentile(draws[:, -1], [lo, hi])

    entries = []
    for e in report.entries:
        b_lo, b_hi = bounds[e.part]
        entries.append(
            replace(
                e,
                ci_lower=float(b_lo),
                ci_upper=float(b_hi),
                effect_ci_lower=math.exp(float(b_lo)),
                effect_ci_upper=math.exp(float(b_hi)),
            )
        )
    return LogContrastReport(
        entries=tuple(entries),
        denominator=report.denominator,
        bootstrap_b=B,
        bootstrap_failures=failures,
        levels=(lo, hi),
    )


def scree(session: SelectionSession) -> ScreeData:
    """Deviance accounted for per step, as percent of the achievable maximum.

    The maximum is baseline (step-0) deviance minus the deviance of a model
    holding a complete spanning set of J-1 logratios; the spanning set used
    is the star rooted at part 0 (any spanning set gives the same floor).
    When n is too small for that full model, raw deviance drops are
    returned and the maximum is marked unavailable.
    """
    baseline = session.history[0].minus2loglik
    star = alr_terms(session.bundle.j, 0)
    floor_fit = None
    m_floor = 1 + len(session.forced_covariates) + len(star)
    if session.bundle.n > m_floor:
        X, labels = build_design(session.bundle, star, session.forced_covariates)
        try:
            candidate = fit_glm(X, session.bundle.response, session.family, labels)
            if candidate.converged:
                floor_fit = candidate
        except RankDeficiencyError:
            floor_fit = None

    drops = []
    for prev, cur in zip(session.history, session.history[1:]):
        drops.append((cur.step, cur.label, prev.minus2loglik - cur.minus2loglik))

    if floor_fit is None:
        rows = []
        cum = 0.0
        for step_i, label, drop in drops:
            cum += drop
            rows.append(ScreeRow(step_i, label, drop, cum))
        return ScreeData(tuple(rows), baseline, None, None, units="deviance")

    floor = floor_fit.minus2loglik
    max_explainable = baseline - floor
    rows = []
    cum = 0.0
    for step_i, label, drop in drops:
        pct = 100.0 * drop / max_explainable
        cum += pct
        rows.append(ScreeRow(step_i, label, pct, cum))
    return ScreeData(tuple(rows), baseline, floor, max_explainable, units="percent")


def export_graph(terms: Sequence[LogratioTerm], parts: Sequence[str]) -> str:
    """DOT digraph of the selection: arrows point denominator -> numerator.

    Edge order follows selection order (edge label = step). A comment
    annotates whether the graph is connected over the involved parts.
    """
    terms = list(terms)
    graph = TermGraph.from_terms(terms)
    lines = ["digraph logratio_selection {"]
    lines.append(f"  // connected: {'true' if terms and graph.is_connected() else 'false'}")
    seen: list[int] = []
    for t in terms:
        for p in (t.den, t.num):
            if p not in seen:
                seen.append(p)
    for p in seen:
        lines.append(f'  "{parts[p]}";')
    for i, t in enumerate(terms, start=1):
        lines.append(f'  "{parts[t.den]}" -> "{parts[t.num]}" [label="{i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
