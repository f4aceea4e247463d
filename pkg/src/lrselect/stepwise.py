"""Forward stepwise selection of pairwise logratios, three ways.

Method 1 (unrestricted): any pair may enter as long as the selected terms
stay acyclic as an undirected graph on the parts — a cycle means the new
logratio is a linear combination of those already in.
Method 2 (non-overlapping): a part may appear in at most one term, so the
log-contrast vectors stay orthogonal and at most floor(J/2) terms fit.
Method 3 (ALR subcomposition): the first term fixes a common denominator;
later terms bring one new numerator part each, so K selected terms span a
(K+1)-part subcomposition.

Every step fits one GLM per eligible candidate and ranks by -2logLik; the
expert may take the top entry or any other. Stopping adds a per-parameter
penalty (AIC / BIC / Bonferroni over the J(J-1)/2 simultaneous tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .composition import LogratioTerm, UnionFind, lr_values
from .errors import (
    DataValidationError,
    EligibilityError,
    RankDeficiencyError,
    SessionStoppedError,
)
from .glm import Family, FitSummary, StoppingCriterion, fit_glm, penalized_objective, penalty_per_parameter
from .ingest import DatasetBundle, build_design

__all__ = [
    "SelectionMethod",
    "SelectionSession",
    "StepRecord",
    "CandidateEntry",
    "CandidateRanking",
    "init_session",
    "eligible_terms",
    "rank_candidates",
    "step",
    "run",
    "undo",
]

TIE_TOL = 1e-8


class SelectionMethod(IntEnum):
    UNRESTRICTED = 1
    NONOVERLAPPING = 2
    ALR_SUBCOMPOSITION = 3


@dataclass(frozen=True)
class StepRecord:
    step: int
    term: LogratioTerm | None
    label: str
    minus2loglik: float
    objective: float
    choice_rank: int = 0  # 1-based rank of the chosen candidate; 0 for step 0
    forced_choice: bool = False  # expert pushed past the stopping guard


@dataclass(frozen=True)
class CandidateEntry:
    term: LogratioTerm
    label: str
    minus2loglik: float
    delta_deviance: float
    objective: float
    would_stop: bool


@dataclass(frozen=True)
class CandidateRanking:
    entries: tuple[CandidateEntry, ...]
    exhausted: bool
    diagnostics: tuple[str, ...] = ()


@dataclass
class SelectionSession:
    """Mutable stepwise state. Mutations must be serialized by the caller."""

    bundle: DatasetBundle
    method: SelectionMethod
    criterion: StoppingCriterion
    forced_terms: tuple[LogratioTerm, ...]
    forced_covariates: tuple[int, ...]
    selected: list[LogratioTerm]
    history: list[StepRecord]
    current_fit: FitSummary
    alr_denominator: int | None = None
    stopped: bool = False
    rng_seed: int = 0
    diagnostics: list[str] = field(default_factory=list)

    @property
    def family(self) -> Family:
        return self.bundle.family

    @property
    def parts(self) -> tuple[str, ...]:
        return self.bundle.composition.parts

    @property
    def n_tests(self) -> int:
        """Bonferroni divisor: the J(J-1)/2 candidate pairs a step can scan.

        Dividing by the logratio-space dimension J-1 instead demonstrably
        under-corrects (the step-1 null false-entry rate lands well above
        alpha), so the divisor counts the tests actually performed.
        """
        j = self.bundle.j
        return j * (j - 1) // 2

    @property
    def objective(self) -> float:
        return self.history[-1].objective

    @property
    def penalty(self) -> float:
        return penalty_per_parameter(self.criterion, self.bundle.n, self.n_tests)

    def all_terms(self) -> list[LogratioTerm]:
        return list(self.forced_terms) + list(self.selected)

    def label_of(self, term: LogratioTerm) -> str:
        return term.label(self.parts)


def _validate_forced(method: SelectionMethod, forced: Sequence[LogratioTerm], j: int) -> int | None:
    """Check joint eligibility; returns the ALR denominator pinned by method-3 forcing."""
    for t in forced:
        if t.num >= j or t.den >= j:
            raise DataValidationError(f"forced term ({t.num},{t.den}) out of range for {j} parts")
    if method is SelectionMethod.UNRESTRICTED:
        uf = UnionFind(j)
        for t in forced:
            if not uf.union(t.num, t.den):
                raise EligibilityError(f"forced terms close a cycle at term ({t.num},{t.den})")
    elif method is SelectionMethod.NONOVERLAPPING:
        seen: dict[int, LogratioTerm] = {}
        for t in forced:
            for p in (t.num, t.den):
                if p in seen:
                    raise EligibilityError(
                        f"forced terms ({seen[p].num},{seen[p].den}) and ({t.num},{t.den}) overlap in part {p}"
                    )
            seen[t.num] = t
            seen[t.den] = t
    else:
        dens = {t.den for t in forced}
        if len(dens) > 1:
            raise EligibilityError(
                f"method 3 forced terms must share one denominator, got parts {sorted(dens)}"
            )
        if forced:
            den = forced[0].den
            if any(t.num == den for t in forced):
                raise EligibilityError("method 3 forced terms reuse the denominator as a numerator")
            nums = [t.num for t in forced]
            if len(set(nums)) != len(nums):
                raise EligibilityError("method 3 forced terms repeat a numerator part")
            return den
    return None


def _refit(session: SelectionSession) -> FitSummary:
    X, labels = build_design(session.bundle, session.all_terms(), session.forced_covariates)
    return fit_glm(X, session.bundle.response, session.family, labels)


def init_session(
    bundle: DatasetBundle,
    method: SelectionMethod | int,
    criterion: StoppingCriterion,
    forced_terms: Sequence[LogratioTerm] = (),
    forced_covariates: Sequence[int] = (),
    seed: int = 0,
) -> SelectionSession:
    """Start a session and fit the step-0 model (intercept + forced columns)."""
    method = SelectionMethod(method)
    forced_terms = tuple(forced_terms)
    forced_covariates = tuple(forced_covariates)
    for c in forced_covariates:
        if not 0 <= c < len(bundle.covariate_names):
            raise DataValidationError(
                f"covariate index {c} out of range for {len(bundle.covariate_names)} covariates"
            )
    alr_den = _validate_forced(method, forced_terms, bundle.j)
    session = SelectionSession(
        bundle=bundle,
        method=method,
        criterion=criterion,
        forced_terms=forced_terms,
        forced_covariates=forced_covariates,
        selected=[],
        history=[],
        current_fit=None,  # type: ignore[arg-type]
        alr_denominator=alr_den,
        rng_seed=seed,
    )
    fit = _refit(session)
    session.current_fit = fit
    session.history.append(
        StepRecord(0, None, "", fit.minus2loglik, penalized_objective(fit, criterion, session.n_tests))
    )
    return session


def _used_parts(session: SelectionSession) -> set[int]:
    return {p for t in session.all_terms() for p in (t.num, t.den)}


def eligible_terms(session: SelectionSession) -> list[LogratioTerm]:
    """Candidate terms under the method's rule, in canonical part order.

    Pairs are reported once: (lower part, higher part), except after the
    method-3 denominator is fixed, where terms read (new part, denominator).
    An empty list signals exhaustion.
    """
    j = session.bundle.j
    method = session.method
    if method is SelectionMethod.UNRESTRICTED:
        uf = UnionFind(j)
        for t in session.all_terms():
            uf.union(t.num, t.den)
        return [
            LogratioTerm(a, b)
            for a in range(j)
            for b in range(a + 1, j)
            if uf.find(a) != uf.find(b)
        ]
    if method is SelectionMethod.NONOVERLAPPING:
        used = _used_parts(session)
        free = [p for p in range(j) if p not in used]
        return [LogratioTerm(a, b) for i, a in enumerate(free) for b in free[i + 1 :]]
    # ALR subcomposition
    if session.alr_denominator is None:
        return [LogratioTerm(a, b) for a in range(j) for b in range(a + 1, j)]
    den = session.alr_denominator
    used = _used_parts(session)
    return [LogratioTerm(p, den) for p in range(j) if p != den and p not in used]


def _explain_ineligible(session: SelectionSession, term: LogratioTerm) -> str:
    parts = session.parts
    if term.num >= len(parts) or term.den >= len(parts):
        return f"term ({term.num}, {term.den}) is out of range for {len(parts)} parts"
    label = session.label_of(term)
    if session.method is SelectionMethod.UNRESTRICTED:
        return (
            f"{label} closes a cycle: both parts already connect through the selected terms, "
            "so the logratio is redundant"
        )
    if session.method is SelectionMethod.NONOVERLAPPING:
        used = _used_parts(session)
        shared = sorted(p for p in (term.num, term.den) if p in used)
        names = ", ".join(parts[p] for p in shared)
        return f"{label} overlaps the selected terms in part(s) {names}"
    if session.alr_denominator is not None and term.den != session.alr_denominator:
        return f"{label} does not use the fixed denominator {parts[session.alr_denominator]}"
    return f"{label} reuses a part already in the subcomposition"


def rank_candidates(session: SelectionSession, top_k: int | None = None) -> CandidateRanking:
    """Fit every eligible candidate and rank ascending by -2logLik.

    Ties break on (lower part, higher part). Candidates whose fit fails to
    converge are excluded and listed in the diagnostics.
    """
    if session.stopped:
        raise SessionStoppedError("session is stopped; undo a step to continue")
    eligible = eligible_terms(session)
    if not eligible:
        return CandidateRanking(entries=(), exhausted=True)

    X0, labels0 = build_design(session.bundle, session.all_terms(), session.forced_covariates)
    y = session.bundle.response
    penalty = session.penalty
    m_new = X0.shape[1] + 1
    current_objective = session.objective
    fixed_den = session.method is SelectionMethod.ALR_SUBCOMPOSITION and session.alr_denominator is not None

    entries: list[CandidateEntry] = []
    diagnostics: list[str] = []
    for term in eligible:
        label = session.label_of(term)
        X = np.column_stack([X0, lr_values(session.bundle.composition, term)])
        try:
            fit = fit_glm(X, y, session.family, labels0 + (label,))
        except RankDeficiencyError as exc:
            diagnostics.append(f"{label}: {exc}")
            continue
        if not fit.converged:
            diagnostics.append(f"{label}: {fit.warning or 'fit did not converge'}")
            continue
        oriented = term
        if not fixed_den and fit.coefficients[-1] < 0.0:
            oriented = term.flipped()  # report the ratio with a positive coefficient
        objective = fit.minus2loglik + penalty * m_new
        entries.append(
            CandidateEntry(
                term=oriented,
                label=session.label_of(oriented),
                minus2loglik=fit.minus2loglik,
                delta_deviance=session.current_fit.minus2loglik - fit.minus2loglik,
                objective=objective,
                would_stop=objective >= current_objective,
            )
        )
    entries.sort(key=lambda e: (e.minus2loglik, e.term.unordered()))
    if top_k is not None:
        entries = entries[:top_k]
    return CandidateRanking(entries=tuple(entries), exhausted=not entries, diagnostics=tuple(diagnostics))


def _commit_alr_denominator(session: SelectionSession) -> None:
    """Fix the method-3 denominator after step 1.

    Any spanning set over the same parts fits identically, so the step-1
    fit cannot choose between the two orientations. Score the best step-2
    model under each part as denominator and keep the winner; ties go to
    the lower part index.
    """
    first = session.selected[0]
    a, b = first.num, first.den
    others = [p for p in range(session.bundle.j) if p not in (a, b)]

    def best_step2(den: int) -> float:
        other = b if den == a else a
        base_terms = list(session.forced_terms) + [LogratioTerm(other, den)]
        X0, labels0 = build_design(session.bundle, base_terms, session.forced_covariates)
        best = np.inf
        for p in others:
            term = LogratioTerm(p, den)
            X = np.column_stack([X0, lr_values(session.bundle.composition, term)])
            try:
                fit = fit_glm(X, session.bundle.response, session.family, labels0 + (session.label_of(term),))
            except RankDeficiencyError:
                continue
            if fit.converged and fit.minus2loglik < best:
                best = fit.minus2loglik
        return best

    if not others:
        den = min(a, b)
    else:
        score_a, score_b = best_step2(a), best_step2(b)
        if abs(score_a - score_b) <= TIE_TOL or (np.isinf(score_a) and np.isinf(score_b)):
            den = min(a, b)
        else:
            den = a if score_a < score_b else b
    session.alr_denominator = den
    num = b if den == a else a
    session.selected[0] = LogratioTerm(num, den)


def step(
    session: SelectionSession,
    chosen: LogratioTerm | None = None,
    force: bool = False,
) -> SelectionSession:
    """Apply one selection step.

    Without ``chosen`` the top-ranked candidate is taken; if its penalized
    objective does not improve on the current one the session stops instead
    (unless ``force``). An expert-chosen term must be eligible.
    """
    if session.stopped:
        raise SessionStoppedError("session is stopped; undo a step to continue")
    ranking = rank_candidates(session)
    session.diagnostics.extend(ranking.diagnostics)
    if ranking.exhausted:
        session.stopped = True
        return session

    if chosen is None:
        entry, rank = ranking.entries[0], 1
    else:
        wanted = chosen.unordered()
        found = [(i, e) for i, e in enumerate(ranking.entries) if e.term.unordered() == wanted]
        if not found:
            if any(t.unordered() == wanted for t in eligible_terms(session)):
                raise EligibilityError(
                    f"{session.label_of(chosen)} was excluded from this step: its fit did not converge"
                )
            raise EligibilityError(_explain_ineligible(session, chosen))
        idx, entry = found[0]
        rank = idx + 1

    if entry.objective >= session.objective:
        if not force:
            session.stopped = True
            return session
        overrode_stop = True
    else:
        overrode_stop = False

    term = entry.term
    if (
        chosen is not None
        and session.method is SelectionMethod.ALR_SUBCOMPOSITION
        and session.alr_denominator is None
        and not session.forced_terms
    ):
        term = chosen  # the expert's orientation names the denominator
    session.selected.append(term)
    if (
        session.method is SelectionMethod.ALR_SUBCOMPOSITION
        and session.alr_denominator is None
    ):
        if chosen is not None:
            session.alr_denominator = term.den
        else:
            _commit_alr_denominator(session)
    fit = _refit(session)
    session.current_fit = fit
    session.history.append(
        StepRecord(
            step=len(session.selected),
            term=session.selected[-1],
            label=session.label_of(session.selected[-1]),
            minus2loglik=fit.minus2loglik,
            objective=penalized_objective(fit, session.criterion, session.n_tests),
            choice_rank=rank,
            forced_choice=overrode_stop,
        )
    )
    return session


def run(session: SelectionSession) -> SelectionSession:
    """Automatic steps until the stopping rule fires or candidates run out."""
    while not session.stopped:
        if (
            session.criterion.kind == "fixed_steps"
            and len(session.selected) >= (session.criterion.max_steps or 0)
        ):
            session.stopped = True
            break
        step(session)
    return session


def undo(session: SelectionSession) -> SelectionSession:
    """Remove the last selected term; forced terms are not removable."""
    if not session.selected:
        session.diagnostics.append("undo: nothing to undo")
        return session
    session.selected.pop()
    session.history.pop()
    session.stopped = False
    if (
        session.method is SelectionMethod.ALR_SUBCOMPOSITION
        and not session.selected
        and not session.forced_terms
    ):
        session.alr_denominator = None
    session.current_fit = _refit(session)
    return session
