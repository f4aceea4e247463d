"""Dataset loading, validation, holdout splitting and design assembly.

One ingestion format: CSV with a header row, first column sample id,
UTF-8, '.' decimal. Composition columns are everything not claimed by the
response or covariates. Counts and proportions are both fine — closure is
irrelevant to logratios.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .composition import CompositionTable, LogratioTerm, lr_matrix, replace_zeros
from .errors import DataValidationError
from .glm import Family, FitSummary, minus2loglik_at

__all__ = [
    "ZeroPolicy",
    "DatasetBundle",
    "SplitSpec",
    "load_dataset",
    "save_dataset",
    "split_holdout",
    "build_design",
    "evaluate_holdout",
]


@dataclass(frozen=True)
class ZeroPolicy:
    """How zeros in the composition are handled at load time."""

    mode: str = "replace"  # replace | strict
    fraction: float = 0.65

    def __post_init__(self):
        if self.mode not in ("replace", "strict"):
            raise DataValidationError(f"zero policy mode must be 'replace' or 'strict', got {self.mode!r}")
        if not 0.0 < self.fraction < 1.0:
            raise DataValidationError(f"zero replacement fraction must lie in (0, 1), got {self.fraction}")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "fraction": self.fraction}

    @classmethod
    def from_dict(cls, d: dict) -> "ZeroPolicy":
        return cls(mode=d.get("mode", "replace"), fraction=d.get("fraction", 0.65))


@dataclass(frozen=True)
class DatasetBundle:
    """Composition + response (+ optional covariates), all row-aligned."""

    composition: CompositionTable
    response: np.ndarray
    response_name: str
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    family: Family
    provenance: dict

    def __post_init__(self):
        response = np.asarray(self.response, dtype=np.float64)
        covariates = np.asarray(self.covariates, dtype=np.float64)
        n = self.composition.n
        if response.shape != (n,):
            raise DataValidationError(f"response has {response.shape[0]} rows, composition has {n}")
        if covariates.ndim != 2 or covariates.shape[0] != n:
            raise DataValidationError(f"covariate matrix shape {covariates.shape} does not match {n} rows")
        if covariates.shape[1] != len(self.covariate_names):
            raise DataValidationError("covariate names do not match covariate columns")
        _validate_response(response, self.family, self.response_name)
        response = response.copy()
        response.flags.writeable = False
        covariates = covariates.copy()
        covariates.flags.writeable = False
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    @property
    def n(self) -> int:
        return self.composition.n

    @property
    def j(self) -> int:
        return self.composition.j


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2.0 / 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataValidationError(f"train fraction must lie in (0, 1), got {self.train_fraction}")


def _validate_response(y: np.ndarray, family: Family, name: str) -> None:
    if not np.all(np.isfinite(y)):
        raise DataValidationError(f"response {name!r} contains non-finite values")
    if family is Family.BINOMIAL and not np.all((y == 0) | (y == 1)):
        bad = y[(y != 0) & (y != 1)][0]
        raise DataValidationError(f"response {name!r} not in {{0,1}}: found {bad!r}")
    if family is Family.POISSON and (np.any(y < 0) or np.any(y != np.floor(y))):
        raise DataValidationError(f"response {name!r} must be nonnegative integer counts")


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise DataValidationError(f"{path}: need a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2:
        raise DataValidationError(f"{path}: header must name a sample-id column plus data columns")
    return header, rows[1:]


def _parse_cell(raw: str, path: str, line: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DataValidationError(f"{path}:{line}: column {column!r}: not a number: {raw!r}") from None


def load_dataset(
    composition_path: str,
    response: str,
    covariates: Sequence[str] = (),
    family: Family = Family.BINOMIAL,
    zero_policy: ZeroPolicy | None = None,
) -> DatasetBundle:
    """Load and validate a dataset from CSV.

    ``response`` is either a column name inside the composition CSV or a
    path to a two-column CSV (sample id, value) with matching ids.
    All remaining columns are composition parts.
    """
    zero_policy = zero_policy or ZeroPolicy()
    family = Family(family)
    header, data_rows = _read_csv(composition_path)
    covariates = list(covariates)

    response_is_path = os.path.exists(response) and response not in header
    claimed = set(covariates) | ({response} if not response_is_path else set())
    missing = claimed - set(header[1:])
    if missing:
        raise DataValidationError(f"{composition_path}: columns not found: {', '.join(sorted(missing))}")
    part_names = [c for c in header[1:] if c not in claimed]
    if len(part_names) < 2:
        raise DataValidationError(f"{composition_path}: fewer than 2 composition columns remain")
    dupes = sorted({p for p in part_names if part_names.count(p) > 1})
    if dupes:
        raise DataValidationError(f"{composition_path}: duplicate part names: {', '.join(dupes)}")

    col_of = {name: i + 1 for i, name in enumerate(header[1:])}
    sample_ids, raw, cov_rows, resp_vals = [], [], [], []
    for offset, row in enumerate(data_rows):
        line = offset + 2
        if len(row) != len(header):
            raise DataValidationError(f"{composition_path}:{line}: expected {len(header)} cells, got {len(row)}")
        sample_ids.append(row[0].strip())
        vals = []
        for name in part_names:
            v = _parse_cell(row[col_of[name]], composition_path, line, name)
            if v < 0:
                raise DataValidationError(
                    f"{composition_path}:{line}: negative abundance {v!r} in column {name!r}"
                )
            vals.append(v)
        raw.append(vals)
        cov_rows.append([_parse_cell(row[col_of[c]], composition_path, line, c) for c in covariates])
        if not response_is_path:
            resp_vals.append(_parse_cell(row[col_of[response]], composition_path, line, response))

    if len(set(sample_ids)) != len(sample_ids):
        dupes = sorted({s for s in sample_ids if sample_ids.count(s) > 1})
        raise DataValidationError(f"{composition_path}: duplicate sample ids: {', '.join(dupes[:5])}")

    response_name = response
    if response_is_path:
        r_header, r_rows = _read_csv(response)
        response_name = r_header[1]
        by_id = {}
        for offset, row in enumerate(r_rows):
            line = offset + 2
            if len(row) < 2:
                raise DataValidationError(f"{response}:{line}: expected sample id and value")
            by_id[row[0].strip()] = _parse_cell(row[1], response, line, response_name)
        missing_ids = [s for s in sample_ids if s not in by_id]
        if missing_ids:
            raise DataValidationError(f"{response}: no response for sample {missing_ids[0]!r}")
        if len(by_id) != len(sample_ids):
            raise DataValidationError(
                f"{response}: {len(by_id)} response rows for {len(sample_ids)} samples"
            )
        resp_vals = [by_id[s] for s in sample_ids]

    raw = np.asarray(raw, dtype=np.float64)
    zeros = int((raw == 0).sum())
    if zero_policy.mode == "strict":
        if zeros:
            i, k = map(int, np.argwhere(raw == 0)[0])
            raise DataValidationError(
                f"{composition_path}: zero abundance at sample {sample_ids[i]!r}, part {part_names[k]!r} "
                "(zero policy is strict)"
            )
        composition = CompositionTable(tuple(part_names), raw, tuple(sample_ids))
    else:
        composition = replace_zeros(raw, zero_policy.fraction, part_names, sample_ids)

    provenance = {
        "composition_path": os.path.abspath(composition_path),
        "response": response if not response_is_path else os.path.abspath(response),
        "covariates": covariates,
        "family": family.value,
        "zero_policy": zero_policy.to_dict(),
        "zeros_replaced": zeros,
    }
    return DatasetBundle(
        composition=composition,
        response=np.asarray(resp_vals, dtype=np.float64),
        response_name=response_name,
        covariates=np.asarray(cov_rows, dtype=np.float64).reshape(len(sample_ids), len(covariates)),
        covariate_names=tuple(covariates),
        family=family,
        provenance=provenance,
    )


def save_dataset(bundle: DatasetBundle, path: str) -> None:
    """Write a bundle to one CSV that ``load_dataset`` round-trips exactly.

    Floats are written with repr so the numeric payload is bit-identical
    after reload.
    """
    comp = bundle.composition
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", *comp.parts, bundle.response_name, *bundle.covariate_names])
        for i, sid in enumerate(comp.sample_ids):
            row = [sid]
            row += [repr(float(v)) for v in comp.samples[i]]
            row.append(repr(float(bundle.response[i])))
            row += [repr(float(v)) for v in bundle.covariates[i]]
            writer.writerow(row)


def split_holdout(bundle: DatasetBundle, spec: SplitSpec) -> tuple[DatasetBundle, DatasetBundle]:
    """Random row partition into (train, holdout), reproducible by seed."""
    n = bundle.n
    if n < 3:
        raise DataValidationError(f"need at least 3 samples to split, got {n}")
    train_n = math.floor(n * spec.train_fraction)
    if train_n == 0 or train_n == n:
        raise DataValidationError(
            f"train fraction {spec.train_fraction} leaves an empty partition for n={n}"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_idx = np.sort(perm[:train_n])
    hold_idx = np.sort(perm[train_n:])

    def take(idx: np.ndarray, role: str) -> DatasetBundle:
        comp = bundle.composition
        sub = CompositionTable(
            comp.parts,
            comp.samples[idx],
            tuple(comp.sample_ids[i] for i in idx),
        )
        prov = dict(bundle.provenance)
        prov["split"] = {"role": role, "train_fraction": spec.train_fraction, "seed": spec.seed}
        return DatasetBundle(
            composition=sub,
            response=bundle.response[idx],
            response_name=bundle.response_name,
            covariates=bundle.covariates[idx],
            covariate_names=bundle.covariate_names,
            family=bundle.family,
            provenance=prov,
        )

    return take(train_idx, "train"), take(hold_idx, "holdout")


def build_design(
    bundle: DatasetBundle,
    terms: Sequence[LogratioTerm],
    covariate_indices: Sequence[int] = (),
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Design matrix: intercept, chosen covariates, then one column per term."""
    for c in covariate_indices:
        if not 0 <= c < len(bundle.covariate_names):
            raise DataValidationError(f"covariate index {c} out of range")
    cols = [np.ones(bundle.n)]
    labels = ["intercept"]
    for c in covariate_indices:
        cols.append(bundle.covariates[:, c])
        labels.append(bundle.covariate_names[c])
    lrs = lr_matrix(bundle.composition, list(terms))
    for k, t in enumerate(terms):
        cols.append(lrs[:, k])
        labels.append(t.label(bundle.composition.parts))
    return np.column_stack(cols), tuple(labels)


def _rank_auc(scores: np.ndarray, y: np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks for ties."""
    pos = int(np.sum(y == 1))
    neg = int(np.sum(y == 0))
    if pos == 0 or neg == 0:
        return float("nan")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        k = i
        while k + 1 < len(scores) and sorted_scores[k + 1] == sorted_scores[i]:
            k += 1
        ranks[order[i : k + 1]] = 0.5 * (i + k) + 1.0
        i = k + 1
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    return (rank_sum_pos - pos * (pos + 1) / 2.0) / (pos * neg)


def evaluate_holdout(
    fit: FitSummary,
    terms: Sequence[LogratioTerm],
    holdout: DatasetBundle,
    covariate_indices: Sequence[int] = (),
) -> dict:
    """Score a fitted model on held-out rows under the trained coefficients."""
    X, labels = build_design(holdout, terms, covariate_indices)
    if labels != fit.term_labels:
        raise DataValidationError(
            f"holdout design {labels} does not match the fitted model {fit.term_labels}"
        )
    m2ll = minus2loglik_at(X, holdout.response, fit.coefficients, fit.family, fit.dispersion)
    metrics = {
        "holdout_deviance": float(m2ll),
        "n_holdout": holdout.n,
        "family": fit.family.value,
    }
    if fit.family is Family.BINOMIAL:
        eta = X @ fit.coefficients
        p = 1.0 / (1.0 + np.exp(-eta))
        predicted = (p >= 0.5).astype(np.float64)
        metrics["accuracy"] = float(np.mean(predicted == holdout.response))
        metrics["auc"] = _rank_auc(p, holdout.response)
    return metrics
