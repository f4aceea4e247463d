"""Shared builders for synthetic compositional datasets."""

from __future__ import annotations

import csv

import numpy as np

from lrselect.composition import CompositionTable
from lrselect.glm import Family
from lrselect.ingest import DatasetBundle


def make_table(x: np.ndarray, parts=None, sample_ids=None) -> CompositionTable:
    n, j = np.asarray(x).shape
    parts = tuple(parts) if parts else tuple(f"p{k}" for k in range(j))
    sample_ids = tuple(sample_ids) if sample_ids else tuple(f"s{i}" for i in range(n))
    return CompositionTable(parts, x, sample_ids)


def make_bundle(
    x: np.ndarray,
    y: np.ndarray,
    family: Family,
    parts=None,
    covariates: np.ndarray | None = None,
    covariate_names=(),
    provenance=None,
) -> DatasetBundle:
    table = make_table(x, parts)
    n = table.n
    cov = covariates if covariates is not None else np.empty((n, 0))
    return DatasetBundle(
        composition=table,
        response=np.asarray(y, dtype=float),
        response_name="y",
        covariates=cov,
        covariate_names=tuple(covariate_names),
        family=family,
        provenance=provenance or {},
    )


def planted_dataset(rng, n, j, signal, family=Family.BINOMIAL, intercept=0.2, noise=1.0):
    """Composition with y generated from given logratio effects.

    ``signal`` maps (num, den) part pairs to coefficients on log(x_num/x_den).
    """
    logx = rng.normal(size=(n, j))
    eta = np.full(n, float(intercept))
    for (num, den), beta in signal.items():
        eta = eta + beta * (logx[:, num] - logx[:, den])
    if family is Family.BINOMIAL:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    elif family is Family.GAUSSIAN:
        y = eta + rng.normal(0.0, noise, n)
    else:
        y = rng.poisson(np.exp(np.clip(eta, -20, 20))).astype(float)
    return np.exp(logx), y


def write_dataset_csv(path, x, columns: dict, parts=None) -> None:
    """CSV with sample ids, composition parts, then named extra columns."""
    n, j = np.asarray(x).shape
    parts = list(parts) if parts else [f"p{k}" for k in range(j)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", *parts, *columns.keys()])
        for i in range(n):
            row = [f"s{i}"]
            row += [repr(float(v)) for v in x[i]]
            row += [repr(float(vals[i])) for vals in columns.values()]
            w.writerow(row)
