"""Two-sample GWAS summary-statistics data model and TSV ingestion.

Each instrument (SNP) carries a marginal effect estimate and standard error
for the exposure trait and for the outcome trait, obtained from two
independent GWAS. Datasets are immutable after construction so that seeded
downstream pipelines are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TSV_HEADER = ("snp", "beta_exposure", "se_exposure", "beta_outcome", "se_outcome")


class SummaryDataError(ValueError):
    """Raised when summary data violate the ingestion contract."""


@dataclass(frozen=True)
class GwasRecord:
    """Per-SNP summary statistics from the exposure and outcome GWAS."""

    snp_id: str
    gamma_d_hat: float
    sigma_d: float
    gamma_y_hat: float
    sigma_y: float

    def __post_init__(self):
        for name in ("gamma_d_hat", "sigma_d", "gamma_y_hat", "sigma_y"):
            if not math.isfinite(getattr(self, name)):
                raise SummaryDataError(f"non-finite value for {name} in record {self.snp_id!r}")
        if self.sigma_d <= 0 or self.sigma_y <= 0:
            raise SummaryDataError(f"nonpositive standard error in record {self.snp_id!r}")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of ingesting a summary TSV: what survived and why rows were dropped."""

    n_records: int
    n_rejected: int
    rejection_reasons: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if self.n_rejected != len(self.rejection_reasons):
            raise ValueError("n_rejected must equal the number of rejection reasons")


class SummaryDataset:
    """Immutable ordered collection of GwasRecord with cached column arrays.

    Iteration order is stable and equals construction (file) order. The
    column arrays are read-only numpy views used by the numeric routines.
    """

    __slots__ = ("records", "gamma_d", "sigma_d", "gamma_y", "sigma_y")

    def __init__(self, records):
        records = tuple(records)
        if len(records) == 0:
            raise SummaryDataError("dataset must contain at least one record")
        seen = set()
        for rec in records:
            if rec.snp_id in seen:
                raise SummaryDataError(f"duplicate identifier {rec.snp_id!r}")
            seen.add(rec.snp_id)
        object.__setattr__(self, "records", records)
        for name in ("gamma_d", "sigma_d", "gamma_y", "sigma_y"):
            attr = {"gamma_d": "gamma_d_hat", "gamma_y": "gamma_y_hat"}.get(name, name)
            arr = np.array([getattr(r, attr) for r in records], dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __setattr__(self, name, value):
        raise AttributeError("SummaryDataset is immutable")

    @property
    def p(self) -> int:
        return len(self.records)

    @property
    def snp_ids(self) -> tuple[str, ...]:
        return tuple(r.snp_id for r in self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx) -> GwasRecord:
        return self.records[idx]

    def subset(self, indices) -> "SummaryDataset":
        """New dataset keeping ``indices`` (in the given order)."""
        return SummaryDataset(self.records[i] for i in indices)

    def __eq__(self, other):
        return isinstance(other, SummaryDataset) and self.records == other.records

    def __hash__(self):
        return hash(self.records)


def _parse_row(line_no: int, parts: list[str]):
    """Parse one data row; returns (record, None) or (None, (row, reason))."""
    if len(parts) != 5:
        return None, (line_no, "wrong field count")
    snp_id = parts[0]
    values = []
    for token in parts[1:]:
        try:
            values.append(float(token))
        except ValueError:
            return None, (line_no, f"non-numeric field {token!r}")
    gd, sd, gy, sy = values
    if not all(math.isfinite(v) for v in values):
        return None, (line_no, "non-finite value")
    if sd <= 0 or sy <= 0:
        return None, (line_no, "nonpositive standard error")
    return GwasRecord(snp_id, gd, sd, gy, sy), None


def load_summary_tsv(path) -> tuple[SummaryDataset, ValidationReport]:
    """Read a tab-separated summary file, rejecting (and logging) bad rows.

    The header must be exactly ``snp beta_exposure se_exposure beta_outcome
    se_outcome`` (tab-separated). Rows violating the per-record invariants
    are dropped with a reason in the report; duplicates among surviving rows
    and an all-rejected file are hard errors.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"summary file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SummaryDataError("empty file: missing header")
    header = tuple(lines[0].split("\t"))
    if header != TSV_HEADER:
        raise SummaryDataError(
            f"malformed header: expected {list(TSV_HEADER)}, got {list(header)}"
        )
    records: list[GwasRecord] = []
    rejections: list[tuple[int, str]] = []
    for row_no, line in enumerate(lines[1:], start=1):
        if line == "":
            continue
        rec, rejection = _parse_row(row_no, line.split("\t"))
        if rec is None:
            rejections.append(rejection)
        else:
            records.append(rec)
    if not records:
        raise SummaryDataError("zero surviving rows after validation")
    seen = set()
    for rec in records:
        if rec.snp_id in seen:
            raise SummaryDataError(f"duplicate identifier {rec.snp_id!r}")
        seen.add(rec.snp_id)
    dataset = SummaryDataset(records)
    report = ValidationReport(dataset.p, len(rejections), tuple(rejections))
    return dataset, report


def write_summary_tsv(ds: SummaryDataset, path) -> None:
    """Write a dataset in the input TSV format.

    Floats are written in shortest round-trip decimal form (``repr``), so
    load(write(ds)) reproduces every numeric value bit-exactly.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(TSV_HEADER) + "\n")
        for r in ds:
            fh.write(
                f"{r.snp_id}\t{r.gamma_d_hat!r}\t{r.sigma_d!r}\t{r.gamma_y_hat!r}\t{r.sigma_y!r}\n"
            )


def screen_weak_ivs(ds: SummaryDataset, threshold: float) -> tuple[SummaryDataset, tuple[int, ...]]:
    """Keep instruments with exposure z-ratio ``|gamma_d_hat| / sigma_d >= threshold``.

    Returns the screened dataset and the removed indexes (input ordering).
    Raises if no instrument survives.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    strength = np.abs(ds.gamma_d) / ds.sigma_d
    keep = strength >= threshold
    removed = tuple(int(i) for i in np.flatnonzero(~keep))
    if not keep.any():
        raise SummaryDataError("no instruments survive screening")
    if len(removed) == 0:
        return ds, removed
    kept = SummaryDataset(ds.records[i] for i in np.flatnonzero(keep))
    return kept, removed


def ratio_estimates(ds: SummaryDataset) -> np.ndarray:
    """Per-instrument outcome/exposure effect ratios.

    Entries with a zero exposure effect are flagged non-finite (inf or nan)
    instead of raising.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return ds.gamma_y / ds.gamma_d
