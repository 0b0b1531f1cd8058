"""Contingency-table tests: Pearson chi-square, exact tests, screening.

The chi-square upper tail is computed through the regularized upper
incomplete gamma function evaluated in log space (series below the
a+1 crossover, Lentz continued fraction above it), so that tails far
beyond double underflow of the naive exp() formulation - down to
~1e-230 - come out with at least four correct significant digits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ContingencyTable, Dataset, InputError, cross_tab

_EPS = 1e-16
_MAX_ITER = 10_000
_FPMIN = 1e-300

# Relative slack when comparing hypergeometric probabilities for the
# two-sided "at most as probable" rule; absorbs float rounding so that
# genuinely tied tables land on the inclusive side.
FISHER_TIE_RTOL = 1e-7


class DegenerateTableError(InputError):
    """Table has an all-zero margin (or is otherwise untestable)."""


def _log_lower_series(a: float, x: float) -> float:
    """log P(a, x) via the regularized lower series; requires x < a + 1."""
    term = 1.0 / a
    total = term
    n = 0
    while n < _MAX_ITER:
        n += 1
        term *= x / (a + n)
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return a * math.log(x) - x - math.lgamma(a) + math.log(total)


def _log_upper_cf(a: float, x: float) -> float:
    """log Q(a, x) via Lentz's continued fraction; requires x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return a * math.log(x) - x - math.lgamma(a) + math.log(h)


def log_chi_square_sf(x: float, df: int) -> float:
    """Natural log of the chi-square upper-tail probability."""
    if df < 1 or df != int(df):
        raise InputError(f"df must be a positive integer, got {df}")
    if x < 0 or not math.isfinite(x):
        raise InputError(f"statistic must be finite and non-negative, got {x}")
    a = df / 2.0
    t = x / 2.0
    if t == 0.0:  # includes subnormal x halving to zero
        return 0.0
    if t < a + 1.0:
        log_p = _log_lower_series(a, t)
        p = math.exp(log_p)
        if p >= 1.0:
            return -math.inf
        return math.log1p(-p)
    return _log_upper_cf(a, t)


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability P[X >= x] for X ~ chi-square(df)."""
    return min(1.0, math.exp(log_chi_square_sf(x, df)))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    approximation_valid: bool


def pearson_chi_square(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of independence on an r x c table.

    The approximation_valid flag applies the small-expected-count rule
    of thumb: the chi-square approximation is flagged unreliable when
    any expected count falls below 5, or below 10 when df is 1.
    """
    counts = np.asarray(table.counts, dtype=np.float64)
    r, c = counts.shape
    if r < 2 or c < 2:
        raise DegenerateTableError(
            f"table must be at least 2x2, got {r}x{c}"
        )
    n = counts.sum()
    if n <= 0:
        raise DegenerateTableError("table is empty (grand total 0)")
    row_tot = counts.sum(axis=1)
    col_tot = counts.sum(axis=0)
    if (row_tot == 0).any() or (col_tot == 0).any():
        raise DegenerateTableError(
            f"table {table.row_attr!r} x {table.col_attr!r} has an all-zero "
            "row or column"
        )
    expected = np.outer(row_tot, col_tot) / n
    statistic = float(((counts - expected) ** 2 / expected).sum())
    df = (r - 1) * (c - 1)
    threshold = 10.0 if df == 1 else 5.0
    return ChiSquareResult(
        statistic=statistic,
        df=df,
        p_value=chi_square_sf(statistic, df),
        approximation_valid=bool(expected.min() >= threshold),
    )


def _as_int_matrix(table) -> np.ndarray:
    if isinstance(table, ContingencyTable):
        return np.asarray(table.counts, dtype=np.int64)
    arr = np.asarray(table, dtype=np.int64)
    if arr.ndim != 2:
        raise InputError("expected a 2-D count matrix")
    if arr.size and arr.min() < 0:
        raise InputError("counts must be non-negative")
    return arr


def _log_hypergeom_2x2(a: int, r1: int, c1: int, n: int) -> float:
    # P(a) = C(r1, a) C(n - r1, c1 - a) / C(n, c1)
    return (
        math.lgamma(r1 + 1)
        - math.lgamma(a + 1)
        - math.lgamma(r1 - a + 1)
        + math.lgamma(n - r1 + 1)
        - math.lgamma(c1 - a + 1)
        - math.lgamma(n - r1 - c1 + a + 1)
        - math.lgamma(n + 1)
        + math.lgamma(c1 + 1)
        + math.lgamma(n - c1 + 1)
    )


def fisher_exact(table) -> float:
    """Two-sided Fisher exact test for a 2x2 table.

    Two-sided p is the sum of hypergeometric probabilities (margins
    fixed) over all tables at most as probable as the observed one,
    with FISHER_TIE_RTOL relative slack on the comparison.  A table
    with any zero margin admits only one arrangement, so p is 1.
    """
    counts = _as_int_matrix(table)
    if counts.shape != (2, 2):
        raise InputError(f"fisher_exact requires a 2x2 table, got {counts.shape}")
    r1 = int(counts[0].sum())
    c1 = int(counts[:, 0].sum())
    n = int(counts.sum())
    if r1 == 0 or c1 == 0 or r1 == n or c1 == n or n == 0:
        return 1.0
    a_obs = int(counts[0, 0])
    lo = max(0, r1 + c1 - n)
    hi = min(r1, c1)
    log_obs = _log_hypergeom_2x2(a_obs, r1, c1, n)
    cutoff = log_obs + math.log1p(FISHER_TIE_RTOL)
    p = 0.0
    for a in range(lo, hi + 1):
        lp = _log_hypergeom_2x2(a, r1, c1, n)
        if lp <= cutoff:
            p += math.exp(lp)
    return min(1.0, p)


def fisher_exact_rxc(table, max_total: int = 40) -> float:
    """Exact two-sided test for an r x c table by complete enumeration.

    Enumerates every table with the observed margins, summing the
    multivariate hypergeometric probabilities of those at most as
    probable as the observed table.  Cost grows combinatorially, so
    the grand total is capped (default 40); larger tables should use
    pearson_chi_square instead.
    """
    counts = _as_int_matrix(table)
    n = int(counts.sum())
    if n > max_total:
        raise InputError(
            f"grand total {n} exceeds max_total={max_total} for exact "
            "enumeration; use pearson_chi_square for large tables"
        )
    row_tot = counts.sum(axis=1).tolist()
    col_tot = counts.sum(axis=0).tolist()
    r, c = counts.shape

    # log P(T) = const - sum_ij lgamma(t_ij + 1)
    const = (
        sum(math.lgamma(t + 1) for t in row_tot)
        + sum(math.lgamma(t + 1) for t in col_tot)
        - math.lgamma(n + 1)
    )
    log_obs = const - sum(
        math.lgamma(int(v) + 1) for v in counts.ravel()
    )
    cutoff = log_obs + math.log1p(FISHER_TIE_RTOL)

    total_p = 0.0

    def fill_row(i: int, remaining_cols: list[int], cell_lg: float) -> None:
        nonlocal total_p
        if i == r - 1:
            # last row forced by the column margins
            if all(v <= row_tot[i] for v in remaining_cols):
                lp = const - cell_lg - sum(
                    math.lgamma(v + 1) for v in remaining_cols
                )
                if lp <= cutoff:
                    total_p += math.exp(lp)
            return

        target = row_tot[i]
        row = [0] * c

        def fill_cell(j: int, left: int, lg: float) -> None:
            if j == c - 1:
                if left <= remaining_cols[j]:
                    row[j] = left
                    for k in range(c):
                        remaining_cols[k] -= row[k]
                    fill_row(i + 1, remaining_cols, lg + math.lgamma(left + 1))
                    for k in range(c):
                        remaining_cols[k] += row[k]
                return
            for v in range(min(left, remaining_cols[j]) + 1):
                row[j] = v
                fill_cell(j + 1, left - v, lg + math.lgamma(v + 1))
            row[j] = 0

        fill_cell(0, target, cell_lg)

    fill_row(0, col_tot, 0.0)
    return min(1.0, total_p)


@dataclass(frozen=True)
class ScreeningRow:
    name: str
    statistic: float | None
    df: int | None
    p_value: float | None
    significant: bool
    approximation_valid: bool | None
    error: str | None = None


@dataclass(frozen=True)
class ScreeningReport:
    rows: tuple[ScreeningRow, ...]
    tolerance: float

    @property
    def significant_attributes(self) -> list[str]:
        return [r.name for r in self.rows if r.significant]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["attribute", "chi_square", "df", "p_value", "significant"])
            for r in self.rows:
                if r.error is not None:
                    writer.writerow([r.name, "", "", "", "False"])
                else:
                    writer.writerow(
                        [
                            r.name,
                            f"{r.statistic:.6g}",
                            r.df,
                            f"{r.p_value:.10g}",
                            str(r.significant),
                        ]
                    )


def screen_univariate(data: Dataset, tolerance: float = 0.20) -> ScreeningReport:
    """Chi-square test of each predictor against the class attribute.

    An attribute is significant when p < tolerance.  Degenerate-table
    errors (an unobserved level gives an all-zero margin) are recorded
    on that attribute's row instead of aborting the screen.
    """
    if len(data) == 0:
        raise InputError("cannot screen an empty dataset")
    if not 0 < tolerance <= 1:
        raise InputError(f"tolerance must be in (0, 1], got {tolerance}")
    class_name = data.schema.class_attribute.name
    rows = []
    for attr in data.schema.predictors:
        try:
            result = pearson_chi_square(cross_tab(data, attr.name, class_name))
        except DegenerateTableError as exc:
            rows.append(
                ScreeningRow(attr.name, None, None, None, False, None, str(exc))
            )
            continue
        rows.append(
            ScreeningRow(
                attr.name,
                result.statistic,
                result.df,
                result.p_value,
                result.p_value < tolerance,
                result.approximation_valid,
            )
        )
    return ScreeningReport(tuple(rows), tolerance)
