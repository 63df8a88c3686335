"""Embedded reference tables and the comparison driver.

The CSV files under data/golden/ are verbatim transcriptions of the
published tables of sequence values and ratios.  Four cells of the source
tables are demonstrably mistyped (each is contradicted by other cells of
the same publication); they are listed in errata.csv together with the
corrected text and the evidence, and the comparison uses the corrected
value while reporting the override.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .errors import ConfigurationError
from .monomials import MonomialTable
from .render import matches_golden, parse_golden, plain_sig

TABLE_COLUMNS = {
    "sg3": ("alpha", "beta", "gamma"),
    "hg": ("alpha", "beta", "gamma"),
    "sg4": ("alpha", "beta"),
    "ratios": ("sg3_alpha", "sg3_beta", "hg_alpha", "hg_beta", "sg4_beta"),
}


def _read_csv(name: str) -> list[dict[str, str]]:
    path = resources.files("gasketcalc").joinpath(f"data/golden/{name}.csv")
    with path.open() as fh:
        return list(csv.DictReader(fh))


@lru_cache(maxsize=None)
def errata() -> dict[tuple[str, int, str], dict[str, str]]:
    return {(row["table"], int(row["j"]), row["column"]): row
            for row in _read_csv("errata")}


@lru_cache(maxsize=None)
def golden_table(name: str) -> dict[int, dict[str, str]]:
    """Reference cells keyed by row j, with errata corrections applied."""
    if name not in TABLE_COLUMNS:
        raise ConfigurationError(f"no golden table {name!r}")
    rows = {}
    for row in _read_csv(f"table_{name}"):
        j = int(row["j"])
        cells = {}
        for col in TABLE_COLUMNS[name]:
            fix = errata().get((name, j, col))
            cells[col] = fix["corrected"] if fix else row[col]
        rows[j] = cells
    return rows


@dataclass(frozen=True)
class CellCheck:
    table: str
    j: int
    column: str
    golden: str
    computed: Fraction
    ok: bool
    erratum: str | None


def check_sequence_table(table: MonomialTable) -> list[CellCheck]:
    """Compare computed sequences against the reference table, cell by cell."""
    name = table.fractal.name
    results = []
    for j, cells in golden_table(name).items():
        for col, text in cells.items():
            value = table.sequence(col)[j]
            fix = errata().get((name, j, col))
            results.append(CellCheck(
                name, j, col, text, value,
                matches_golden(value, text),
                fix["reason"] if fix else None))
    return results


def check_ratio_table(tables: dict[str, MonomialTable]) -> list[CellCheck]:
    """Compare the five ratio columns against the reference ratio table."""
    sources = {
        "sg3_alpha": tables["sg3"].alpha,
        "sg3_beta": tables["sg3"].beta,
        "hg_alpha": tables["hg"].alpha,
        "hg_beta": tables["hg"].beta,
        "sg4_beta": tables["sg4"].beta,
    }
    results = []
    for j, cells in golden_table("ratios").items():
        if j == 0:
            continue
        for col, text in cells.items():
            seq = sources[col]
            ratio = seq[j - 1] / seq[j]
            fix = errata().get(("ratios", j, col))
            results.append(CellCheck(
                "ratios", j, col, text, ratio,
                matches_golden(ratio, text),
                fix["reason"] if fix else None))
    return results


def final_ratio_strings(tables: dict[str, MonomialTable]) -> dict[str, str]:
    """The j = 19 ratio cells, rendered exactly as the reference prints them."""
    out = {}
    for col, seq in (("sg3_alpha", tables["sg3"].alpha),
                     ("hg_alpha", tables["hg"].alpha),
                     ("sg4_beta", tables["sg4"].beta)):
        out[col] = plain_sig(seq[18] / seq[19], 10)
    return out


def golden_value(name: str, j: int, column: str) -> Fraction:
    return parse_golden(golden_table(name)[j][column]).value
