"""Categorical schema, record storage, CSV ingestion and cross tabulation.

Levels are stored as integer indices internally; every user-facing
surface (CSV, reports, rules, service) speaks in level names.  Schema
and dataset are immutable after construction so downstream modules can
share them freely across threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROLE_PREDICTOR = "predictor"
ROLE_CLASS = "class"


class InputError(ValueError):
    """Invalid user-supplied input (schema, data file, config)."""


class SchemaError(InputError):
    pass


class DataError(InputError):
    pass


@dataclass(frozen=True)
class Attribute:
    name: str
    levels: tuple[str, ...]
    role: str = ROLE_PREDICTOR

    def __post_init__(self):
        if self.role not in (ROLE_PREDICTOR, ROLE_CLASS):
            raise SchemaError(f"attribute {self.name!r}: unknown role {self.role!r}")
        if len(self.levels) < 2:
            raise SchemaError(f"attribute {self.name!r} needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise SchemaError(f"attribute {self.name!r} has duplicate level names")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise DataError(
                f"unknown level {level!r} for attribute {self.name!r}"
            ) from None


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        class_attrs = [a for a in self.attributes if a.role == ROLE_CLASS]
        if len(class_attrs) != 1:
            raise SchemaError(
                f"schema must designate exactly one class attribute, got {len(class_attrs)}"
            )

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def class_index(self) -> int:
        return next(i for i, a in enumerate(self.attributes) if a.role == ROLE_CLASS)

    @property
    def class_attribute(self) -> Attribute:
        return self.attributes[self.class_index]

    @property
    def predictors(self) -> list[Attribute]:
        return [a for a in self.attributes if a.role == ROLE_PREDICTOR]

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise SchemaError(f"unknown attribute {name!r}")

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def to_json_dict(self) -> dict:
        return {
            "attributes": [
                {"name": a.name, "levels": list(a.levels), "role": a.role}
                for a in self.attributes
            ]
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "AttributeSchema":
        try:
            attrs = tuple(
                Attribute(a["name"], tuple(a["levels"]), a.get("role", ROLE_PREDICTOR))
                for a in doc["attributes"]
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc
        return cls(attrs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "AttributeSchema":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema file {path} is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)

    def hash(self) -> str:
        canon = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Dataset:
    """Records stored as an (n, n_attributes) array of level indices."""

    schema: AttributeSchema
    records: np.ndarray
    skipped_rows: int = 0

    def __post_init__(self):
        arr = np.asarray(self.records, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, len(self.schema.attributes))
        if arr.ndim != 2 or arr.shape[1] != len(self.schema.attributes):
            raise DataError(
                f"records must have one entry per schema attribute "
                f"({len(self.schema.attributes)}), got shape {arr.shape}"
            )
        for j, attr in enumerate(self.schema.attributes):
            col = arr[:, j]
            if col.size and (col.min() < 0 or col.max() >= attr.n_levels):
                raise DataError(
                    f"attribute {attr.name!r}: level index out of range "
                    f"[0, {attr.n_levels})"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "records", arr)

    def __len__(self) -> int:
        return self.records.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.records[:, self.schema.index(name)]

    def record_levels(self, i: int) -> dict[str, str]:
        """Record i as a {attribute: level-name} mapping."""
        return {
            a.name: a.levels[self.records[i, j]]
            for j, a in enumerate(self.schema.attributes)
        }

    def class_column(self) -> np.ndarray:
        return self.records[:, self.schema.class_index]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.schema, self.records[indices])


@dataclass(frozen=True)
class ContingencyTable:
    row_attr: str
    col_attr: str
    counts: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 2:
            raise DataError("contingency counts must be a 2-D matrix")
        if arr.shape != (len(self.row_labels), len(self.col_labels)):
            raise DataError(
                f"counts shape {arr.shape} does not match labels "
                f"({len(self.row_labels)}, {len(self.col_labels)})"
            )
        if arr.size and arr.min() < 0:
            raise DataError("contingency counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @classmethod
    def from_counts(cls, counts, row_attr="rows", col_attr="cols") -> "ContingencyTable":
        arr = np.asarray(counts, dtype=np.int64)
        return cls(
            row_attr,
            col_attr,
            arr,
            tuple(f"r{i}" for i in range(arr.shape[0])),
            tuple(f"c{j}" for j in range(arr.shape[1])),
        )

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def cross_tab(data: Dataset, row_attr: str, col_attr: str) -> ContingencyTable:
    """Counts of records per (row_attr level, col_attr level) pair."""
    ra = data.schema.attribute(row_attr)
    ca = data.schema.attribute(col_attr)
    rows = data.column(row_attr)
    cols = data.column(col_attr)
    flat = np.bincount(rows * ca.n_levels + cols, minlength=ra.n_levels * ca.n_levels)
    counts = flat.reshape(ra.n_levels, ca.n_levels)
    return ContingencyTable(row_attr, col_attr, counts, ra.levels, ca.levels)


MISSING_FAIL = "fail"
MISSING_SKIP = "skip"


def load_csv(
    path: str | Path,
    schema: AttributeSchema,
    missing: str = MISSING_FAIL,
) -> Dataset:
    """Read a CSV of level names into a Dataset.

    The header must contain every schema attribute name (any column
    order); cells are level names.  Rows with empty cells are rejected:
    with missing="fail" the load aborts, with missing="skip" they are
    dropped and counted on the returned Dataset.
    """
    if missing not in (MISSING_FAIL, MISSING_SKIP):
        raise InputError(f"unknown missing-value policy {missing!r}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        col_of: dict[str, int] = {}
        for name in schema.names:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
        for pos, name in enumerate(header):
            if name not in schema.names:
                raise DataError(f"{path}: unknown column {name!r}")
            if name in col_of:
                raise DataError(f"{path}: duplicate column {name!r}")
            col_of[name] = pos

        records: list[list[int]] = []
        skipped = 0
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}"
                )
            indices = []
            bad = False
            for attr in schema.attributes:
                cell = row[col_of[attr.name]]
                if cell == "":
                    if missing == MISSING_FAIL:
                        raise DataError(
                            f"{path}: row {rownum}, column {attr.name!r}: missing value"
                        )
                    bad = True
                    break
                try:
                    indices.append(attr.levels.index(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {rownum}, column {attr.name!r}: "
                        f"unknown level {cell!r}"
                    ) from None
            if bad:
                skipped += 1
                continue
            records.append(indices)

    arr = np.array(records, dtype=np.int64).reshape(len(records), len(schema.attributes))
    return Dataset(schema, arr, skipped_rows=skipped)


def save_csv(data: Dataset, path: str | Path) -> None:
    """Write a Dataset back out as level-name cells (RFC 4180 quoting)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.schema.names)
        for i in range(len(data)):
            writer.writerow(
                [
                    a.levels[data.records[i, j]]
                    for j, a in enumerate(data.schema.attributes)
                ]
            )


def default_schema() -> AttributeSchema:
    """The stock nine-attribute survey schema (eight predictors + class).

    Level counts per attribute: 7, 3, 9, 2, 4, 3, 3, 8 and a 3-level
    class.  Level names follow the published rule-set vocabulary where
    known; the rest are filled in with plausible survey wordings.
    """
    return AttributeSchema(
        (
            Attribute(
                "Type of Activity",
                (
                    "Permanently Employed",
                    "Temporarily Employed",
                    "Self Employed",
                    "Unemployed",
                    "Engaged in Studies",
                    "Household Work",
                    "Other",
                ),
            ),
            Attribute(
                "Educational Level",
                ("No Schooling/Grade 1-5", "Grade 6-11", "Passed O/L or Above"),
            ),
            Attribute(
                "Province",
                (
                    "Western",
                    "Central",
                    "Southern",
                    "Northern",
                    "Eastern",
                    "North Western",
                    "North Central",
                    "Uva",
                    "Sabaragamuwa",
                ),
            ),
            Attribute("Gender", ("Male", "Female")),
            Attribute(
                "Social Class",
                ("Upper Class", "Middle Class", "Working Class", "Lower Class"),
            ),
            Attribute("Age Group", ("15-19 yrs", "20-24 yrs", "25-29 yrs")),
            Attribute("Financial Situation in Past", ("Better", "Same", "Worse")),
            Attribute(
                "Major Problems with Education",
                (
                    "No Major Problems",
                    "Financial Difficulties",
                    "Distance to Institutions",
                    "Quality of Teaching",
                    "Lack of Facilities",
                    "Family Responsibilities",
                    "Language Barriers",
                    "Other",
                ),
            ),
            Attribute(
                "Further Education Desire",
                (
                    "Technical/Vocational Education",
                    "University/Higher Education",
                    "No Desire",
                ),
                role=ROLE_CLASS,
            ),
        )
    )
