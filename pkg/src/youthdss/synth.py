"""Seeded synthetic survey data from a known ground-truth logit model.

Predictors are sampled independently from per-attribute marginals; the
class is then drawn from the truth model's probabilities at each
record.  The draw order is fixed and documented - record-major, one
uniform per predictor in schema order, then one uniform for the class -
and the PRNG is the SplitMix64 stream from rng.py, so a fixed seed
reproduces the dataset bit for bit in any implementation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AttributeSchema, Dataset, InputError, default_schema
from .logit import (
    FittedLogitModel,
    ModelSpec,
    ModelTerm,
    default_baseline,
    predict_proba,
)
from .rng import SplitMix64

MARGINAL_SUM_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorSpec:
    schema: AttributeSchema
    predictor_marginals: dict[str, tuple[float, ...]]
    truth_model: FittedLogitModel
    seed: int
    n: int

    def __post_init__(self):
        for attr in self.schema.predictors:
            if attr.name not in self.predictor_marginals:
                raise InputError(f"no marginal distribution for {attr.name!r}")
            probs = self.predictor_marginals[attr.name]
            if len(probs) != attr.n_levels:
                raise InputError(
                    f"marginal for {attr.name!r} has {len(probs)} entries, "
                    f"attribute has {attr.n_levels} levels"
                )
            if any(p < 0 for p in probs):
                raise InputError(f"marginal for {attr.name!r} has negative entries")
            if abs(sum(probs) - 1.0) > MARGINAL_SUM_TOL:
                raise InputError(
                    f"marginal for {attr.name!r} sums to {sum(probs)}, expected 1"
                )
        if self.truth_model.spec.schema.hash() != self.schema.hash():
            raise InputError("truth model does not conform to the generator schema")
        if self.n < 0:
            raise InputError("record count must be non-negative")

    def with_overrides(self, seed: int | None = None, n: int | None = None) -> "GeneratorSpec":
        return GeneratorSpec(
            self.schema,
            self.predictor_marginals,
            self.truth_model,
            self.seed if seed is None else seed,
            self.n if n is None else n,
        )

    def to_json_dict(self) -> dict:
        return {
            "schema": self.schema.to_json_dict(),
            "predictor_marginals": {
                k: list(v) for k, v in self.predictor_marginals.items()
            },
            "truth_model": self.truth_model.to_json_dict(),
            "seed": self.seed,
            "n": self.n,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GeneratorSpec":
        schema = AttributeSchema.from_json_dict(doc["schema"])
        return cls(
            schema=schema,
            predictor_marginals={
                k: tuple(v) for k, v in doc["predictor_marginals"].items()
            },
            truth_model=FittedLogitModel.from_json_dict(doc["truth_model"], schema),
            seed=int(doc["seed"]),
            n=int(doc["n"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorSpec":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _cumulative(probs) -> list[float]:
    total = 0.0
    out = []
    for p in probs:
        total += p
        out.append(total)
    return out


def generate(spec: GeneratorSpec) -> Dataset:
    """Sample a dataset; deterministic for a fixed spec (seed included)."""
    schema = spec.schema
    rng = SplitMix64(spec.seed)
    n_attrs = len(schema.attributes)
    class_pos = schema.class_index
    predictor_positions = [
        j for j, a in enumerate(schema.attributes) if a.role != "class"
    ]
    cums = {
        j: _cumulative(spec.predictor_marginals[schema.attributes[j].name])
        for j in predictor_positions
    }

    # Class probabilities depend only on the covariate pattern the truth
    # model uses, so cache the cumulative class distribution per pattern.
    involved = [schema.index(a) for a in spec.truth_model.spec.involved_attributes()]
    class_cum_cache: dict[tuple, list[float]] = {}

    records = np.zeros((spec.n, n_attrs), dtype=np.int64)
    record = np.zeros(n_attrs, dtype=np.int64)
    for i in range(spec.n):
        for j in predictor_positions:
            record[j] = rng.choice_index(cums[j])
        key = tuple(int(record[j]) for j in involved)
        cum = class_cum_cache.get(key)
        if cum is None:
            cum = _cumulative(predict_proba(spec.truth_model, record))
            class_cum_cache[key] = cum
        record[class_pos] = rng.choice_index(cum)
        records[i] = record
    return Dataset(schema, records)


# Fixed truth coefficients for the stock schema.  'Type of Activity' is
# deliberately the dominant effect and 'Educational Level' the clear
# second; 'Financial Situation in Past' carries a weak main effect and
# interacts with 'Major Problems with Education', which also has a
# modest main effect of its own so the interaction's parents are
# discoverable.  Province, Gender, Social Class and Age Group have no
# effect at all and serve as noise attributes in selection studies.
_TRUTH_TERMS = (
    "Type of Activity",
    "Educational Level",
    "Financial Situation in Past",
    "Major Problems with Education",
    "Financial Situation in Past*Major Problems with Education",
)

_TRUTH_COEFFICIENTS = [
    # Technical/Vocational Education logit vs No Desire
    [
        -0.10,
        # Type of Activity (6 dummies)
        -0.80, 0.90, 0.50, 1.60, -1.40, 0.30,
        # Educational Level (2 dummies)
        0.50, 0.80,
        # Financial Situation in Past (2 dummies)
        0.25, 0.05,
        # Major Problems with Education (7 dummies)
        0.35, -0.30, 0.25, -0.20, 0.30, -0.25, 0.20,
        # Financial Situation in Past x Major Problems with Education (2x7)
        0.80, -0.65, 0.55, -0.40, 0.65, -0.55, 0.40,
        -0.55, 0.65, -0.40, 0.55, -0.65, 0.40, -0.30,
    ],
    # University/Higher Education logit vs No Desire
    [
        -0.50,
        -1.80, -0.60, -1.20, 0.60, 2.40, -0.90,
        -1.50, -0.70,
        0.30, 0.10,
        -0.30, 0.35, -0.20, 0.25, -0.30, 0.20, -0.15,
        -0.65, 0.80, -0.55, 0.40, -0.80, 0.55, -0.40,
        0.65, -0.55, 0.40, -0.65, 0.55, -0.40, 0.30,
    ],
]

_DEFAULT_MARGINALS = {
    "Type of Activity": (0.18, 0.12, 0.10, 0.16, 0.22, 0.14, 0.08),
    "Educational Level": (0.15, 0.55, 0.30),
    "Province": (0.25, 0.13, 0.12, 0.07, 0.08, 0.11, 0.08, 0.07, 0.09),
    "Gender": (0.52, 0.48),
    "Social Class": (0.08, 0.38, 0.42, 0.12),
    "Age Group": (0.35, 0.34, 0.31),
    "Financial Situation in Past": (0.30, 0.45, 0.25),
    "Major Problems with Education": (0.25, 0.20, 0.10, 0.09, 0.12, 0.11, 0.06, 0.07),
}

NOISE_ATTRIBUTES = ("Province", "Gender", "Social Class", "Age Group")


def default_generator_spec(seed: int = 1, n: int = 10_000) -> GeneratorSpec:
    """Stock generator over the default schema with fixed, documented
    truth coefficients (see _TRUTH_COEFFICIENTS)."""
    schema = default_schema()
    spec = ModelSpec(
        schema,
        (ModelTerm.intercept(),)
        + tuple(ModelTerm.parse(t) for t in _TRUTH_TERMS),
    )
    coefs = np.array(_TRUTH_COEFFICIENTS, dtype=np.float64)
    if coefs.shape != (schema.class_attribute.n_levels - 1, spec.n_columns):
        raise AssertionError(
            f"truth coefficient shape {coefs.shape} does not match design "
            f"({schema.class_attribute.n_levels - 1}, {spec.n_columns})"
        )
    truth = FittedLogitModel(
        spec=spec,
        baseline_class=default_baseline(schema),
        coefficients=coefs,
        deviance=0.0,
        converged=True,
        iterations=0,
    )
    return GeneratorSpec(
        schema=schema,
        predictor_marginals=dict(_DEFAULT_MARGINALS),
        truth_model=truth,
        seed=seed,
        n=n,
    )
