"""Baseline-category logit model over categorical attributes.

Each non-baseline outcome f gets its own intercept and coefficient
vector for the log-odds against the fixed baseline outcome:

    log(P[class=f | x] / P[class=baseline | x]) = alpha_f + x' beta_f

Design columns use reference (dummy) coding with the LAST level of
each attribute as the reference; an interaction contributes the
products of the two parents' dummies.  Fitting is Newton-Raphson with
step-halving on the multinomial log-likelihood, grouped by distinct
covariate pattern so repeated profiles cost nothing extra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AttributeSchema, Dataset, InputError, SchemaError

INTERCEPT = "intercept"
MAIN = "main"
INTERACTION = "interaction"

DEVIANCE_TOL = 1e-8
GRADIENT_TOL = 1e-6
MAX_ITERATIONS = 100
MAX_HALVINGS = 60
SEPARATION_COEF_BOUND = 30.0
BASELINE_CLASS_NAME = "No Desire"


class FitError(InputError):
    pass


@dataclass(frozen=True)
class ModelTerm:
    kind: str
    attrs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == INTERCEPT and self.attrs:
            raise InputError("intercept term takes no attributes")
        if self.kind == MAIN and len(self.attrs) != 1:
            raise InputError("main-effect term takes exactly one attribute")
        if self.kind == INTERACTION:
            if len(self.attrs) != 2 or self.attrs[0] == self.attrs[1]:
                raise InputError("interaction term takes two distinct attributes")
            if self.attrs != tuple(sorted(self.attrs)):
                object.__setattr__(self, "attrs", tuple(sorted(self.attrs)))
        if self.kind not in (INTERCEPT, MAIN, INTERACTION):
            raise InputError(f"unknown term kind {self.kind!r}")

    @classmethod
    def intercept(cls) -> "ModelTerm":
        return cls(INTERCEPT)

    @classmethod
    def main(cls, attr: str) -> "ModelTerm":
        return cls(MAIN, (attr,))

    @classmethod
    def interaction(cls, a: str, b: str) -> "ModelTerm":
        return cls(INTERACTION, (a, b))

    def label(self) -> str:
        if self.kind == INTERCEPT:
            return "intercept"
        return "*".join(self.attrs)

    @classmethod
    def parse(cls, text: str) -> "ModelTerm":
        text = text.strip()
        if text == "intercept":
            return cls.intercept()
        if "*" in text:
            a, _, b = text.partition("*")
            return cls.interaction(a.strip(), b.strip())
        return cls.main(text)


@dataclass(frozen=True)
class ModelSpec:
    schema: AttributeSchema
    terms: tuple[ModelTerm, ...]

    def __post_init__(self):
        if not self.terms or self.terms[0].kind != INTERCEPT:
            raise InputError("model terms must begin with the intercept")
        if len(set(self.terms)) != len(self.terms):
            raise InputError("duplicate model terms")
        class_name = self.schema.class_attribute.name
        for term in self.terms:
            for attr in term.attrs:
                if attr == class_name:
                    raise InputError("the class attribute cannot be a predictor term")
                self.schema.attribute(attr)  # raises on unknown name

    @classmethod
    def intercept_only(cls, schema: AttributeSchema) -> "ModelSpec":
        return cls(schema, (ModelTerm.intercept(),))

    @classmethod
    def of(cls, schema: AttributeSchema, *terms: ModelTerm) -> "ModelSpec":
        return cls(schema, (ModelTerm.intercept(), *terms))

    def with_term(self, term: ModelTerm) -> "ModelSpec":
        return ModelSpec(self.schema, self.terms + (term,))

    def involved_attributes(self) -> list[str]:
        seen = []
        for term in self.terms:
            for attr in term.attrs:
                if attr not in seen:
                    seen.append(attr)
        return seen

    def column_labels(self) -> list[str]:
        labels = []
        for term in self.terms:
            if term.kind == INTERCEPT:
                labels.append("intercept")
            elif term.kind == MAIN:
                attr = self.schema.attribute(term.attrs[0])
                labels.extend(
                    f"{attr.name}={lvl}" for lvl in attr.levels[:-1]
                )
            else:
                a = self.schema.attribute(term.attrs[0])
                b = self.schema.attribute(term.attrs[1])
                labels.extend(
                    f"{a.name}={la}×{b.name}={lb}"
                    for la in a.levels[:-1]
                    for lb in b.levels[:-1]
                )
        return labels

    @property
    def n_columns(self) -> int:
        p = 0
        for term in self.terms:
            if term.kind == INTERCEPT:
                p += 1
            elif term.kind == MAIN:
                p += self.schema.attribute(term.attrs[0]).n_levels - 1
            else:
                p += (self.schema.attribute(term.attrs[0]).n_levels - 1) * (
                    self.schema.attribute(term.attrs[1]).n_levels - 1
                )
        return p

    def term_labels(self) -> list[str]:
        return [t.label() for t in self.terms]


def design_matrix(spec: ModelSpec, records: np.ndarray) -> np.ndarray:
    """Encode an (n, n_attributes) level-index array into (n, P) columns."""
    records = np.atleast_2d(np.asarray(records, dtype=np.int64))
    if records.shape[1] != len(spec.schema.attributes):
        raise InputError(
            f"records have {records.shape[1]} attributes, schema has "
            f"{len(spec.schema.attributes)}"
        )
    n = records.shape[0]
    cols = []
    for term in spec.terms:
        if term.kind == INTERCEPT:
            cols.append(np.ones((n, 1)))
        elif term.kind == MAIN:
            ai = spec.schema.index(term.attrs[0])
            la = spec.schema.attributes[ai].n_levels
            col = records[:, ai]
            cols.append((col[:, None] == np.arange(la - 1)[None, :]).astype(float))
        else:
            ai = spec.schema.index(term.attrs[0])
            bi = spec.schema.index(term.attrs[1])
            la = spec.schema.attributes[ai].n_levels
            lb = spec.schema.attributes[bi].n_levels
            da = (records[:, ai][:, None] == np.arange(la - 1)[None, :]).astype(float)
            db = (records[:, bi][:, None] == np.arange(lb - 1)[None, :]).astype(float)
            # row-major over (a-dummy, b-dummy)
            cols.append((da[:, :, None] * db[:, None, :]).reshape(n, -1))
    return np.concatenate(cols, axis=1)


def encode_design(spec: ModelSpec, record) -> np.ndarray:
    """Design row for a single level-index record."""
    return design_matrix(spec, np.asarray(record, dtype=np.int64)[None, :])[0]


def default_baseline(schema: AttributeSchema) -> int:
    """Class level index used as the baseline outcome.

    The level named "No Desire" when present, else the last level.
    """
    levels = schema.class_attribute.levels
    if BASELINE_CLASS_NAME in levels:
        return levels.index(BASELINE_CLASS_NAME)
    return len(levels) - 1


@dataclass(frozen=True)
class FittedLogitModel:
    spec: ModelSpec
    baseline_class: int
    coefficients: np.ndarray  # (K-1, P); row order = non-baseline classes in schema order
    deviance: float
    converged: bool
    iterations: int
    separation_suspected: bool = False
    deviance_history: tuple[float, ...] = ()  # per-iteration diagnostic, not serialized

    def __post_init__(self):
        arr = np.asarray(self.coefficients, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    @property
    def n_params(self) -> int:
        return self.coefficients.size

    @property
    def n_classes(self) -> int:
        return self.spec.schema.class_attribute.n_levels

    @property
    def outcome_classes(self) -> list[int]:
        """Non-baseline class level indices, in schema level order."""
        return [k for k in range(self.n_classes) if k != self.baseline_class]

    def to_json_dict(self) -> dict:
        schema = self.spec.schema
        return {
            "schema_hash": schema.hash(),
            "baseline_class": schema.class_attribute.levels[self.baseline_class],
            "terms": self.spec.term_labels(),
            "column_labels": self.spec.column_labels(),
            "coefficients": [[float(v) for v in row] for row in self.coefficients],
            "deviance": float(self.deviance),
            "n_params": self.n_params,
            "converged": self.converged,
            "iterations": self.iterations,
            "separation_suspected": self.separation_suspected,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json_dict(cls, doc: dict, schema: AttributeSchema) -> "FittedLogitModel":
        if doc.get("schema_hash") != schema.hash():
            raise SchemaError(
                "model artifact was fitted against a different schema "
                f"(hash {doc.get('schema_hash')!r} != {schema.hash()!r})"
            )
        spec = ModelSpec(
            schema, tuple(ModelTerm.parse(t) for t in doc["terms"])
        )
        baseline = schema.class_attribute.level_index(doc["baseline_class"])
        return cls(
            spec=spec,
            baseline_class=baseline,
            coefficients=np.array(doc["coefficients"], dtype=np.float64),
            deviance=float(doc["deviance"]),
            converged=bool(doc["converged"]),
            iterations=int(doc.get("iterations", 0)),
            separation_suspected=bool(doc.get("separation_suspected", False)),
        )

    @classmethod
    def load(cls, path: str | Path, schema: AttributeSchema) -> "FittedLogitModel":
        return cls.from_json_dict(
            json.loads(Path(path).read_text(encoding="utf-8")), schema
        )


def pattern_counts(
    data: Dataset, attrs: list[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Collapse records to distinct covariate patterns over `attrs`.

    Returns (representatives, counts): representatives is an (m, A)
    level-index array with one full record per distinct pattern, and
    counts is (m, K) class counts per pattern.
    """
    schema = data.schema
    k = schema.class_attribute.n_levels
    classes = data.class_column()
    if not attrs:
        reps = np.zeros((1, len(schema.attributes)), dtype=np.int64)
        counts = np.bincount(classes, minlength=k)[None, :]
        return reps, counts
    idx = [schema.index(a) for a in attrs]
    keys = np.zeros(len(data), dtype=np.int64)
    for ai in idx:
        keys = keys * schema.attributes[ai].n_levels + data.records[:, ai]
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    reps = np.zeros((len(uniq), len(schema.attributes)), dtype=np.int64)
    for ai in idx:
        reps[:, ai] = data.records[first, ai]
    counts = np.bincount(inverse * k + classes, minlength=len(uniq) * k).reshape(
        len(uniq), k
    )
    return reps, counts


def _log_softmax(eta_full: np.ndarray) -> np.ndarray:
    m = eta_full.max(axis=1, keepdims=True)
    z = eta_full - m
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _nll_state(X: np.ndarray, counts_int: np.ndarray, B: np.ndarray):
    """Log-likelihood, gradient and probabilities at coefficients B.

    counts_int columns are in internal order: 0 = baseline, then the
    non-baseline classes.  Returns (loglik, grad (K-1, P), pi).
    """
    m, p = X.shape
    eta = X @ B.T  # (m, K-1)
    eta_full = np.concatenate([np.zeros((m, 1)), eta], axis=1)
    logpi = _log_softmax(eta_full)
    pi = np.exp(logpi)
    mask = counts_int > 0
    loglik = float((counts_int[mask] * logpi[mask]).sum())
    totals = counts_int.sum(axis=1)
    resid = counts_int[:, 1:] - totals[:, None] * pi[:, 1:]  # (m, K-1)
    grad = resid.T @ X  # (K-1, P)
    return loglik, grad, pi


def _information_matrix(X: np.ndarray, totals: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Negative Hessian of the log-likelihood, block form (K-1)P x (K-1)P."""
    km1 = pi.shape[1] - 1
    p = X.shape[1]
    info = np.zeros((km1 * p, km1 * p))
    for j in range(km1):
        for l in range(j, km1):
            pj = pi[:, j + 1]
            pl = pi[:, l + 1]
            w = totals * (pj * ((1.0 if j == l else 0.0) - pl))
            block = X.T @ (w[:, None] * X)
            info[j * p : (j + 1) * p, l * p : (l + 1) * p] = block
            if l != j:
                info[l * p : (l + 1) * p, j * p : (j + 1) * p] = block
    return info


def _solve_with_ridge(info: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve info @ x = rhs, escalating a tiny diagonal ridge when singular."""
    scale = max(float(np.abs(np.diag(info)).max()), 1.0)
    ridge = 0.0
    for _ in range(8):
        try:
            mat = info if ridge == 0.0 else info + ridge * np.eye(info.shape[0])
            x = np.linalg.solve(mat, rhs)
            if np.isfinite(x).all():
                return x
        except np.linalg.LinAlgError:
            pass
        ridge = 1e-10 * scale if ridge == 0.0 else ridge * 100.0
    raise FitError("Newton step failed: information matrix is numerically singular")


def fit(data: Dataset, spec: ModelSpec, baseline_class: int | None = None) -> FittedLogitModel:
    """Maximum-likelihood fit of the baseline-category logit model.

    Newton-Raphson with step-halving; converged when the deviance change
    drops below DEVIANCE_TOL and the gradient max-norm below GRADIENT_TOL,
    capped at MAX_ITERATIONS.  Non-convergence is reported on the result,
    not raised; huge coefficients at convergence failure flag suspected
    quasi-complete separation.
    """
    if len(data) == 0:
        raise FitError("cannot fit on an empty dataset")
    schema = data.schema
    if schema is not spec.schema and schema.hash() != spec.schema.hash():
        raise SchemaError("dataset and model spec use different schemas")
    k = schema.class_attribute.n_levels
    p = spec.n_columns
    if p * (k - 1) >= len(data):
        raise FitError(
            f"overparameterized: {p * (k - 1)} parameters for {len(data)} records"
        )
    baseline = default_baseline(schema) if baseline_class is None else baseline_class
    if not 0 <= baseline < k:
        raise InputError(f"baseline class index {baseline} out of range")

    reps, counts = pattern_counts(data, spec.involved_attributes())
    internal_order = [baseline] + [c for c in range(k) if c != baseline]
    counts_int = counts[:, internal_order].astype(np.float64)
    X = design_matrix(spec, reps)

    B = np.zeros((k - 1, p))
    loglik, grad, pi = _nll_state(X, counts_int, B)
    deviance = -2.0 * loglik
    history = [deviance]
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        totals = counts_int.sum(axis=1)
        info = _information_matrix(X, totals, pi)
        step = _solve_with_ridge(info, grad.ravel()).reshape(k - 1, p)

        new_B = None
        for _ in range(MAX_HALVINGS + 1):
            cand = B + step
            cand_loglik, cand_grad, cand_pi = _nll_state(X, counts_int, cand)
            if -2.0 * cand_loglik <= deviance:
                new_B = cand
                break
            step = step / 2.0
        if new_B is None:
            break  # no descent direction left; report non-convergence
        new_deviance = -2.0 * cand_loglik
        delta = deviance - new_deviance
        B, loglik, grad, pi = new_B, cand_loglik, cand_grad, cand_pi
        deviance = new_deviance
        history.append(deviance)
        if delta < DEVIANCE_TOL and np.abs(grad).max() < GRADIENT_TOL:
            converged = True
            break

    separation = (not converged) and bool(np.abs(B).max() > SEPARATION_COEF_BOUND)
    return FittedLogitModel(
        spec=spec,
        baseline_class=baseline,
        coefficients=B,
        deviance=deviance,
        converged=converged,
        iterations=iterations,
        separation_suspected=separation,
        deviance_history=tuple(history),
    )


def linear_predictors(model: FittedLogitModel, records: np.ndarray) -> np.ndarray:
    """(n, K) linear predictors in schema class order; baseline column is 0."""
    X = design_matrix(model.spec, records)
    eta = X @ model.coefficients.T
    n = X.shape[0]
    full = np.zeros((n, model.n_classes))
    for j, cls in enumerate(model.outcome_classes):
        full[:, cls] = eta[:, j]
    return full


def predict_proba_many(model: FittedLogitModel, records: np.ndarray) -> np.ndarray:
    """Class probabilities for many records; rows sum to 1."""
    full = linear_predictors(model, np.atleast_2d(records))
    logpi = _log_softmax(full)
    pi = np.exp(logpi)
    return pi / pi.sum(axis=1, keepdims=True)


def predict_proba(model: FittedLogitModel, record) -> np.ndarray:
    return predict_proba_many(model, np.asarray(record, dtype=np.int64)[None, :])[0]


def classify(model: FittedLogitModel, record) -> int:
    """Most probable class level index; ties break to the lowest index."""
    return int(np.argmax(predict_proba(model, record)))


def classify_many(model: FittedLogitModel, records: np.ndarray) -> np.ndarray:
    return np.argmax(predict_proba_many(model, records), axis=1)


def record_from_profile(schema: AttributeSchema, profile: dict[str, str]) -> np.ndarray:
    """Level-index record from a {predictor: level-name} mapping.

    Every predictor must be present; the class slot is filled with 0
    (it never feeds the design matrix).
    """
    class_name = schema.class_attribute.name
    unknown = [k for k in profile if k not in schema.names or k == class_name]
    if unknown:
        raise InputError(f"unknown or non-predictor attributes: {unknown}")
    record = np.zeros(len(schema.attributes), dtype=np.int64)
    for j, attr in enumerate(schema.attributes):
        if attr.role == "class":
            continue
        if attr.name not in profile:
            raise InputError(f"missing attribute {attr.name!r}")
        record[j] = attr.level_index(profile[attr.name])
    return record


@dataclass(frozen=True)
class ClassificationTable:
    """Observed-by-predicted counts plus the derived percentages."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (len(self.labels), len(self.labels)):
            raise InputError("classification counts must be K x K")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @classmethod
    def from_labels(cls, observed, predicted, labels) -> "ClassificationTable":
        observed = np.asarray(observed, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if observed.shape != predicted.shape:
            raise InputError(
                f"observed ({observed.size}) and predicted ({predicted.size}) "
                "lengths differ"
            )
        k = len(labels)
        if observed.size and (
            observed.min() < 0
            or observed.max() >= k
            or predicted.min() < 0
            or predicted.max() >= k
        ):
            raise InputError("label index out of range")
        counts = np.bincount(observed * k + predicted, minlength=k * k).reshape(k, k)
        return cls(tuple(labels), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_percent_correct(self) -> list[float | None]:
        out = []
        for i in range(len(self.labels)):
            row_total = self.counts[i].sum()
            out.append(
                100.0 * self.counts[i, i] / row_total if row_total else None
            )
        return out

    @property
    def column_percentages(self) -> list[float]:
        total = self.total
        return [100.0 * self.counts[:, j].sum() / total for j in range(len(self.labels))]

    @property
    def overall_percent_correct(self) -> float:
        return 100.0 * np.trace(self.counts) / self.total

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "counts": self.counts.tolist(),
            "row_percent_correct": self.row_percent_correct,
            "column_percentages": self.column_percentages,
            "overall_percent_correct": self.overall_percent_correct,
        }


def classification_table(observed, predicted, labels) -> ClassificationTable:
    return ClassificationTable.from_labels(observed, predicted, labels)
