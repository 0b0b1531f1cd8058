import os

import numpy as np
import pytest

from youthdss.data import Attribute, AttributeSchema, Dataset


@pytest.fixture(autouse=True)
def _no_output_dir_override(monkeypatch):
    # DSS_OUTPUT_DIR overrides --out; tests must control their own dirs
    monkeypatch.delenv("DSS_OUTPUT_DIR", raising=False)


@pytest.fixture(scope="session")
def pipeline_artifacts(tmp_path_factory):
    """One small end-to-end pipeline run shared by CLI and service tests."""
    os.environ.pop("DSS_OUTPUT_DIR", None)
    from youthdss.cli import main

    out = tmp_path_factory.mktemp("artifacts")
    rc = main(
        [
            "pipeline",
            "--gen-default",
            "--seed",
            "5",
            "--n",
            "1500",
            "--out",
            str(out),
            "--jobs",
            "2",
        ]
    )
    assert rc == 0
    return out


@pytest.fixture
def tiny_schema() -> AttributeSchema:
    """Two predictors and a 3-level class; small enough to enumerate."""
    return AttributeSchema(
        (
            Attribute("color", ("red", "green", "blue")),
            Attribute("size", ("small", "large")),
            Attribute("grade", ("low", "mid", "high"), role="class"),
        )
    )


def make_dataset(schema: AttributeSchema, rows) -> Dataset:
    return Dataset(schema, np.array(rows, dtype=np.int64))


@pytest.fixture
def random_dataset(tiny_schema):
    rng = np.random.default_rng(42)
    n = 1000
    rows = np.column_stack(
        [rng.integers(0, a.n_levels, size=n) for a in tiny_schema.attributes]
    )
    return Dataset(tiny_schema, rows)
