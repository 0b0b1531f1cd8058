import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from youthdss.data import Attribute, AttributeSchema, Dataset, SchemaError
from youthdss.logit import (
    ClassificationTable,
    FitError,
    FittedLogitModel,
    ModelSpec,
    ModelTerm,
    classification_table,
    classify,
    classify_many,
    default_baseline,
    design_matrix,
    encode_design,
    fit,
    linear_predictors,
    pattern_counts,
    predict_proba,
    predict_proba_many,
    _nll_state,
)

from conftest import make_dataset


def two_class_schema():
    return AttributeSchema(
        (
            Attribute("x", ("1", "0")),
            Attribute("y", ("c1", "c2", "c3"), role="class"),
        )
    )


def random_model_data(seed, n=300, n_attrs=2, levels=(3, 2), k=3):
    rng = np.random.default_rng(seed)
    attrs = [
        Attribute(f"a{i}", tuple(f"l{j}" for j in range(levels[i % len(levels)])))
        for i in range(n_attrs)
    ]
    attrs.append(Attribute("cls", tuple(f"c{j}" for j in range(k)), role="class"))
    schema = AttributeSchema(tuple(attrs))
    rows = np.column_stack(
        [rng.integers(0, a.n_levels, size=n) for a in schema.attributes]
    )
    return Dataset(schema, rows)


class TestTerms:
    def test_interaction_canonical_order(self):
        t1 = ModelTerm.interaction("b", "a")
        t2 = ModelTerm.interaction("a", "b")
        assert t1 == t2
        assert t1.attrs == ("a", "b")
        assert t1.label() == "a*b"

    def test_parse_round_trip(self):
        for text in ("intercept", "Gender", "A*B"):
            assert ModelTerm.parse(text).label() in (text, "a*b".join(sorted("AB")))
        assert ModelTerm.parse("B*A") == ModelTerm.interaction("A", "B")

    def test_validation(self):
        from youthdss.data import InputError

        with pytest.raises(InputError):
            ModelTerm.interaction("a", "a")
        with pytest.raises(InputError):
            ModelTerm("main", ())

    def test_spec_must_start_with_intercept(self, tiny_schema):
        from youthdss.data import InputError

        with pytest.raises(InputError):
            ModelSpec(tiny_schema, (ModelTerm.main("color"),))
        with pytest.raises(InputError):
            ModelSpec.of(tiny_schema, ModelTerm.main("color"), ModelTerm.main("color"))
        with pytest.raises(InputError):
            ModelSpec.of(tiny_schema, ModelTerm.main("grade"))  # class attr


class TestEncodeDesign:
    def test_intercept_only(self, tiny_schema):
        spec = ModelSpec.intercept_only(tiny_schema)
        assert encode_design(spec, [0, 0, 0]).tolist() == [1.0]

    def test_reference_is_last_level(self):
        schema = AttributeSchema(
            (
                Attribute("Gender", ("Male", "Female")),
                Attribute("y", ("a", "b"), role="class"),
            )
        )
        spec = ModelSpec.of(schema, ModelTerm.main("Gender"))
        female = encode_design(spec, [1, 0])
        male = encode_design(spec, [0, 0])
        assert female.tolist() == [1.0, 0.0]
        assert male.tolist() == [1.0, 1.0]

    def test_interaction_column_layout(self):
        schema = AttributeSchema(
            (
                Attribute("A", ("a0", "a1", "a2")),
                Attribute("B", ("b0", "b1")),
                Attribute("y", ("p", "q"), role="class"),
            )
        )
        spec = ModelSpec.of(
            schema,
            ModelTerm.main("A"),
            ModelTerm.main("B"),
            ModelTerm.interaction("A", "B"),
        )
        row = encode_design(spec, [0, 0, 0])
        assert row.tolist() == [1.0, 1.0, 0.0, 1.0, 1.0, 0.0]
        assert spec.n_columns == 6
        assert spec.column_labels() == [
            "intercept",
            "A=a0",
            "A=a1",
            "B=b0",
            "A=a0×B=b0",
            "A=a1×B=b0",
        ]

    def test_record_width_mismatch(self, tiny_schema):
        from youthdss.data import InputError

        spec = ModelSpec.intercept_only(tiny_schema)
        with pytest.raises(InputError):
            encode_design(spec, [0, 0])


class TestFit:
    def test_intercept_only_closed_form(self):
        schema = two_class_schema()
        recs = [[0, 0]] * 10 + [[0, 1]] * 20 + [[0, 2]] * 70
        data = make_dataset(schema, recs)
        model = fit(data, ModelSpec.intercept_only(schema))
        assert model.converged
        assert model.coefficients[0, 0] == pytest.approx(math.log(10 / 70), abs=1e-6)
        assert model.coefficients[1, 0] == pytest.approx(math.log(20 / 70), abs=1e-6)
        expected_dev = -2 * (10 * math.log(0.1) + 20 * math.log(0.2) + 70 * math.log(0.7))
        assert model.deviance == pytest.approx(expected_dev, abs=1e-6)
        assert model.n_params == 2

    def test_saturated_binary_factor_closed_form(self):
        schema = two_class_schema()
        # level index 1 ('0') is the reference group
        recs = (
            [[1, 0]] * 10 + [[1, 1]] * 20 + [[1, 2]] * 30
            + [[0, 0]] * 30 + [[0, 1]] * 20 + [[0, 2]] * 10
        )
        data = make_dataset(schema, recs)
        model = fit(data, ModelSpec.of(schema, ModelTerm.main("x")))
        a1, b1 = model.coefficients[0]
        a2, b2 = model.coefficients[1]
        assert a1 == pytest.approx(math.log(10 / 30), abs=1e-5)
        assert b1 == pytest.approx(2 * math.log(3), abs=1e-5)
        assert a2 == pytest.approx(math.log(20 / 30), abs=1e-5)
        assert b2 == pytest.approx(math.log(3), abs=1e-5)

    def test_nested_deviance_ordering(self):
        data = random_model_data(0, n=400)
        null = fit(data, ModelSpec.intercept_only(data.schema))
        one = fit(data, ModelSpec.of(data.schema, ModelTerm.main("a0")))
        two = fit(
            data,
            ModelSpec.of(data.schema, ModelTerm.main("a0"), ModelTerm.main("a1")),
        )
        assert one.deviance <= null.deviance + 1e-9
        assert two.deviance <= one.deviance + 1e-9

    def test_deviance_history_monotone(self):
        data = random_model_data(1, n=500)
        model = fit(
            data,
            ModelSpec.of(
                data.schema,
                ModelTerm.main("a0"),
                ModelTerm.main("a1"),
                ModelTerm.interaction("a0", "a1"),
            ),
        )
        hist = model.deviance_history
        assert len(hist) >= 2
        assert all(hist[i + 1] <= hist[i] + 1e-12 for i in range(len(hist) - 1))

    def test_record_order_invariance(self):
        data = random_model_data(2, n=600)
        spec = ModelSpec.of(data.schema, ModelTerm.main("a0"), ModelTerm.main("a1"))
        m1 = fit(data, spec)
        rng = np.random.default_rng(9)
        perm = rng.permutation(len(data))
        m2 = fit(Dataset(data.schema, data.records[perm]), spec)
        assert np.allclose(m1.coefficients, m2.coefficients, atol=1e-9)

    def test_overparameterized_rejected(self):
        data = random_model_data(3, n=10)
        spec = ModelSpec.of(
            data.schema,
            ModelTerm.main("a0"),
            ModelTerm.main("a1"),
            ModelTerm.interaction("a0", "a1"),
        )
        with pytest.raises(FitError, match="overparameterized"):
            fit(data, spec)

    def test_empty_dataset_rejected(self, tiny_schema):
        with pytest.raises(FitError):
            fit(
                make_dataset(tiny_schema, np.zeros((0, 3))),
                ModelSpec.intercept_only(tiny_schema),
            )

    def test_separated_fit_keeps_usable_estimates(self):
        # 'x' level 0 only ever occurs with class 0: quasi-complete separation.
        # The boundary MLE is at infinity but the tolerances are met with
        # large finite coefficients, so the fit is still usable.
        schema = two_class_schema()
        recs = [[0, 0]] * 40 + [[1, 0]] * 10 + [[1, 1]] * 20 + [[1, 2]] * 30
        data = make_dataset(schema, recs)
        model = fit(data, ModelSpec.of(schema, ModelTerm.main("x")))
        probs = predict_proba(model, [0, 0])
        assert probs[0] > 0.999
        assert np.isfinite(model.deviance)

    def test_separation_flagged_on_convergence_failure(self, monkeypatch):
        # cut the iteration budget so the runaway coefficients are caught
        # mid-flight: convergence failure plus a huge coefficient flags it
        import youthdss.logit as logit_mod

        monkeypatch.setattr(logit_mod, "MAX_ITERATIONS", 4)
        monkeypatch.setattr(logit_mod, "SEPARATION_COEF_BOUND", 3.0)
        schema = two_class_schema()
        recs = [[0, 0]] * 40 + [[1, 0]] * 10 + [[1, 1]] * 20 + [[1, 2]] * 30
        data = make_dataset(schema, recs)
        model = fit(data, ModelSpec.of(schema, ModelTerm.main("x")))
        assert not model.converged
        assert model.separation_suspected

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        for seed in range(5):
            data = random_model_data(seed, n=200)
            spec = ModelSpec.of(
                data.schema, ModelTerm.main("a0"), ModelTerm.main("a1")
            )
            reps, counts = pattern_counts(data, spec.involved_attributes())
            k = data.schema.class_attribute.n_levels
            baseline = default_baseline(data.schema)
            order = [baseline] + [c for c in range(k) if c != baseline]
            counts_int = counts[:, order].astype(float)
            X = design_matrix(spec, reps)
            B = rng.normal(scale=0.5, size=(k - 1, spec.n_columns))
            _, grad, _ = _nll_state(X, counts_int, B)
            h = 1e-5
            for j in range(k - 1):
                for p in range(spec.n_columns):
                    bp = B.copy()
                    bp[j, p] += h
                    bm = B.copy()
                    bm[j, p] -= h
                    lp, _, _ = _nll_state(X, counts_int, bp)
                    lm, _, _ = _nll_state(X, counts_int, bm)
                    fd = (lp - lm) / (2 * h)
                    assert grad[j, p] == pytest.approx(
                        fd, rel=1e-4, abs=1e-6
                    ), f"mismatch at ({j},{p})"

    def test_all_zero_column_is_harmless(self):
        # a never-observed non-reference level leaves a zero design column
        schema = AttributeSchema(
            (
                Attribute("x", ("seen1", "unseen", "seen2")),
                Attribute("y", ("c1", "c2"), role="class"),
            )
        )
        rng = np.random.default_rng(4)
        xs = rng.choice([0, 2], size=200)
        ys = rng.integers(0, 2, size=200)
        data = make_dataset(schema, np.column_stack([xs, ys]))
        model = fit(data, ModelSpec.of(schema, ModelTerm.main("x")))
        unseen_col = 1 + 1  # intercept, x=seen1, x=unseen
        assert abs(model.coefficients[0, unseen_col]) < 1e-6


class TestPredict:
    def test_zero_coefficients_uniform(self, tiny_schema):
        spec = ModelSpec.intercept_only(tiny_schema)
        model = FittedLogitModel(
            spec=spec,
            baseline_class=2,
            coefficients=np.zeros((2, 1)),
            deviance=0.0,
            converged=True,
            iterations=0,
        )
        assert np.allclose(predict_proba(model, [0, 0, 0]), [1 / 3] * 3)

    def test_intercept_model_reproduces_frequencies(self):
        schema = two_class_schema()
        recs = [[0, 0]] * 10 + [[0, 1]] * 20 + [[0, 2]] * 70
        model = fit(make_dataset(schema, recs), ModelSpec.intercept_only(schema))
        assert np.allclose(predict_proba(model, [0, 0]), [0.1, 0.2, 0.7], atol=1e-7)

    def test_probabilities_sum_to_one(self):
        data = random_model_data(6, n=300)
        spec = ModelSpec.of(data.schema, ModelTerm.main("a0"), ModelTerm.main("a1"))
        model = fit(data, spec)
        probs = predict_proba_many(model, data.records)
        assert np.all(probs > 0)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_argmax_matches_linear_predictors(self):
        data = random_model_data(7, n=300)
        model = fit(data, ModelSpec.of(data.schema, ModelTerm.main("a0")))
        eta = linear_predictors(model, data.records)
        assert np.array_equal(
            np.argmax(predict_proba_many(model, data.records), axis=1),
            np.argmax(eta, axis=1),
        )

    def test_classify_examples(self):
        schema = two_class_schema()
        # intercept model with class probabilities (0.2, 0.3, 0.5)
        recs = [[0, 0]] * 20 + [[0, 1]] * 30 + [[0, 2]] * 50
        model = fit(make_dataset(schema, recs), ModelSpec.intercept_only(schema))
        assert classify(model, [0, 0]) == 2

    def test_classify_tie_breaks_low_index(self, tiny_schema):
        model = FittedLogitModel(
            spec=ModelSpec.intercept_only(tiny_schema),
            baseline_class=2,
            coefficients=np.array([[30.0], [30.0]]),  # classes 0,1 tie; class 2 ~ 0
            deviance=0.0,
            converged=True,
            iterations=0,
        )
        probs = predict_proba(model, [0, 0, 0])
        assert probs[0] == pytest.approx(probs[1])
        assert classify(model, [0, 0, 0]) == 0

    def test_classify_agrees_with_argmax_oracle(self):
        data = random_model_data(8, n=1000)
        model = fit(data, ModelSpec.of(data.schema, ModelTerm.main("a0")))
        preds = classify_many(model, data.records)
        for i in range(len(data)):
            assert preds[i] == int(np.argmax(predict_proba(model, data.records[i])))


class TestArtifact:
    def test_json_round_trip(self):
        data = random_model_data(10, n=300)
        spec = ModelSpec.of(
            data.schema,
            ModelTerm.main("a0"),
            ModelTerm.interaction("a0", "a1"),
        )
        model = fit(data, spec)
        doc = model.to_json_dict()
        assert set(doc) >= {
            "schema_hash",
            "baseline_class",
            "terms",
            "column_labels",
            "coefficients",
            "deviance",
            "n_params",
            "converged",
        }
        restored = FittedLogitModel.from_json_dict(doc, data.schema)
        assert np.allclose(restored.coefficients, model.coefficients)
        assert restored.deviance == model.deviance
        assert restored.spec.term_labels() == model.spec.term_labels()
        probs_a = predict_proba(model, data.records[0])
        probs_b = predict_proba(restored, data.records[0])
        assert np.allclose(probs_a, probs_b)

    def test_schema_hash_checked(self, tiny_schema):
        data = random_model_data(11, n=200)
        model = fit(data, ModelSpec.intercept_only(data.schema))
        with pytest.raises(SchemaError):
            FittedLogitModel.from_json_dict(model.to_json_dict(), tiny_schema)

    def test_save_load(self, tmp_path):
        data = random_model_data(12, n=200)
        model = fit(data, ModelSpec.of(data.schema, ModelTerm.main("a0")))
        path = tmp_path / "model.json"
        model.save(path)
        loaded = FittedLogitModel.load(path, data.schema)
        assert loaded.deviance == model.deviance


class TestClassificationTable:
    TABLE12 = [[641, 141, 51], [249, 304, 89], [46, 45, 519]]

    def test_published_percentages(self):
        table = ClassificationTable(("nd", "tv", "uh"), np.array(self.TABLE12))
        rounded = [round(p, 1) for p in table.row_percent_correct]
        assert rounded == [77.0, 47.4, 85.1]
        assert [round(p, 1) for p in table.column_percentages] == [44.9, 23.5, 31.6]
        assert round(table.overall_percent_correct, 1) == 70.2

    def test_column_percentages_sum_to_100(self):
        table = ClassificationTable(("a", "b", "c"), np.array(self.TABLE12))
        assert sum(table.column_percentages) == pytest.approx(100.0)

    def test_perfect_predictions(self):
        obs = [0, 1, 2, 1, 0]
        table = classification_table(obs, obs, ("a", "b", "c"))
        assert np.array_equal(np.diag(np.diag(table.counts)), table.counts)
        assert table.overall_percent_correct == 100.0

    def test_overall_matches_tally_oracle(self):
        rng = np.random.default_rng(13)
        obs = rng.integers(0, 3, size=500)
        pred = rng.integers(0, 3, size=500)
        table = classification_table(obs, pred, ("a", "b", "c"))
        correct = sum(1 for o, p in zip(obs, pred) if o == p)
        assert table.overall_percent_correct == pytest.approx(100 * correct / 500)

    def test_length_mismatch(self):
        from youthdss.data import InputError

        with pytest.raises(InputError):
            classification_table([0, 1], [0], ("a", "b"))

    def test_unknown_label(self):
        from youthdss.data import InputError

        with pytest.raises(InputError):
            classification_table([0, 5], [0, 1], ("a", "b"))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_proba_sums_for_random_coefficients(seed):
    rng = np.random.default_rng(seed)
    schema = AttributeSchema(
        (
            Attribute("a", ("u", "v", "w")),
            Attribute("cls", ("x", "y", "z"), role="class"),
        )
    )
    spec = ModelSpec.of(schema, ModelTerm.main("a"))
    model = FittedLogitModel(
        spec=spec,
        baseline_class=2,
        coefficients=rng.normal(scale=5.0, size=(2, 3)),
        deviance=0.0,
        converged=True,
        iterations=0,
    )
    rec = [int(rng.integers(0, 3)), 0]
    p = predict_proba(model, rec)
    assert abs(p.sum() - 1.0) <= 1e-12
