import numpy as np
import pytest

from oracles import ista_codes_oracle, knn_vote_oracle, nearest_rank_quantile_oracle
from wits.errors import InvalidInputError
from wits.mtdl import Hyperparams, Model, build_affinity
from wits.recognizer import (
    RecognitionResult,
    calibrate_threshold,
    classify,
    detect_abnormal,
    knn_baseline,
    model_labels,
    read_results_jsonl,
    score_normality,
    write_results_jsonl,
)


def planted_model(seed=0, k_classes=2, m=12, d_atoms=3, sd=2, lambda3=0.2):
    """Model with orthogonal per-class dictionaries: class atoms never mix."""
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.normal(size=(m, k_classes * d_atoms)))[0]
    task_dicts = [basis[:, k * d_atoms:(k + 1) * d_atoms].T.copy()
                  for k in range(k_classes)]
    hyper = Hyperparams(lambda1=1e-3, lambda2=0.01, lambda3=lambda3,
                        d=d_atoms, sd=sd, code_tol=1e-9)
    q = np.linalg.qr(rng.normal(size=(m, sd)))[0]
    shared = np.zeros((d_atoms, sd))
    names = [f"Act{k + 1}" for k in range(k_classes)]
    return Model(shared=shared, task_dicts=task_dicts, projection=q,
                 hyper=hyper, j_trace=[0.0], label_names=names), rng


def sample_from(model, rng, class_id, noise=0.0, scale=0.8):
    d_k = model.task_dicts[class_id - 1]
    coeff = rng.uniform(0.5, 1.0, size=d_k.shape[0]) * scale
    x = coeff @ d_k
    if noise:
        x = x + rng.normal(scale=noise * np.linalg.norm(x) / np.sqrt(x.size), size=x.shape)
    return x


class TestClassify:
    def test_single_class_always_class_one(self):
        model, rng = planted_model(k_classes=1)
        res = classify(rng.normal(size=12), model)
        assert res.label.id == 1 and res.label.name == "Act1"

    def test_planted_two_class_with_noise(self):
        model, rng = planted_model(seed=1)
        for _ in range(20):
            x = sample_from(model, rng, class_id=1, noise=0.01)
            res = classify(x, model)
            assert res.label.id == 1
            x2 = sample_from(model, rng, class_id=2, noise=0.01)
            assert classify(x2, model).label.id == 2

    def test_scores_match_bruteforce_coding_oracle(self):
        model, rng = planted_model(seed=2)
        h = model.hyper
        x = sample_from(model, rng, class_id=2, noise=0.05).reshape(1, -1)
        res = classify(x[0], model)
        for k in range(model.n_tasks):
            w = build_affinity(x)
            no_smooth = Hyperparams(**{**h.to_dict(), "lambda2": 0.0})
            c = ista_codes_oracle(x, model.task_dicts[k], model.shared,
                                  model.projection, w, no_smooth)
            expected = (np.sum((x - c @ model.task_dicts[k]) ** 2)
                        + h.lambda1 * np.abs(c).sum()
                        + h.lambda3 * np.sum((x @ model.projection - c @ model.shared) ** 2))
            assert res.scores[k] == pytest.approx(float(expected), rel=1e-5, abs=1e-8)

    def test_duplicated_rows_identical_results(self):
        model, rng = planted_model(seed=3)
        x = sample_from(model, rng, 1, noise=0.02)
        results = classify(np.vstack([x, x, x]), model)
        assert len(results) == 3
        assert all(r.label == results[0].label for r in results)
        assert all(np.array_equal(r.scores, results[0].scores) for r in results)
        assert all(r.normality == results[0].normality for r in results)

    def test_label_is_argmin_and_tie_breaks_low(self):
        model, rng = planted_model(seed=4)
        for _ in range(10):
            res = classify(rng.normal(size=12), model)
            assert res.label.id == int(np.argmin(res.scores)) + 1
        # a zero vector codes to zero for every class: exact tie -> class 1
        res = classify(np.zeros(12), model)
        assert res.scores[0] == res.scores[1] == 0.0
        assert res.label.id == 1

    def test_scoring_modes(self):
        model, rng = planted_model(seed=5, lambda3=0.5)
        x = sample_from(model, rng, 2, noise=0.05)
        default = classify(x, model, scoring="objective")
        residual = classify(x, model, scoring="residual")
        no_shared = classify(x, model, scoring="no_shared")
        assert residual.scores[1] <= default.scores[1]
        assert no_shared.label.id == 2 and residual.label.id == 2
        with pytest.raises(InvalidInputError):
            classify(x, model, scoring="bogus")

    def test_dimension_mismatch(self):
        model, _ = planted_model()
        with pytest.raises(InvalidInputError):
            classify(np.zeros(5), model)

    def test_epsilon_independent_of_label(self):
        model, rng = planted_model(seed=6)
        x = sample_from(model, rng, 1, noise=0.1)
        a = classify(x, model, epsilon=1e-9)
        b = classify(x, model, epsilon=1e9)
        assert a.label == b.label
        assert np.array_equal(a.scores, b.scores)
        assert a.abnormal and not b.abnormal


class TestNormality:
    def test_training_like_sample_scores_low(self):
        model, rng = planted_model(seed=7)
        x = sample_from(model, rng, 1)
        j = score_normality(x, 1, model)
        assert j < 1e-2  # near-exact reconstruction leaves only the tiny L1 term

    def test_zero_vector_scores_zero(self):
        model, _ = planted_model(seed=8)
        assert score_normality(np.zeros(12), 1, model) == 0.0

    def test_far_sample_exceeds_training_percentile(self):
        model, rng = planted_model(seed=9)
        train_scores = [classify(sample_from(model, rng, 1, noise=0.02), model).normality
                        for _ in range(100)]
        eps = calibrate_threshold(train_scores, 0.99)
        far = rng.normal(scale=3.0, size=12)
        assert score_normality(far, classify(far, model).label.id, model) > eps

    def test_matches_classify_normality(self):
        model, rng = planted_model(seed=10)
        x = sample_from(model, rng, 2, noise=0.05)
        res = classify(x, model)
        assert score_normality(x, res.label.id, model) == pytest.approx(res.normality, rel=1e-9)


class TestDetectAbnormal:
    def test_infinite_epsilon_never_flags(self):
        model, rng = planted_model(seed=11)
        assert detect_abnormal(rng.normal(size=12), model, np.inf) is False

    def test_negative_epsilon_always_flags(self):
        model, rng = planted_model(seed=12)
        assert detect_abnormal(rng.normal(size=12), model, -1.0) is True

    def test_monotone_in_epsilon(self):
        model, rng = planted_model(seed=13)
        x = sample_from(model, rng, 1, noise=0.3)
        j = score_normality(x, classify(x, model).label.id, model)
        for eps in (j / 2, j * 2):
            flagged = detect_abnormal(x, model, eps)
            assert flagged == (j > eps)

    def test_planted_outliers_flagged(self):
        model, rng = planted_model(seed=14)
        clean = [sample_from(model, rng, 1, noise=0.02) for _ in range(200)]
        scores = [classify(x, model).normality for x in clean]
        eps = calibrate_threshold(scores, 0.99)
        # outliers carry ~10x the residual energy of clean samples
        outliers = [x + rng.normal(scale=0.25, size=12) for x in clean[:50]]
        flags = [detect_abnormal(x, model, eps) for x in outliers]
        assert np.mean(flags) >= 0.90
        clean_flags = [s > eps for s in scores]
        assert np.mean(clean_flags) <= 0.01


class TestCalibrate:
    def test_nearest_rank_basic(self):
        assert calibrate_threshold(list(range(1, 101)), 0.99) == 99

    def test_all_equal(self):
        assert calibrate_threshold([7.0] * 10, 0.5) == 7.0

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            scores = rng.normal(size=int(rng.integers(1, 50))).tolist()
            q = float(rng.uniform(0.01, 1.0))
            assert calibrate_threshold(scores, q) == nearest_rank_quantile_oracle(scores, q)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            calibrate_threshold([], 0.99)
        with pytest.raises(InvalidInputError):
            calibrate_threshold([1.0], 0.0)


class TestKnnBaseline:
    def test_exact_match_k1(self):
        train = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        labels = [2, 1, 3]
        assert knn_baseline(train, labels, train[1], 1)[0] == 1

    def test_k_equals_train_size_gives_majority(self):
        rng = np.random.default_rng(16)
        train = rng.normal(size=(9, 3))
        labels = [1, 1, 1, 1, 2, 2, 2, 3, 3]
        test = rng.normal(size=(4, 3))
        assert np.all(knn_baseline(train, labels, test, 9) == 1)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(17)
        centers = np.array([[0, 0, 0], [6, 0, 0], [0, 6, 0]], dtype=float)
        train = np.vstack([c + rng.normal(size=(20, 3)) for c in centers])
        labels = np.repeat([1, 2, 3], 20)
        test = np.vstack([c + rng.normal(size=(10, 3)) for c in centers])
        ours = knn_baseline(train, labels, test, 5)
        ref = knn_vote_oracle(train, labels, test, 5)
        assert np.array_equal(ours, ref)

    def test_vote_tie_breaks_to_small_id(self):
        train = np.array([[0.0], [2.0]])
        labels = [2, 1]
        # both neighbors vote once; the smaller label id wins
        assert knn_baseline(train, labels, np.array([[1.0]]), 2)[0] == 1

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            knn_baseline(np.zeros((0, 2)), [], np.zeros((1, 2)), 1)
        with pytest.raises(InvalidInputError):
            knn_baseline(np.zeros((3, 2)), [1, 1, 2], np.zeros((1, 2)), 4)


class TestResultsIO:
    def test_jsonl_round_trip(self, tmp_path):
        model, rng = planted_model(seed=18)
        xs = np.vstack([sample_from(model, rng, 1, noise=0.02) for _ in range(3)])
        results = classify(xs, model, epsilon=0.5)
        spans = [(0, 10_000), (10_000, 20_000), (20_000, 30_000)]
        path = tmp_path / "results.jsonl"
        write_results_jsonl(path, results, spans)
        records = read_results_jsonl(path)
        assert len(records) == 3
        assert set(records[0]) == {"start_ms", "end_ms", "label", "label_id",
                                   "scores", "normality", "abnormal"}
        assert records[0]["start_ms"] == 0
        assert records[0]["normality"] == results[0].normality  # exact float round trip
        assert records[0]["label"] == results[0].label.name

    def test_model_labels_default_names(self):
        model, _ = planted_model(seed=19)
        model.label_names = None
        assert [l.name for l in model_labels(model)] == ["class1", "class2"]
