import numpy as np
import pytest

from riskstudio.errors import (
    BadThreshold,
    DegenerateGroups,
    NoComparablePairs,
    NoUsableSubjects,
    OneClassOnly,
)
from riskstudio.metrics import (
    auroc,
    brier,
    cohens_d,
    concordance_index,
    default_dca_thresholds,
    net_benefit_curve,
    r_squared,
    survival_brier,
)


# -- exhaustive pairwise oracles ----------------------------------------------

def auroc_oracle(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    num, den = 0.0, 0
    for i in np.flatnonzero(labels == 1):
        for j in np.flatnonzero(labels == 0):
            den += 1
            if scores[i] > scores[j]:
                num += 1.0
            elif scores[i] == scores[j]:
                num += 0.5
    return num / den, den


def cindex_oracle(risks, times, events):
    num, den = 0.0, 0
    n = len(risks)
    for i in range(n):
        if events[i] != 1:
            continue
        for j in range(n):
            if times[i] < times[j]:
                den += 1
                if risks[i] > risks[j]:
                    num += 1.0
                elif risks[i] == risks[j]:
                    num += 0.5
    return (num / den if den else None), den


class TestAuroc:
    def test_worked_example(self):
        res = auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert res.value == pytest.approx(0.75, abs=1e-15)
        assert res.n_effective == 4

    def test_perfect_ranking(self):
        assert auroc([1, 2, 3, 4], [0, 0, 1, 1]).value == 1.0

    def test_all_tied_scores(self):
        assert auroc([0.5] * 6, [0, 1, 0, 1, 0, 1]).value == 0.5

    def test_one_class_only(self):
        with pytest.raises(OneClassOnly):
            auroc([0.1, 0.2], [1, 1])

    def test_matches_oracle_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            n = int(rng.integers(4, 50))
            scores = rng.integers(0, 6, size=n) / 5.0  # guaranteed ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            expected, pairs = auroc_oracle(scores, labels)
            res = auroc(scores, labels)
            assert abs(res.value - expected) < 1e-12
            assert res.n_effective == pairs

    def test_rank_invariance(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=30)
        labels = rng.integers(0, 2, size=30)
        labels[0], labels[1] = 0, 1
        base = auroc(scores, labels).value
        assert auroc(np.exp(scores), labels).value == pytest.approx(base, abs=1e-12)
        assert auroc(3 * scores + 7, labels).value == pytest.approx(base, abs=1e-12)

    def test_complement_symmetry_without_ties(self):
        rng = np.random.default_rng(4)
        scores = rng.normal(size=25)
        labels = rng.integers(0, 2, size=25)
        labels[:2] = [0, 1]
        total = auroc(scores, labels).value + auroc(scores, 1 - labels).value
        assert total == pytest.approx(1.0, abs=1e-12)


class TestBrier:
    def test_perfect_forecast(self):
        assert brier([0, 1, 1], [0, 1, 1]).value == 0.0

    def test_constant_half(self):
        assert brier([0.5] * 4, [0, 1, 0, 1]).value == 0.25

    def test_two_term_arithmetic(self):
        assert brier([0.8, 0.3], [1, 0]).value == pytest.approx(0.065, abs=1e-15)

    def test_range_check(self):
        with pytest.raises(ValueError):
            brier([1.2], [1])


class TestConcordance:
    def test_perfect_ordering(self):
        res = concordance_index([3, 2, 1], [1, 2, 3], [1, 1, 1])
        assert res.value == 1.0
        assert res.n_effective == 3

    def test_censored_pair_excluded(self):
        res = concordance_index([0.9, 0.5, 0.2], [2, 4, 6], [1, 0, 1])
        assert res.value == 1.0
        assert res.n_effective == 2

    def test_all_tied_risks(self):
        assert concordance_index([1, 1, 1], [1, 2, 3], [1, 1, 1]).value == 0.5

    def test_no_comparable_pairs(self):
        with pytest.raises(NoComparablePairs):
            concordance_index([1, 2], [5, 5], [1, 1])  # tied times

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n = int(rng.integers(4, 50))
            risks = rng.integers(0, 5, size=n).astype(float)
            times = rng.integers(1, 10, size=n).astype(float)
            events = rng.integers(0, 2, size=n)
            expected, pairs = cindex_oracle(risks, times, events)
            if expected is None:
                continue
            res = concordance_index(risks, times, events)
            assert abs(res.value - expected) < 1e-12
            assert res.n_effective == pairs

    def test_rank_invariance(self):
        rng = np.random.default_rng(5)
        risks = rng.normal(size=30)
        times = rng.exponential(size=30) + 0.1
        events = rng.integers(0, 2, size=30)
        events[0] = 1
        base = concordance_index(risks, times, events).value
        assert concordance_index(np.exp(risks), times, events).value == \
            pytest.approx(base, abs=1e-12)


class TestSurvivalBrier:
    def test_perfect_forecast(self):
        res = survival_brier([1, 1], [1, 2], [1, 1], horizon=5)
        assert res.value == 0.0
        assert res.n_effective == 2

    def test_censored_before_horizon_excluded(self):
        res = survival_brier([0.5, 0.2], [2, 10], [0, 0], horizon=4)
        assert res.n_effective == 1

    def test_reduces_to_brier_without_censoring(self):
        probs = [0.9, 0.2, 0.7]
        times = [1.0, 9.0, 2.0]
        events = [1, 1, 1]
        h = 5.0
        y = [1, 0, 1]
        assert survival_brier(probs, times, events, h).value == \
            pytest.approx(brier(probs, y).value, abs=1e-15)

    def test_all_censored_early(self):
        with pytest.raises(NoUsableSubjects):
            survival_brier([0.5], [1.0], [0], horizon=2.0)


class TestNetBenefit:
    def test_confusion_matrix_example(self):
        # N=100, t=0.5: 10 true positives and 10 false positives at prob >= t
        labels = np.zeros(100)
        labels[:20] = 1
        probs = np.full(100, 0.1)
        probs[:10] = 0.9          # TP at t=0.5
        probs[20:30] = 0.9        # FP at t=0.5
        curve = net_benefit_curve(probs, labels, [0.5])
        assert curve.model_nb[0] == pytest.approx(0.0, abs=1e-15)

    def test_low_threshold_approaches_prevalence(self):
        labels = np.array([1, 1, 0, 0, 0])
        probs = np.array([0.9, 0.8, 0.6, 0.7, 0.55])  # all >= t
        curve = net_benefit_curve(probs, labels, [0.01])
        t = 0.01
        expected = 0.4 - 0.6 * t / (1 - t)
        assert curve.model_nb[0] == pytest.approx(expected, abs=1e-15)
        assert curve.treat_all_nb[0] == pytest.approx(expected, abs=1e-15)

    def test_perfect_classifier_equals_prevalence_everywhere(self):
        labels = np.array([1, 0, 1, 0, 0, 0, 1, 0])
        probs = labels.astype(float)
        ts = default_dca_thresholds()
        curve = net_benefit_curve(probs, labels, ts)
        assert np.allclose(curve.model_nb, labels.mean(), atol=1e-15)

    def test_treat_none_zero_treat_all_closed_form(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        probs = rng.random(50)
        ts = default_dca_thresholds()
        curve = net_benefit_curve(probs, labels, ts)
        assert np.all(curve.treat_none_nb == 0.0)
        p = labels.mean()
        assert np.array_equal(curve.treat_all_nb, p - (1 - p) * (ts / (1 - ts)))

    def test_bad_thresholds(self):
        with pytest.raises(BadThreshold):
            net_benefit_curve([0.5], [1], [0.0, 0.5])
        with pytest.raises(BadThreshold):
            net_benefit_curve([0.5], [1], [0.5, 0.2])


class TestCohensD:
    def test_unit_case(self):
        rng = np.random.default_rng(0)
        x1 = rng.normal(loc=1.0, size=2000)
        x0 = rng.normal(loc=0.0, size=2000)
        d = cohens_d(np.concatenate([x0, x1]),
                     np.concatenate([np.zeros(2000), np.ones(2000)]))
        assert d == pytest.approx(1.0, abs=0.1)

    def test_identical_groups(self):
        vals = np.array([1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
        group = np.array([0, 0, 0, 1, 1, 1])
        assert cohens_d(vals, group) == 0.0

    def test_worked_example(self):
        d = cohens_d([0, 1, 2, 3], [0, 0, 1, 1])
        assert d == pytest.approx(2 / np.sqrt(0.5), abs=1e-12)  # 2.828427...

    def test_degenerate(self):
        with pytest.raises(DegenerateGroups):
            cohens_d([1, 1, 1, 1], [0, 0, 1, 1])
        with pytest.raises(DegenerateGroups):
            cohens_d([1, 2, 3], [0, 0, 1])


class TestRSquared:
    def test_perfect(self):
        assert r_squared([1, 2, 3], [1, 2, 3]).value == 1.0

    def test_mean_prediction_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(np.full(3, y.mean()), y).value == 0.0
