import pytest

from theme_annotate.errors import ArgumentError, KeyMismatchError
from theme_annotate.evaluation import (
    WordCounts,
    confusion_counts,
    mean_metrics,
    precision_frequency_bins,
)
from theme_annotate.textproc import Vocabulary

from oracles import brute_confusion


def vocab_of(*words):
    return Vocabulary(words=tuple(words))


class TestConfusionCounts:
    def test_single_hit(self):
        table = confusion_counts({"a": {"car"}}, {"a": {"car"}}, vocab_of("car"))
        assert (table["car"].tp, table["car"].fp, table["car"].fn) == (1, 0, 0)

    def test_miss_and_false_alarm(self):
        table = confusion_counts({"a": {"car"}}, {"a": {"sky"}}, vocab_of("car", "sky"))
        assert table["car"].fp == 1 and table["car"].tp == 0
        assert table["sky"].fn == 1

    def test_matches_brute_force_enumeration(self):
        predictions = {
            "a": {"car", "sky"},
            "b": {"sky"},
            "c": {"car", "tree", "sun"},
        }
        truth = {
            "a": {"car"},
            "b": {"sky", "tree"},
            "c": {"sun"},
        }
        vocab = vocab_of("car", "sky", "sun", "tree")
        table = confusion_counts(predictions, truth, vocab)
        expected = brute_confusion(predictions, truth, vocab.words)
        for word in vocab.words:
            assert (table[word].tp, table[word].fp, table[word].fn) == expected[word]

    def test_key_mismatch(self):
        with pytest.raises(KeyMismatchError):
            confusion_counts({"a": set()}, {"b": set()}, vocab_of("car"))

    def test_out_of_vocab_ignored(self):
        table = confusion_counts({"a": {"weird"}}, {"a": {"weird"}}, vocab_of("car"))
        assert table["car"].tp == 0 and "weird" not in table

    def test_additive_over_disjoint_test_sets(self):
        vocab = vocab_of("x", "y")
        pred1, truth1 = {"a": {"x"}}, {"a": {"x", "y"}}
        pred2, truth2 = {"b": {"y"}}, {"b": {"x"}}
        merged = confusion_counts({**pred1, **pred2}, {**truth1, **truth2}, vocab)
        part1 = confusion_counts(pred1, truth1, vocab)
        part2 = confusion_counts(pred2, truth2, vocab)
        for word in vocab.words:
            assert merged[word].tp == part1[word].tp + part2[word].tp
            assert merged[word].fp == part1[word].fp + part2[word].fp
            assert merged[word].fn == part1[word].fn + part2[word].fn

    def test_train_frequency_attached(self):
        table = confusion_counts({"a": set()}, {"a": set()}, vocab_of("car"), {"car": 17})
        assert table["car"].train_frequency == 17


class TestMeanMetrics:
    def test_f_equals_p_when_balanced(self):
        table = {
            "x": WordCounts(tp=3, fp=1, fn=1),
            "y": WordCounts(tp=1, fp=1, fn=1),
        }
        report = mean_metrics(table)
        assert report.mean_precision == report.mean_recall
        assert report.mean_f == pytest.approx(report.mean_precision)

    def test_engineered_percent_rounding(self):
        # Two words whose mean precision is exactly 0.414 and mean recall
        # exactly 0.424; the percent-rounded summary must read 41/42/42.
        table = {
            "even": WordCounts(tp=1, fp=1, fn=1),
            "odd": WordCounts(tp=3567, fp=7308, fn=6683),
        }
        report = mean_metrics(table)
        assert report.mean_precision == pytest.approx(0.414, abs=1e-12)
        assert report.mean_recall == pytest.approx(0.424, abs=1e-12)
        expected_f = 2 * 0.414 * 0.424 / (0.414 + 0.424)
        assert report.mean_f == pytest.approx(expected_f, abs=1e-12)
        rounded = [round(100 * v) for v in (report.mean_precision, report.mean_recall, report.mean_f)]
        assert rounded == [41, 42, 42]

    def test_all_zero_table(self):
        table = {"x": WordCounts(), "y": WordCounts()}
        report = mean_metrics(table)
        assert report.mean_precision == 0.0
        assert report.mean_recall == 0.0
        assert report.mean_f == 0.0
        assert report.n_plus == 0

    def test_n_plus_counts_positive_recall(self):
        table = {
            "hit": WordCounts(tp=1, fn=1),
            "missed": WordCounts(fn=2),
            "unseen": WordCounts(),
        }
        assert mean_metrics(table).n_plus == 1

    def test_f_identity(self):
        table = {
            "x": WordCounts(tp=5, fp=3, fn=2),
            "y": WordCounts(tp=1, fp=4, fn=7),
            "z": WordCounts(tp=2, fp=0, fn=0),
        }
        report = mean_metrics(table)
        p, r = report.mean_precision, report.mean_recall
        assert abs(report.mean_f - 2 * p * r / (p + r)) <= 1e-12

    def test_word_order_invariance(self):
        table = {
            "x": WordCounts(tp=5, fp=3, fn=2),
            "y": WordCounts(tp=1, fp=4, fn=7),
        }
        flipped = dict(reversed(table.items()))
        assert mean_metrics(table).mean_f == mean_metrics(flipped).mean_f

    def test_empty_table_rejected(self):
        with pytest.raises(ArgumentError):
            mean_metrics({})


class TestPrecisionFrequencyBins:
    def test_two_full_bins(self):
        table = {
            f"w{i:02d}": WordCounts(tp=1, fp=0, fn=0, train_frequency=i) for i in range(20)
        }
        bins = precision_frequency_bins(table, bin_size=10)
        assert len(bins) == 2
        assert bins[0][0] == pytest.approx(4.5)
        assert bins[1][0] == pytest.approx(14.5)

    def test_equal_frequencies_share_mean(self):
        table = {
            f"w{i}": WordCounts(tp=1, fp=1, fn=0, train_frequency=7) for i in range(15)
        }
        bins = precision_frequency_bins(table, bin_size=10)
        assert all(freq == 7.0 for freq, _ in bins)

    def test_hand_built_twelve_words(self):
        # 12 words, bin size 10: first bin holds the ten lowest-frequency
        # words, second bin the remaining two.
        table = {}
        freqs = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8]
        precisions = []
        for i, freq in enumerate(freqs):
            tp = i % 3  # precision tp/(tp+fp) with fp = 1
            table[f"w{i:02d}"] = WordCounts(tp=tp, fp=1, fn=0, train_frequency=freq)
            precisions.append(tp / (tp + 1))
        bins = precision_frequency_bins(table, bin_size=10)
        order = sorted(range(12), key=lambda i: (freqs[i], f"w{i:02d}"))
        first, second = order[:10], order[10:]
        assert bins[0][0] == pytest.approx(sum(freqs[i] for i in first) / 10)
        assert bins[0][1] == pytest.approx(sum(precisions[i] for i in first) / 10)
        assert bins[1][0] == pytest.approx(sum(freqs[i] for i in second) / 2)
        assert bins[1][1] == pytest.approx(sum(precisions[i] for i in second) / 2)

    def test_bad_bin_size(self):
        with pytest.raises(ArgumentError):
            precision_frequency_bins({"w": WordCounts()}, bin_size=0)
