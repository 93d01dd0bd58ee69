import random

import pytest

from _oracles import oracle_combined, oracle_decontaminate, oracle_jaccard, oracle_lev
from conftest import DE, make_corpus, make_unit
from tmforge.corpus import Corpus
from tmforge.decontam import (
    DecontamConfig,
    NearDuplicateFilter,
    SimilarityVerdict,
    build_ngram_index,
    combined_similarity,
    decontaminate,
    lev_distance,
    lev_similarity,
    ngram_similarity,
    word_ngrams,
)


class TestLevDistance:
    @pytest.mark.parametrize("a,b,d", [
        ("", "abc", 3),
        ("abc", "", 3),
        ("", "", 0),
        ("kitten", "sitting", 3),
        ("abcd", "wxyz", 4),
        ("same", "same", 0),
        ("naïve", "naive", 1),
    ])
    def test_known_values(self, a, b, d):
        assert lev_distance(a, b) == d

    def test_matches_full_dp_oracle(self):
        rng = random.Random(4)
        for _ in range(500):
            a = "".join(rng.choice("abcd ") for _ in range(rng.randint(0, 24)))
            b = "".join(rng.choice("abcd ") for _ in range(rng.randint(0, 24)))
            assert lev_distance(a, b) == oracle_lev(a, b)

    def test_symmetry_and_triangle(self):
        rng = random.Random(5)
        for _ in range(200):
            a, b, c = (
                "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
                for _ in range(3)
            )
            assert lev_distance(a, b) == lev_distance(b, a)
            assert lev_distance(a, c) <= lev_distance(a, b) + lev_distance(b, c)


class TestLevSimilarity:
    def test_identity(self):
        assert lev_similarity("anything at all", "anything at all") == 1.0
        assert lev_similarity("", "") == 1.0

    def test_disjoint(self):
        assert lev_similarity("abcd", "wxyz") == 0.0

    def test_kitten(self):
        assert lev_similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7)


class TestNgramSimilarity:
    def test_identical_six_words(self):
        text = "one two three four five six"
        assert ngram_similarity(text, text, 5) == 1.0

    def test_disjoint_vocabulary(self):
        assert ngram_similarity("a b c d e f", "u v w x y z", 5) == 0.0

    def test_hand_derived_five_gram_case(self):
        a = "the quick brown fox jumps over"
        b = "the quick brown fox leaps over"
        # each side has two 5-grams, none shared
        assert ngram_similarity(a, b, 5) == 0.0

    def test_short_fallback_order(self):
        # both sides below n: effective order = min word count = 2
        assert ngram_similarity("hello big world", "hello big", 5) == pytest.approx(1 / 2)

    def test_empty_rules(self):
        assert ngram_similarity("", "", 5) == 1.0
        assert ngram_similarity("", "words here", 5) == 0.0

    def test_matches_oracle(self):
        rng = random.Random(6)
        vocab = ["aa", "bb", "cc", "dd"]
        for _ in range(400):
            a = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
            b = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
            n = rng.randint(1, 6)
            assert ngram_similarity(a, b, n) == pytest.approx(oracle_jaccard(a, b, n))

    def test_word_ngrams_set(self):
        assert len(word_ngrams("a b c d e f", 5)) == 2


class TestCombinedSimilarity:
    def test_identical(self):
        for combine in ("max", "mean"):
            cfg = DecontamConfig(combine=combine)
            assert combined_similarity("same text here", "same text here", cfg) == 1.0

    def test_max_vs_mean(self):
        cfg_max = DecontamConfig(combine="max")
        cfg_mean = DecontamConfig(combine="mean")
        a, b = "kitten", "sitting"
        lev = 1 - 3 / 7
        assert combined_similarity(a, b, cfg_max) == pytest.approx(lev)
        assert combined_similarity(a, b, cfg_mean) == pytest.approx(lev / 2)

    def test_empty_vs_nonempty(self):
        assert combined_similarity("", "not empty", DecontamConfig()) == 0.0

    def test_range(self):
        rng = random.Random(7)
        for _ in range(300):
            a = " ".join(rng.choice(["x", "yy", "zzz"]) for _ in range(rng.randint(0, 6)))
            b = " ".join(rng.choice(["x", "yy", "zzz"]) for _ in range(rng.randint(0, 6)))
            v = combined_similarity(a, b, DecontamConfig())
            assert 0.0 <= v <= 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DecontamConfig(threshold=1.5)
        with pytest.raises(ValueError):
            DecontamConfig(ngram_order=0)
        with pytest.raises(ValueError):
            DecontamConfig(combine="median")


class TestNgramIndex:
    def test_empty_train(self):
        index = build_ngram_index(Corpus([]), 5)
        assert len(index) == 0
        assert index.posting_count() == 0

    def test_shared_gram_maps_to_both(self):
        corpus = make_corpus([
            "alpha beta gamma delta epsilon zeta",
            "alpha beta gamma delta epsilon eta",
        ])
        index = build_ngram_index(corpus, 5)
        key = "\x1f".join(["alpha", "beta", "gamma", "delta", "epsilon"])
        assert list(index.postings[key]) == [0, 1]

    def test_posting_count_equals_distinct_gram_sum(self):
        rng = random.Random(13)
        vocab = [f"w{i}" for i in range(30)]
        sources = [
            " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
            for _ in range(1000)
        ]
        corpus = make_corpus(sources)
        index = build_ngram_index(corpus, 5)
        expected = 0
        for source in sources:
            tokens = source.split()
            grams = {tuple(tokens[i:i + 5]) for i in range(len(tokens) - 4)}
            expected += len(grams)
        assert index.posting_count() == expected


def _corpus_from_sources(sources, prefix):
    return Corpus([make_unit(f"{prefix}{i}", s, {DE: "t"}) for i, s in enumerate(sources)])


class TestDecontaminate:
    def test_exact_duplicate_dropped(self):
        train = _corpus_from_sources(["click the save button now"], "tr")
        test = _corpus_from_sources(["click the save button now", "totally different words"], "te")
        kept, verdicts = decontaminate(test, train)
        assert [u.id for u in kept] == ["te1"]
        dropped = [v for v in verdicts if v.dropped]
        assert len(dropped) == 1
        assert dropped[0].combined == 1.0
        assert dropped[0].best_train_unit_id == "tr0"

    def test_disjoint_test_kept(self):
        train = _corpus_from_sources(["aaaa bbbb cccc dddd eeee"], "tr")
        test = _corpus_from_sources(["zz yy xx ww vv"], "te")
        kept, verdicts = decontaminate(test, train)
        assert len(kept) == 1
        assert not verdicts[0].dropped

    def test_boundary_exactly_threshold_kept(self):
        # lev distance 1 on max length 4: similarity exactly 0.75, which is
        # not strictly over the threshold, so the unit stays
        assert combined_similarity("abcx", "abcd", DecontamConfig()) == pytest.approx(0.75)
        train = _corpus_from_sources(["abcd"], "tr")
        test = _corpus_from_sources(["abcx"], "te")
        kept, verdicts = decontaminate(test, train, DecontamConfig(threshold=0.75))
        assert len(kept) == 1
        assert verdicts[0].dropped is False
        assert verdicts[0].combined <= 0.75

    def test_just_over_threshold_dropped(self):
        # lev distance 1 on max length 5: similarity 0.8 > 0.75
        train = _corpus_from_sources(["abcde"], "tr")
        test = _corpus_from_sources(["abcdx"], "te")
        kept, verdicts = decontaminate(test, train)
        assert len(kept) == 0
        assert verdicts[0].combined == pytest.approx(0.8)

    def test_verdict_consistency(self):
        train = _corpus_from_sources(["one two three four five six seven"], "tr")
        test = _corpus_from_sources(["one two three four five six eight"], "te")
        _, verdicts = decontaminate(test, train)
        v = verdicts[0]
        assert v.combined == pytest.approx(max(v.lev_sim, v.ngram_sim))
        assert v.dropped == (v.combined > 0.75)

    def test_threshold_one_never_drops(self):
        train = _corpus_from_sources(["identical string"], "tr")
        test = _corpus_from_sources(["identical string"], "te")
        kept, _ = decontaminate(test, train, DecontamConfig(threshold=1.0))
        assert len(kept) == 1

    def test_monotone_threshold(self):
        rng = random.Random(17)
        vocab = ["save", "file", "open", "menu", "click"]
        train = _corpus_from_sources(
            [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 6))) for _ in range(40)], "tr")
        test = _corpus_from_sources(
            [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 6))) for _ in range(20)], "te")
        previous_dropped = None
        for threshold in (0.3, 0.5, 0.75, 0.9):
            kept, _ = decontaminate(test, train, DecontamConfig(threshold=threshold))
            dropped = len(test) - len(kept)
            if previous_dropped is not None:
                assert dropped <= previous_dropped
            previous_dropped = dropped

    def test_mismatched_source_language_rejected(self):
        train = _corpus_from_sources(["hello"], "tr")
        bad_unit = make_unit("te0", "hei", {DE: "x"})
        bad_unit = bad_unit.__class__(
            id="te0", source="hei", source_lang=DE, targets={DE: "x"},
            provenance=bad_unit.provenance)
        with pytest.raises(ValueError, match="source language"):
            decontaminate(Corpus([bad_unit]), train)

    def test_verdicts_sorted_by_test_id(self):
        train = _corpus_from_sources(["zzz"], "tr")
        test = Corpus([
            make_unit("te9", "aaa bbb", {DE: "x"}),
            make_unit("te10", "ccc ddd", {DE: "x"}),
        ])
        _, verdicts = decontaminate(test, train)
        assert [v.test_unit_id for v in verdicts] == sorted(v.test_unit_id for v in verdicts)

    def test_verdict_record_shape(self):
        record = SimilarityVerdict("t", "s", 0.5, 0.25, 0.5, False).to_record()
        assert set(record) == {
            "test_unit_id", "best_train_unit_id", "lev_sim", "ngram_sim", "combined", "dropped"
        }


class TestOracleEquivalence:
    """Indexed decontamination must equal the brute-force all-pairs scan."""

    def test_random_corpora(self):
        rng = random.Random(23)
        vocab = ["".join(rng.choice("abcdefgh") for _ in range(rng.randint(2, 7)))
                 for _ in range(60)]
        for trial in range(15):
            threshold = rng.choice([0.75, 0.5, 0.3, 0.9])
            combine = rng.choice(["max", "mean"])
            train_sources = [
                " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 9)))
                for _ in range(rng.randint(5, 80))
            ]
            test_sources = [
                " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 9)))
                for _ in range(rng.randint(3, 30))
            ]
            for _ in range(3):  # plant near-duplicates
                base = rng.choice(train_sources)
                test_sources[rng.randrange(len(test_sources))] = base + " " + rng.choice(vocab)
            train = _corpus_from_sources(train_sources, "tr")
            test = _corpus_from_sources(test_sources, "te")
            cfg = DecontamConfig(threshold=threshold, combine=combine)
            kept, _ = decontaminate(test, train, cfg)
            expected = oracle_decontaminate(
                [(u.id, u.source) for u in test], train_sources, threshold, 5, combine)
            assert {u.id for u in kept} == expected, (trial, threshold, combine)

    def test_verdict_combined_matches_oracle_for_dropped(self):
        rng = random.Random(29)
        train_sources = ["alpha beta gamma delta", "save the file now"]
        test_sources = ["alpha beta gamma delt", "save the file nov", "unrelated thing"]
        train = _corpus_from_sources(train_sources, "tr")
        test = _corpus_from_sources(test_sources, "te")
        kept, verdicts = decontaminate(test, train, DecontamConfig(threshold=0.5))
        for v in verdicts:
            if v.dropped:
                best = max(oracle_combined(
                    dict((u.id, u.source) for u in test)[v.test_unit_id], t)
                    for t in train_sources)
                assert v.combined <= best + 1e-9


class TestNearDuplicateFilterEstimator:
    def test_fit_transform(self):
        train = _corpus_from_sources(["click the save button now"], "tr")
        test = _corpus_from_sources(["click the save button now", "other words"], "te")
        filt = NearDuplicateFilter()
        out = filt.fit(train).transform(test)
        assert [u.id for u in out] == ["te1"]
        assert len(filt.verdicts_) == 2

    def test_get_params(self):
        filt = NearDuplicateFilter(threshold=0.9, combine="mean")
        params = filt.get_params()
        assert params["threshold"] == 0.9
        assert params["combine"] == "mean"

    def test_transform_before_fit_errors(self):
        with pytest.raises(RuntimeError, match="fitted"):
            NearDuplicateFilter().transform(_corpus_from_sources(["x"], "te"))

    def test_threads_param_gives_same_result(self):
        rng = random.Random(41)
        vocab = ["uno", "dos", "tres", "quattro"]
        train = _corpus_from_sources(
            [" ".join(rng.choice(vocab) for _ in range(4)) for _ in range(30)], "tr")
        test = _corpus_from_sources(
            [" ".join(rng.choice(vocab) for _ in range(4)) for _ in range(10)], "te")
        kept1, v1 = decontaminate(test, train, threads=1)
        kept2, v2 = decontaminate(test, train, threads=2)
        assert [u.id for u in kept1] == [u.id for u in kept2]
        assert v1 == v2
