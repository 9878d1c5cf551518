import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humkit import (
    EvalConfig,
    EvalReport,
    NoteEvent,
    NoteSequence,
    evaluate,
    evaluate_corpus,
    macro_average,
    match_notes,
    pitch_match,
)

from oracles import brute_max_matching


def seq(*triples):
    return NoteSequence(tuple(NoteEvent(o, f, p) for o, f, p in triples))


def random_notes(rng, n, onset_spread=1.0):
    onsets = np.sort(rng.uniform(0, onset_spread, size=n))
    notes = []
    t_prev = 0.0
    for onset in onsets:
        onset = max(onset, t_prev + 1e-4)
        offset = onset + 1e-3
        notes.append(NoteEvent(onset, offset, int(rng.integers(50, 62))))
        t_prev = offset
    return NoteSequence(tuple(notes))


class TestPitchMatch:
    def test_identity(self):
        assert pitch_match(60, 60, EvalConfig())

    def test_octave_aware_rejects_octave(self):
        assert not pitch_match(60, 72, EvalConfig(octave_invariant=False))

    def test_octave_invariant_accepts_octave(self):
        assert pitch_match(60, 72, EvalConfig(octave_invariant=True))

    def test_adjacent_semitone_never_matches_at_one_cent(self):
        assert not pitch_match(60, 61, EvalConfig(octave_invariant=True))
        assert not pitch_match(60, 61, EvalConfig(octave_invariant=False))

    def test_wide_tolerance(self):
        assert pitch_match(60, 61, EvalConfig(pitch_tol_cents=100))


class TestMatchNotes:
    def test_identical_sequences(self):
        s = seq((0.0, 0.4, 60), (0.5, 0.9, 62), (1.0, 1.4, 64))
        pairs = match_notes(s, s)
        assert pairs == {(0, 0), (1, 1), (2, 2)}

    def test_multi_estimate_single_reference(self):
        # two estimates inside tolerance of one reference: one TP, one FP
        ref = seq((1.0, 1.5, 60))
        est = seq((1.01, 1.02, 60), (1.03, 1.5, 60))
        report = evaluate(ref, est)
        assert (report.tp, report.fp, report.fn) == (1, 1, 0)

    def test_onset_outside_tolerance(self):
        ref = seq((1.0, 1.5, 60))
        est = seq((1.06, 1.5, 60))
        report = evaluate(ref, est, EvalConfig(onset_tol_s=0.05))
        assert (report.tp, report.fp, report.fn) == (0, 1, 1)

    def test_notes_only_ignores_onsets(self):
        ref = seq((1.0, 1.5, 60))
        est = seq((9.0, 9.5, 60))
        assert evaluate(ref, est, EvalConfig(use_onsets=False)).tp == 1
        assert evaluate(ref, est, EvalConfig(use_onsets=True)).tp == 0

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        cfg = EvalConfig(onset_tol_s=0.15)
        ref = random_notes(rng, int(rng.integers(0, 7)))
        est = random_notes(rng, int(rng.integers(0, 7)))
        pairs = match_notes(ref, est, cfg)
        adj = [
            [
                j
                for j, e in enumerate(est.notes)
                if pitch_match(r.pitch, e.pitch, cfg)
                and abs(r.onset_s - e.onset_s) <= cfg.onset_tol_s
            ]
            for r in ref.notes
        ]
        assert len(pairs) == brute_max_matching(adj, len(est.notes))
        # one-to-one
        assert len({i for i, _ in pairs}) == len(pairs)
        assert len({j for _, j in pairs}) == len(pairs)

    @pytest.mark.parametrize("seed", range(12))
    def test_symmetric_cardinality(self, seed):
        rng = np.random.default_rng(seed)
        cfg = EvalConfig(onset_tol_s=0.2)
        a = random_notes(rng, int(rng.integers(1, 7)))
        b = random_notes(rng, int(rng.integers(1, 7)))
        assert len(match_notes(a, b, cfg)) == len(match_notes(b, a, cfg))


class TestEvaluate:
    def test_perfect(self):
        s = seq((0.0, 0.4, 60), (0.5, 0.9, 62))
        report = evaluate(s, s)
        assert report.precision == report.recall == report.f1 == 1.0

    def test_formulas(self):
        report = EvalReport.from_counts(2, 1, 1)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.f1 == pytest.approx(2 / 3)

    def test_zero_conventions(self):
        ref = seq((0.0, 0.4, 60))
        empty = NoteSequence(())
        report = evaluate(ref, empty)
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)
        report = evaluate(empty, empty)
        assert (report.tp, report.fp, report.fn) == (0, 0, 0)
        assert report.f1 == 0.0

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_bounds_and_octave_dominance(self, seed):
        rng = np.random.default_rng(seed)
        ref = random_notes(rng, int(rng.integers(0, 7)))
        est = random_notes(rng, int(rng.integers(0, 7)))
        aware = evaluate(ref, est, EvalConfig(octave_invariant=False))
        invariant = evaluate(ref, est, EvalConfig(octave_invariant=True))
        assert 0.0 <= aware.f1 <= 1.0
        assert aware.tp <= min(len(ref), len(est))
        assert invariant.f1 >= aware.f1  # invariant compatibility is a superset

    def test_offsets_not_supported(self):
        with pytest.raises(ValueError):
            EvalConfig(use_offsets=True)


class TestCorpus:
    def test_single_pair_equals_evaluate(self):
        ref = seq((0.0, 0.4, 60), (0.5, 0.9, 62))
        est = seq((0.0, 0.4, 60))
        single = evaluate(ref, est)
        corpus = evaluate_corpus([(ref, est)])
        assert (corpus.tp, corpus.fp, corpus.fn) == (single.tp, single.fp, single.fn)

    def test_duplicate_pairs_same_scores(self):
        ref = seq((0.0, 0.4, 60), (0.5, 0.9, 62))
        est = seq((0.0, 0.4, 60))
        one = evaluate_corpus([(ref, est)])
        two = evaluate_corpus([(ref, est), (ref, est)])
        assert two.precision == one.precision
        assert two.recall == one.recall
        assert two.f1 == one.f1

    def test_micro_average_counts(self):
        a_ref = seq((0.0, 0.4, 60))
        a_est = seq((0.0, 0.4, 60))  # TP=1
        b_ref = seq((0.0, 0.4, 60))
        b_est = seq((0.0, 0.4, 62))  # FP=1, FN=1
        corpus = evaluate_corpus([(a_ref, a_est), (b_ref, b_est)])
        assert (corpus.tp, corpus.fp, corpus.fn) == (1, 1, 1)
        assert corpus.precision == corpus.recall == corpus.f1 == 0.5

    def test_macro_average(self):
        reports = [EvalReport.from_counts(1, 0, 0), EvalReport.from_counts(0, 1, 1)]
        assert macro_average(reports) == (0.5, 0.5, 0.5)
        assert macro_average([]) == (0.0, 0.0, 0.0)
