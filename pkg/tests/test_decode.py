import numpy as np
import pytest

from humkit import (
    AffinityMatrix,
    DecodeConfig,
    FrameGrid,
    FramePath,
    NoteClassMap,
    NoteEvent,
    NoteSequence,
    best_valid_path,
    class_map_for_cqt,
    clean_path,
    cqt,
    decode,
    harmonic_stack,
    path_to_notes,
    salience_affinity,
    synth_hum,
)

from conftest import random_hum_sequence
from oracles import brute_best_path, is_valid_path


def aff_from(matrix, lowest_midi=21, hop_s=0.01):
    matrix = np.asarray(matrix, dtype=float)
    cmap = NoteClassMap(n_pitch_classes=matrix.shape[0] - 1, lowest_midi=lowest_midi)
    grid = FrameGrid(hop_s=hop_s, n_frames=matrix.shape[1])
    return AffinityMatrix(matrix, cmap, grid)


PINNED = aff_from(
    [
        [-10.0, 0.0, 0.0, -10.0],
        [-10.0, -10.0, -10.0, -10.0],
        [0.0, -10.0, -10.0, 0.0],
    ]
)


class TestBestValidPath:
    def test_single_frame(self, rng):
        aff = aff_from(rng.normal(size=(4, 1)))
        path, score = best_valid_path(aff)
        assert path.points == ((0, 3),)
        assert score == 0.0

    def test_two_frames_forced(self, rng):
        m = rng.normal(size=(5, 2))
        path, score = best_valid_path(aff_from(m))
        assert path.points == ((0, 4), (1, 4))
        assert score == m[4, 1]

    def test_pinned_case(self):
        path, score = best_valid_path(PINNED)
        assert path.points == ((0, 2), (1, 0), (2, 0), (3, 2))
        assert score == 0.0

    def test_pinned_case_agrees_with_brute_force(self):
        brute_score, brute = brute_best_path(PINNED.log_affinity)
        assert brute_score == 0.0
        assert brute == [2, 0, 0, 2]

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n_classes = int(rng.integers(2, 7))
        n_frames = int(rng.integers(1, 9))
        m = rng.uniform(-5, 5, size=(n_classes, n_frames))
        path, score = best_valid_path(aff_from(m, lowest_midi=40))
        brute_score, _ = brute_best_path(m)
        assert score == brute_score  # same arithmetic, exact
        assert is_valid_path(path.classes, n_classes - 1)

    def test_minus_inf_affinities(self):
        m = np.zeros((3, 4))
        m[0, :] = -np.inf  # class 0 unusable
        path, score = best_valid_path(aff_from(m))
        assert 0 not in path.classes
        assert score == 0.0
        assert is_valid_path(path.classes, 2)

    def test_monotone_invariance(self, rng):
        m = rng.normal(size=(4, 6))
        k = 2.75
        path_a, score_a = best_valid_path(aff_from(m))
        path_b, score_b = best_valid_path(aff_from(m + k))
        assert score_b == pytest.approx(score_a + (6 - 1) * k, rel=1e-12)
        assert path_a.classes == path_b.classes

    def test_uniform_matrix_tie_break(self):
        # all-tie columns: dummy row's argmax predecessor is the smallest
        # row index, so the path runs along pitched row 0 between endpoints
        m = np.zeros((3, 6))
        path, score = best_valid_path(aff_from(m))
        assert path.classes == (2, 0, 0, 0, 0, 2)
        assert score == 0.0

    def test_stay_preferred_over_reentry(self):
        # equal-score alternatives: holding the same pitched row must win
        m = np.zeros((2, 5))
        path, _ = best_valid_path(aff_from(m))
        assert path.classes == (1, 0, 0, 0, 1)


class TestFramePathValidation:
    def test_rejects_bad_endpoints(self):
        with pytest.raises(ValueError):
            FramePath((0, 2), dummy_index=2)
        with pytest.raises(ValueError):
            FramePath((2, 0), dummy_index=2)

    def test_rejects_direct_note_to_note(self):
        with pytest.raises(ValueError):
            FramePath((2, 0, 1, 2), dummy_index=2)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FramePath((), dummy_index=2)

    def test_dummy_to_anything_allowed(self):
        FramePath((2, 1, 2, 0, 0, 2), dummy_index=2)


class TestCleanPath:
    def test_no_pitched_runs_unchanged(self):
        p = FramePath((2, 2, 2), dummy_index=2)
        assert clean_path(p, DecodeConfig(min_note_frames=3)) == p

    def test_short_run_scrubbed(self):
        p = FramePath((9, 5, 5, 9, 9), dummy_index=9)
        cleaned = clean_path(p, DecodeConfig(min_note_frames=3))
        assert cleaned.classes == (9, 9, 9, 9, 9)

    def test_long_run_kept(self):
        classes = (9,) + (5,) * 10 + (9,)
        p = FramePath(classes, dummy_index=9)
        assert clean_path(p, DecodeConfig(min_note_frames=3)).classes == classes

    def test_mixed_runs(self):
        p = FramePath((3, 1, 1, 1, 3, 2, 2, 3), dummy_index=3)
        cleaned = clean_path(p, DecodeConfig(min_note_frames=3))
        assert cleaned.classes == (3, 1, 1, 1, 3, 3, 3, 3)

    @pytest.mark.parametrize("seed", range(10))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(5, 12))
        path, _ = best_valid_path(aff_from(m, lowest_midi=40))
        cfg = DecodeConfig(min_note_frames=int(rng.integers(1, 5)))
        once = clean_path(path, cfg)
        assert clean_path(once, cfg) == once


class TestPathToNotes:
    CMAP = NoteClassMap(n_pitch_classes=2, lowest_midi=21)

    def test_all_dummy(self):
        grid = FrameGrid(hop_s=0.01, n_frames=3)
        seq = path_to_notes(FramePath((2, 2, 2), 2), self.CMAP, grid)
        assert len(seq) == 0

    def test_pinned_example(self):
        grid = FrameGrid(hop_s=0.01, n_frames=4)
        path, _ = best_valid_path(PINNED)
        seq = path_to_notes(path, self.CMAP, grid)
        assert len(seq) == 1
        note = seq.notes[0]
        assert note.onset_s == pytest.approx(0.01)
        assert note.offset_s == pytest.approx(0.03)
        assert note.pitch == 21

    def test_two_runs_monophonic(self):
        grid = FrameGrid(hop_s=0.01, n_frames=8)
        seq = path_to_notes(FramePath((2, 0, 0, 2, 1, 1, 1, 2), 2), self.CMAP, grid)
        assert len(seq) == 2
        assert seq.notes[0].offset_s <= seq.notes[1].onset_s
        assert [n.pitch for n in seq] == [21, 22]


class TestDecode:
    def test_uniform_matrix_decodes_empty(self):
        # every valid path ties; the surviving row-0 run is shorter than
        # min_note_frames, so cleaning scrubs it
        for n_frames in (2, 4, 6):
            aff = aff_from(np.zeros((4, n_frames)))
            assert len(decode(aff, DecodeConfig(min_note_frames=5))) == 0

    def test_pinned_case_one_note(self):
        seq = decode(PINNED, DecodeConfig(min_note_frames=1))
        assert [(n.onset_s, n.offset_s, n.pitch) for n in seq] == [
            (pytest.approx(0.01), pytest.approx(0.03), 21)
        ]

    def test_synthetic_three_note_hum(self):
        seq = random_hum_sequence(np.random.default_rng(5), 3)
        signal = synth_hum(seq, noise_rms=0.002, seed=5)
        cmap = class_map_for_cqt(32.70, 7)
        aff = salience_affinity(harmonic_stack(cqt(signal)), cmap)
        decoded = decode(aff)
        assert [n.pitch for n in decoded] == [n.pitch for n in seq]

    @pytest.mark.parametrize("seed", range(6))
    def test_never_emits_short_notes(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(6, 40))
        cfg = DecodeConfig(min_note_frames=4)
        aff = aff_from(m, lowest_midi=50)
        for note in decode(aff, cfg):
            assert note.duration_s >= 4 * 0.01 - 1e-12

    def test_split_on_silence_matches_unsplit(self):
        seq = random_hum_sequence(np.random.default_rng(9), 4)
        signal = synth_hum(seq, noise_rms=0.002, seed=9)
        cmap = class_map_for_cqt(32.70, 7)
        aff = salience_affinity(harmonic_stack(cqt(signal)), cmap)
        whole = decode(aff)
        chunked = decode(aff, DecodeConfig(split_on_silence_frames=6))
        assert len(whole) == len(chunked) == 4
        assert [n.pitch for n in whole] == [n.pitch for n in chunked]
        for a, b in zip(whole, chunked):
            assert a.onset_s == pytest.approx(b.onset_s, abs=aff.grid.hop_s + 1e-9)
            assert a.offset_s == pytest.approx(b.offset_s, abs=aff.grid.hop_s + 1e-9)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DecodeConfig(min_note_frames=0)
        with pytest.raises(ValueError):
            DecodeConfig(split_on_silence_frames=0)
