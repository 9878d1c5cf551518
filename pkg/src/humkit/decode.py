"""Dynamic-programming note decoding over an affinity matrix.

A frame-by-frame class assignment (a "path") is valid when it starts and
ends on the dummy class, and a pitched class may only be followed by
itself or the dummy.  Every note boundary therefore passes through the
dummy row, which matches how hummed notes are separated by audible gaps.

The recurrence fills table[r, t] = best score of any valid path prefix
ending at class r in frame t, where a path's score is the sum of its
affinities over frames 1..T-1 (frame 0 is pinned to the dummy class for
all valid paths, so its affinity is a shared constant and is left out).

Tie-breaking is deterministic: a pitched row keeps its own row rather
than re-entering from the dummy, and the dummy row takes the smallest
predecessor row index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameGrid, NoteClassMap, NoteEvent, NoteSequence, class_to_midi, frame_to_time
from .salience import AffinityMatrix

DEFAULT_MIN_NOTE_FRAMES = 5


@dataclass(frozen=True)
class FramePath:
    """One class index per frame; always a valid path (checked on construction)."""

    classes: tuple[int, ...]
    dummy_index: int

    def __post_init__(self):
        c = self.classes
        if not c:
            raise ValueError("a path needs at least one frame")
        d = self.dummy_index
        if c[0] != d or c[-1] != d:
            raise ValueError("paths must start and end on the dummy class")
        if any(not 0 <= x <= d for x in c):
            raise ValueError("class index out of range")
        for cur, nxt in zip(c, c[1:]):
            if cur != d and nxt not in (cur, d):
                raise ValueError(
                    f"invalid transition {cur} -> {nxt}: pitched classes may only "
                    "be followed by themselves or the dummy"
                )

    @property
    def points(self) -> tuple[tuple[int, int], ...]:
        """(frame, class) pairs, one per frame."""
        return tuple(enumerate(self.classes))

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class DecodeConfig:
    """min_note_frames: pitched runs shorter than this are scrubbed to dummy.

    split_on_silence_frames, when set, chunks the matrix at stretches of at
    least that many consecutive dummy-argmax frames and decodes the chunks
    independently; bounds peak memory for very long recordings at a
    negligible cost because the optimal path is on the dummy row there
    anyway.
    """

    min_note_frames: int = DEFAULT_MIN_NOTE_FRAMES
    split_on_silence_frames: int | None = None

    def __post_init__(self):
        if self.min_note_frames < 1:
            raise ValueError("min_note_frames must be >= 1")
        if self.split_on_silence_frames is not None and self.split_on_silence_frames < 1:
            raise ValueError("split_on_silence_frames must be >= 1 when set")


def best_valid_path(aff: AffinityMatrix) -> tuple[FramePath, float]:
    """Maximum-score valid path and its score (the table entry at (dummy, T-1)).

    table[dummy, 0] = 0 and every other row -inf; for t >= 1 a pitched row
    takes the better of staying put or entering from the dummy, while the
    dummy row may be entered from any row.
    """
    a = aff.log_affinity
    n_classes, n_frames = a.shape
    if n_frames < 1:
        raise ValueError("cannot decode an empty affinity matrix")
    dummy = n_classes - 1

    prev = np.full(n_classes, -np.inf)
    prev[dummy] = 0.0
    pred = np.empty((n_frames, n_classes), dtype=np.int32)
    rows = np.arange(dummy)
    for t in range(1, n_frames):
        col = a[:, t]
        stay = prev[:dummy]
        cur = np.empty(n_classes)
        cur[:dummy] = np.maximum(stay, prev[dummy]) + col[:dummy]
        pred[t, :dummy] = np.where(stay >= prev[dummy], rows, dummy)
        best = int(np.argmax(prev))  # smallest index on ties
        cur[dummy] = prev[best] + col[dummy]
        pred[t, dummy] = best
        prev = cur

    classes = np.empty(n_frames, dtype=np.int64)
    r = dummy
    for t in range(n_frames - 1, 0, -1):
        classes[t] = r
        r = pred[t, r]
    classes[0] = r
    return FramePath(tuple(int(c) for c in classes), dummy), float(prev[dummy])


def clean_path(path: FramePath, cfg: DecodeConfig = DecodeConfig()) -> FramePath:
    """Reassign pitched runs shorter than min_note_frames to the dummy class."""
    classes = list(path.classes)
    dummy = path.dummy_index
    for start, end, c in _runs(classes, dummy):
        if end - start < cfg.min_note_frames:
            classes[start:end] = [dummy] * (end - start)
    return FramePath(tuple(classes), dummy)


def _runs(classes, dummy):
    """Maximal pitched runs as (start, end_exclusive, class_index)."""
    out = []
    start = None
    for i, c in enumerate(classes):
        if start is not None and (c == dummy or c != classes[start]):
            out.append((start, i, classes[start]))
            start = None
        if c != dummy and start is None:
            start = i
    if start is not None:
        out.append((start, len(classes), classes[start]))
    return out


def path_to_notes(path: FramePath, class_map: NoteClassMap, grid: FrameGrid) -> NoteSequence:
    """Each maximal pitched run over frames [a, b] becomes a note spanning
    [time(a), time(b+1))."""
    notes = []
    for start, end, c in _runs(path.classes, path.dummy_index):
        notes.append(
            NoteEvent(
                frame_to_time(grid, start),
                frame_to_time(grid, end),  # end < T because paths end on dummy
                class_to_midi(class_map, c),
            )
        )
    return NoteSequence(tuple(notes))


def decode(aff: AffinityMatrix, cfg: DecodeConfig = DecodeConfig()) -> NoteSequence:
    """best_valid_path -> clean_path -> path_to_notes over the whole matrix."""
    if cfg.split_on_silence_frames is None:
        path = clean_path(best_valid_path(aff)[0], cfg)
        return path_to_notes(path, aff.class_map, aff.grid)

    notes: list[NoteEvent] = []
    for start, sub in _silence_chunks(aff, cfg.split_on_silence_frames):
        path = clean_path(best_valid_path(sub)[0], cfg)
        shifted = FrameGrid(
            hop_s=aff.grid.hop_s,
            n_frames=sub.n_frames,
            t0_s=aff.grid.t0_s + start * aff.grid.hop_s,
        )
        notes.extend(path_to_notes(path, aff.class_map, shifted).notes)
    return NoteSequence(tuple(notes))


def _silence_chunks(aff: AffinityMatrix, min_gap: int):
    """Split the matrix at the midpoints of long dummy-argmax stretches."""
    dummy = aff.n_classes - 1
    is_silent = np.argmax(aff.log_affinity, axis=0) == dummy
    cuts = [0]
    run_start = None
    for t in range(aff.n_frames + 1):
        silent = t < aff.n_frames and is_silent[t]
        if silent and run_start is None:
            run_start = t
        elif not silent and run_start is not None:
            if t - run_start >= min_gap and run_start > 0 and t < aff.n_frames:
                cuts.append(run_start + (t - run_start) // 2)
            run_start = None
    cuts.append(aff.n_frames)
    for lo, hi in zip(cuts, cuts[1:]):
        if lo < hi:
            sub = AffinityMatrix(
                aff.log_affinity[:, lo:hi],
                aff.class_map,
                FrameGrid(aff.grid.hop_s, hi - lo, aff.grid.t0_s),
            )
            yield lo, sub
