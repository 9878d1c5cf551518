"""Onset/offset correction from the waveform envelope.

The double envelope of |signal| is thresholded at a sweep of fractions of
its min-max span; crossings give candidate note segments, which are then
cleaned (merge tiny gaps, drop tiny notes).  The sweep is supervised only
by the expected note count: the first threshold whose cleaned segment
count matches is accepted, otherwise the sample is rejected.  Thresholds
are relative to the envelope span, so the result is invariant to the
recording's overall level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import DEFAULT_ENVELOPE_PADDING, Waveform, double_envelope

DEFAULT_THRESHOLDS = tuple(round(0.02 * i, 10) for i in range(1, 21))  # 0.02 .. 0.40
DEFAULT_MIN_NOTE_S = 0.05
DEFAULT_MIN_SILENCE_S = 0.03


@dataclass(frozen=True)
class AnnotationConfig:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    min_note_s: float = DEFAULT_MIN_NOTE_S
    min_silence_s: float = DEFAULT_MIN_SILENCE_S
    padding: int = DEFAULT_ENVELOPE_PADDING

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        if not t:
            raise ValueError("need at least one threshold")
        if any(not 0.0 < x < 1.0 for x in t):
            raise ValueError("thresholds must lie strictly inside (0, 1)")
        if any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly ascending")
        if self.min_note_s <= 0:
            raise ValueError("min_note_s must be positive")
        if self.min_silence_s < 0:
            raise ValueError("min_silence_s must be non-negative")
        if self.padding < 1:
            raise ValueError("padding must be >= 1")


@dataclass(frozen=True)
class AnnotationResult:
    accepted: bool
    threshold_used: float | None
    onsets_offsets: tuple[tuple[float, float], ...]
    n_expected: int
    n_detected_per_threshold: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.accepted and len(self.onsets_offsets) != self.n_expected:
            raise ValueError("accepted result must carry exactly n_expected pairs")
        for (o1, f1), (o2, _) in zip(self.onsets_offsets, self.onsets_offsets[1:]):
            if f1 > o2:
                raise ValueError("pairs must be ascending and disjoint")
        if any(o >= f for o, f in self.onsets_offsets):
            raise ValueError("each onset must precede its offset")


def threshold_crossings(envelope: Waveform, absolute_threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Rising/falling crossing indices of envelope > threshold.

    An onset is the index i with env[i] <= thr < env[i+1]; an offset is the
    index i+1 with env[i] > thr >= env[i+1].  A leading onset at 0 or a
    trailing offset at the last index is inserted when the envelope starts
    or ends above threshold, so onsets and offsets always pair up.
    """
    env = envelope.samples
    above = env > absolute_threshold
    onsets = np.flatnonzero(~above[:-1] & above[1:])
    offsets = np.flatnonzero(above[:-1] & ~above[1:]) + 1
    if above[0]:
        onsets = np.concatenate([[0], onsets])
    if above[-1]:
        offsets = np.concatenate([offsets, [len(env) - 1]])
    return onsets, offsets


def adjust_onsets_offsets(
    pairs: list[tuple[float, float]],
    min_note_s: float = DEFAULT_MIN_NOTE_S,
    min_silence_s: float = DEFAULT_MIN_SILENCE_S,
) -> list[tuple[float, float]]:
    """Merge gaps shorter than min_silence_s, then drop notes shorter than
    min_note_s.

    Merging first repairs notes the thresholding split in two; deleting
    first would throw away those fragments.
    """
    for (o1, f1), (o2, _) in zip(pairs, pairs[1:]):
        if f1 > o2 or o1 >= f1:
            raise ValueError("pairs must be ascending and disjoint")
    merged: list[list[float]] = []
    for onset, offset in pairs:
        if merged and onset - merged[-1][1] < min_silence_s:
            merged[-1][1] = offset
        else:
            merged.append([onset, offset])
    return [(o, f) for o, f in merged if f - o >= min_note_s]


def correct_annotation(
    signal: Waveform, n_expected: int, cfg: AnnotationConfig = AnnotationConfig()
) -> AnnotationResult:
    """Sweep thresholds over the double envelope of |signal| until the
    cleaned segment count matches n_expected.

    Absolute thresholds are env_min + fraction * (env_max - env_min).  The
    first (most inclusive) matching threshold wins; per-threshold counts
    are returned either way for diagnostics.
    """
    if n_expected < 1:
        raise ValueError(f"expected note count must be >= 1, got {n_expected}")
    rectified = Waveform(np.abs(signal.samples), signal.sample_rate)
    env = double_envelope(rectified, cfg.padding)
    env_min = float(env.samples.min())
    env_max = float(env.samples.max())
    span = env_max - env_min

    counts: list[int] = []
    for fraction in cfg.thresholds:
        onsets, offsets = threshold_crossings(env, env_min + fraction * span)
        pairs = [
            (onset / signal.sample_rate, offset / signal.sample_rate)
            for onset, offset in zip(onsets, offsets)
            if offset > onset  # degenerate single-sample segments carry no note
        ]
        cleaned = adjust_onsets_offsets(pairs, cfg.min_note_s, cfg.min_silence_s)
        counts.append(len(cleaned))
        if len(cleaned) == n_expected:
            return AnnotationResult(
                accepted=True,
                threshold_used=fraction,
                onsets_offsets=tuple(cleaned),
                n_expected=n_expected,
                n_detected_per_threshold=tuple(counts),
            )
    return AnnotationResult(
        accepted=False,
        threshold_used=None,
        onsets_offsets=(),
        n_expected=n_expected,
        n_detected_per_threshold=tuple(counts),
    )
