"""Shared domain types for monophonic note transcription.

Times are stored in seconds; frame indices are always derived through a
FrameGrid so nothing else in the package is locked to a hop length.
All types are immutable value objects validated on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class NoteEvent:
    """A single pitched interval: (onset_s, offset_s, MIDI pitch).

    Invariants:
        0 <= onset_s < offset_s
        0 <= pitch <= 127
    """

    onset_s: float
    offset_s: float
    pitch: int

    def __post_init__(self):
        if self.onset_s < 0:
            raise ValueError(f"onset must be non-negative, got {self.onset_s}")
        if not self.onset_s < self.offset_s:
            raise ValueError(
                f"onset must precede offset, got [{self.onset_s}, {self.offset_s}]"
            )
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch must be a MIDI number 0-127, got {self.pitch}")

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class NoteSequence:
    """An ordered, strictly monophonic list of NoteEvents.

    Invariants (checked on construction):
        notes sorted by onset ascending
        no overlap: notes[i].offset_s <= notes[i+1].onset_s
    """

    notes: tuple[NoteEvent, ...]
    source_id: str = ""

    def __post_init__(self):
        notes = tuple(self.notes)
        object.__setattr__(self, "notes", notes)
        for prev, cur in zip(notes, notes[1:]):
            if cur.onset_s < prev.onset_s:
                raise ValueError("notes must be sorted by onset ascending")
            if prev.offset_s > cur.onset_s:
                raise ValueError(
                    f"overlapping notes at {prev.offset_s:.6f}s > {cur.onset_s:.6f}s: "
                    "sequence must be monophonic"
                )

    def __len__(self) -> int:
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)


@dataclass(frozen=True)
class NoteClassMap:
    """Mapping between model class indices and MIDI pitches.

    Class indices 0..n_pitch_classes-1 are pitched (MIDI lowest_midi + c);
    the last index (== n_pitch_classes) is the dummy class marking silence
    and segment boundaries.
    """

    n_pitch_classes: int = 88
    lowest_midi: int = 21

    def __post_init__(self):
        if self.n_pitch_classes < 1:
            raise ValueError("need at least one pitched class")
        top = self.lowest_midi + self.n_pitch_classes - 1
        if not (0 <= self.lowest_midi and top <= 127):
            raise ValueError(
                f"pitched classes span MIDI {self.lowest_midi}..{top}, outside 0..127"
            )

    @property
    def dummy_index(self) -> int:
        return self.n_pitch_classes

    @property
    def n_classes(self) -> int:
        """Total class count including the dummy class."""
        return self.n_pitch_classes + 1


def class_to_midi(cmap: NoteClassMap, c: int) -> int | None:
    """MIDI number for class index c, or None for the dummy (silence) class."""
    if not 0 <= c <= cmap.dummy_index:
        raise ValueError(f"class index {c} beyond dummy index {cmap.dummy_index}")
    if c == cmap.dummy_index:
        return None
    return cmap.lowest_midi + c


def midi_to_class(cmap: NoteClassMap, midi: int) -> int:
    """Class index for a MIDI number inside the map's pitched range."""
    c = midi - cmap.lowest_midi
    if not 0 <= c < cmap.n_pitch_classes:
        raise ValueError(
            f"MIDI {midi} outside mapped range "
            f"{cmap.lowest_midi}..{cmap.lowest_midi + cmap.n_pitch_classes - 1}"
        )
    return c


@dataclass(frozen=True)
class FrameGrid:
    """Affine frame-index / time map: time(t) = t0_s + t * hop_s."""

    hop_s: float
    n_frames: int
    t0_s: float = 0.0

    def __post_init__(self):
        if self.hop_s <= 0:
            raise ValueError(f"hop must be positive, got {self.hop_s}")
        if self.n_frames < 0:
            raise ValueError(f"frame count must be non-negative, got {self.n_frames}")


def frame_to_time(grid: FrameGrid, t: int) -> float:
    """Time in seconds of the center of frame t."""
    if not 0 <= t < grid.n_frames:
        raise ValueError(f"frame index {t} out of range [0, {grid.n_frames})")
    return grid.t0_s + t * grid.hop_s


def midi_to_hz(midi: float) -> float:
    """Equal-tempered frequency, A4 = MIDI 69 = 440 Hz."""
    return 440.0 * 2.0 ** ((midi - 69) / 12.0)


def hz_to_midi(hz: float) -> float:
    """Inverse of midi_to_hz (fractional MIDI)."""
    if hz <= 0:
        raise ValueError(f"frequency must be positive, got {hz}")
    return 69.0 + 12.0 * math.log2(hz / 440.0)
