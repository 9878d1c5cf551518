import numpy as np
import pytest

from humkit import NoteEvent, NoteSequence


def random_hum_sequence(
    rng: np.random.Generator,
    n_notes: int,
    pitch_range=(55, 81),
    gap_range=(0.1, 0.25),
    duration_range=(0.25, 0.5),
    lead_in=(0.15, 0.3),
) -> NoteSequence:
    """Random monophonic sequence in a comfortable humming register."""
    t = rng.uniform(*lead_in)
    notes = []
    for _ in range(n_notes):
        duration = rng.uniform(*duration_range)
        pitch = int(rng.integers(pitch_range[0], pitch_range[1] + 1))
        notes.append(NoteEvent(t, t + duration, pitch))
        t += duration + rng.uniform(*gap_range)
    return NoteSequence(tuple(notes))


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
