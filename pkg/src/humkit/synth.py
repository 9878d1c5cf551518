"""Deterministic synthetic hum rendering.

Each note is a sum of harmonically related sines (hums carry overtones,
not just the fundamental) shaped by linear attack/release ramps, with
silence between notes and optional seeded white noise.  The synthesis
parameters double as exact ground truth in tests.
"""

from __future__ import annotations

import numpy as np

from .core import NoteSequence, midi_to_hz
from .dsp import Waveform

DEFAULT_HARMONIC_AMPS = (1.0, 0.5, 0.25)
DEFAULT_ATTACK_S = 0.02
DEFAULT_RELEASE_S = 0.02
DEFAULT_TAIL_S = 0.1


def synth_hum(
    seq: NoteSequence,
    sample_rate: int = 22050,
    harmonics_amps: tuple[float, ...] = DEFAULT_HARMONIC_AMPS,
    attack_s: float = DEFAULT_ATTACK_S,
    release_s: float = DEFAULT_RELEASE_S,
    noise_rms: float = 0.0,
    seed: int = 0,
    tail_s: float = DEFAULT_TAIL_S,
) -> Waveform:
    """Render a monophonic note sequence to audio.

    Note k with pitch p contributes sum_i harmonics_amps[i] *
    sin(2*pi*(i+1)*f(p)*t) over its interval, f(p) = 440*2^((p-69)/12),
    phase zero at the note's own onset.  Deterministic given all arguments.
    """
    if sample_rate <= 0:
        raise ValueError(f"sample rate must be positive, got {sample_rate}")
    if not harmonics_amps:
        raise ValueError("need at least one harmonic amplitude")
    if attack_s < 0 or release_s < 0 or noise_rms < 0 or tail_s < 0:
        raise ValueError("attack, release, noise, and tail must be non-negative")
    if seq.notes:
        shortest = min(n.duration_s for n in seq)
        if attack_s + release_s >= shortest:
            raise ValueError(
                f"attack+release {attack_s + release_s:.3f}s must be shorter than "
                f"the shortest note ({shortest:.3f}s)"
            )

    end_s = (seq.notes[-1].offset_s if seq.notes else 0.0) + tail_s
    n = int(round(end_s * sample_rate))
    out = np.zeros(n)

    for note in seq:
        i0 = int(round(note.onset_s * sample_rate))
        i1 = min(int(round(note.offset_s * sample_rate)), n)
        if i1 <= i0:
            continue
        t = np.arange(i1 - i0) / sample_rate
        f = midi_to_hz(note.pitch)
        tone = np.zeros(i1 - i0)
        for i, amp in enumerate(harmonics_amps):
            tone += amp * np.sin(2.0 * np.pi * (i + 1) * f * t)
        ramp = np.ones(i1 - i0)
        n_attack = min(int(round(attack_s * sample_rate)), i1 - i0)
        n_release = min(int(round(release_s * sample_rate)), i1 - i0)
        if n_attack > 0:
            ramp[:n_attack] = np.arange(n_attack) / n_attack
        if n_release > 0:
            ramp[i1 - i0 - n_release :] = np.minimum(
                ramp[i1 - i0 - n_release :], np.arange(n_release, 0, -1) / n_release
            )
        out[i0:i1] = tone * ramp

    if noise_rms > 0:
        out += np.random.default_rng(seed).normal(0.0, noise_rms, n)
    return Waveform(out, sample_rate)
