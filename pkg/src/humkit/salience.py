"""Frame-level note affinities from the harmonic-stacked CQT.

This is a deterministic stand-in for a learned per-frame classifier: each
pitched class is scored by harmonically weighted energy at its fundamental
row, the dummy class by how quiet the frame is, and every column is
log-softmax normalized so downstream consumers see comparable log scores
no matter who produced them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameGrid, NoteClassMap, hz_to_midi
from .dsp import HarmonicStack

DEFAULT_HARMONIC_DECAY = 0.9
DEFAULT_SILENCE_GAIN = 1.0


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Log-domain affinity of each class (rows, dummy last) per frame.

    Entries may be -inf but never +inf or NaN, and every column holds at
    least one finite value.
    """

    log_affinity: np.ndarray  # (n_classes, n_frames)
    class_map: NoteClassMap
    grid: FrameGrid

    def __post_init__(self):
        a = np.asarray(self.log_affinity, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"log affinity must be 2-D, got shape {a.shape}")
        if a.shape[0] != self.class_map.n_classes:
            raise ValueError(
                f"{a.shape[0]} rows does not match {self.class_map.n_classes} classes"
            )
        if a.shape[1] != self.grid.n_frames:
            raise ValueError("frame axis does not match the grid")
        if np.any(np.isnan(a)) or np.any(np.isposinf(a)):
            raise ValueError("log affinity must be free of NaN and +inf")
        if a.shape[1] and not np.isfinite(a).any(axis=0).all():
            raise ValueError("every frame needs at least one finite affinity")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "log_affinity", a)

    @property
    def n_classes(self) -> int:
        return self.log_affinity.shape[0]

    @property
    def n_frames(self) -> int:
        return self.log_affinity.shape[1]


def _log_softmax_columns(raw: np.ndarray) -> np.ndarray:
    peak = raw.max(axis=0, keepdims=True)
    shifted = raw - peak
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def default_harmonic_weights(n_harmonics: int, decay: float = DEFAULT_HARMONIC_DECAY) -> np.ndarray:
    """Geometric decay over the harmonic list order."""
    return decay ** np.arange(n_harmonics)


def salience_affinity(
    stack: HarmonicStack,
    class_map: NoteClassMap,
    weights: np.ndarray | None = None,
    silence_gain: float = DEFAULT_SILENCE_GAIN,
) -> AffinityMatrix:
    """Score each note class by stacked energy at its fundamental bin.

    raw(c, t) = sum_h weights[h] * layer_h[bin(c), t] for pitched classes;
    the dummy row gets silence_gain * (1 - rms_t / max_t rms_t) where rms_t
    is the frame's total (unshifted) CQT energy.  Columns are then
    log-softmax normalized.

    Raises ValueError when a class's fundamental falls outside the CQT
    bin range; pick a class map that fits the transform.
    """
    if weights is None:
        weights = default_harmonic_weights(len(stack.harmonics))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(stack.harmonics),):
        raise ValueError(
            f"need one weight per harmonic, got {weights.shape} for {len(stack.harmonics)}"
        )
    if np.any(weights < 0):
        raise ValueError("harmonic weights must be non-negative")

    n_bins = stack.layers.shape[1]
    fmin_midi = int(round(hz_to_midi(stack.fmin_hz)))
    midis = class_map.lowest_midi + np.arange(class_map.n_pitch_classes)
    bins = stack.bins_per_semitone * (midis - fmin_midi)
    if bins.min() < 0 or bins.max() >= n_bins:
        raise ValueError(
            f"class fundamentals span bins {bins.min()}..{bins.max()}, outside the "
            f"CQT range 0..{n_bins - 1}"
        )

    pitched = np.tensordot(weights, stack.layers[:, bins, :], axes=(0, 0))

    try:
        base = stack.layers[stack.harmonics.index(1.0)]
    except ValueError:
        base = stack.layers[0]
    rms = np.sqrt((base**2).sum(axis=0))
    peak = rms.max()
    rms_norm = rms / peak if peak > 0 else np.zeros_like(rms)
    dummy = silence_gain * (1.0 - rms_norm)

    raw = np.vstack([pitched, dummy[None, :]])
    return AffinityMatrix(_log_softmax_columns(raw), class_map, stack.grid)


def logits_to_affinity(raw: np.ndarray, class_map: NoteClassMap, grid: FrameGrid) -> AffinityMatrix:
    """Wrap externally produced per-frame logits as a normalized AffinityMatrix."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != class_map.n_classes:
        raise ValueError(
            f"logits must be ({class_map.n_classes}, n_frames), got {raw.shape}"
        )
    if not np.all(np.isfinite(raw)):
        raise ValueError("logits must be finite")
    return AffinityMatrix(_log_softmax_columns(raw), class_map, grid)


def class_map_for_cqt(fmin_hz: float, n_octaves: int) -> NoteClassMap:
    """Largest class map whose fundamentals all land inside the CQT bins."""
    lowest = int(round(hz_to_midi(fmin_hz)))
    return NoteClassMap(n_pitch_classes=12 * n_octaves, lowest_midi=lowest)
