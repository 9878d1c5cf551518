"""Signal-level primitives: waveform envelope, constant-Q transform,
harmonic stacking, and resampling.

The envelope follows the min-of-two-sided-sliding-max construction: for
each sample, take the max over the `padding` samples before it and the max
over the `padding` samples starting at it (zero-padded at the edges), then
the min of the two.  Isolated impulses vanish; sustained activity survives.

The CQT is a direct per-bin windowed complex correlation (a filterbank,
not a recursive/downsampling scheme).  It is evaluated through blocked FFT
convolution purely as a fast path; results match the naive per-frame dot
product up to float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FrameGrid

DEFAULT_ENVELOPE_PADDING = 100

DEFAULT_SAMPLE_RATE = 22050
DEFAULT_FMIN_HZ = 32.70  # C1
DEFAULT_BINS_PER_SEMITONE = 3
DEFAULT_N_OCTAVES = 7
DEFAULT_HOP_SAMPLES = 256
DEFAULT_HARMONICS = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono sample buffer with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", _readonly(samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True, eq=False)
class SpectralFrames:
    """CQT magnitude grid, bins along axis 0 and frames along axis 1."""

    magnitudes: np.ndarray
    bins_per_semitone: int
    fmin_hz: float
    grid: FrameGrid

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.ndim != 2:
            raise ValueError(f"magnitudes must be 2-D, got shape {mags.shape}")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("magnitudes must be finite and non-negative")
        if mags.shape[0] % (12 * self.bins_per_semitone) != 0:
            raise ValueError(
                f"{mags.shape[0]} bins is not a whole number of octaves at "
                f"{self.bins_per_semitone} bins/semitone"
            )
        if not isinstance(self.grid, FrameGrid) or self.grid.n_frames != mags.shape[1]:
            raise ValueError("grid does not match the frame axis")
        mags = mags.copy()
        mags.setflags(write=False)
        object.__setattr__(self, "magnitudes", mags)

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[1]


@dataclass(frozen=True, eq=False)
class HarmonicStack:
    """Bin-shifted copies of a CQT grid, one layer per harmonic."""

    layers: np.ndarray  # (n_harmonics, n_bins, n_frames)
    harmonics: tuple[float, ...]
    bins_per_semitone: int
    fmin_hz: float
    grid: FrameGrid

    def __post_init__(self):
        layers = np.asarray(self.layers, dtype=np.float64)
        if layers.ndim != 3 or layers.shape[0] != len(self.harmonics):
            raise ValueError("layers must be (n_harmonics, n_bins, n_frames)")
        layers = layers.copy()
        layers.setflags(write=False)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "harmonics", tuple(float(h) for h in self.harmonics))


def _sliding_max(padded: np.ndarray, width: int, n_out: int, start: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(padded, width)
    return windows[start : start + n_out].max(axis=1)


def waveform_envelope(signal: Waveform, padding: int = DEFAULT_ENVELOPE_PADDING) -> Waveform:
    """Min of the backward and forward sliding maxima of the signal.

    env(i) = min(max(x[i-padding : i]), max(x[i : i+padding])) with zeros
    outside the signal.  Output has the same length and sample rate.
    """
    if padding < 1:
        raise ValueError(f"padding must be >= 1, got {padding}")
    x = signal.samples
    n = len(x)
    if n == 0:
        raise ValueError("cannot compute the envelope of an empty signal")
    padded = np.concatenate([np.zeros(padding), x, np.zeros(padding)])
    max_before = _sliding_max(padded, padding, n, start=0)
    max_after = _sliding_max(padded, padding, n, start=padding)
    return Waveform(np.minimum(max_before, max_after), signal.sample_rate)


def double_envelope(signal: Waveform, padding: int = DEFAULT_ENVELOPE_PADDING) -> Waveform:
    """Envelope of the envelope; hugs sustained activity even tighter."""
    return waveform_envelope(waveform_envelope(signal, padding), padding)


def resample(signal: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampling (identity when rates match).

    No anti-aliasing filter is applied; adequate for envelope/salience use,
    not for high-fidelity downsampling.
    """
    if target_rate <= 0:
        raise ValueError(f"target rate must be positive, got {target_rate}")
    if target_rate == signal.sample_rate:
        return Waveform(signal.samples.copy(), signal.sample_rate)
    n = len(signal)
    m = int(round(n * target_rate / signal.sample_rate))
    positions = np.arange(m) * (signal.sample_rate / target_rate)
    out = np.interp(positions, np.arange(n), signal.samples)
    return Waveform(out, target_rate)


# --- constant-Q transform -------------------------------------------------


def cqt_bin_frequencies(fmin_hz: float, bins_per_semitone: int, n_bins: int) -> np.ndarray:
    """Center frequency of each bin: fmin * 2^(b / (12*bins_per_semitone))."""
    b = np.arange(n_bins)
    return fmin_hz * 2.0 ** (b / (12.0 * bins_per_semitone))


def _cqt_kernels(
    sample_rate: int,
    fmin_hz: float,
    bins_per_semitone: int,
    n_bins: int,
    filter_scale: float,
) -> list[np.ndarray]:
    """Complex correlation kernels, one per bin, normalized by window sum."""
    bins_per_octave = 12 * bins_per_semitone
    q = filter_scale / (2.0 ** (1.0 / bins_per_octave) - 1.0)
    freqs = cqt_bin_frequencies(fmin_hz, bins_per_semitone, n_bins)
    kernels = []
    for f in freqs:
        n_k = max(int(round(q * sample_rate / f)), 4)
        j = np.arange(n_k)
        window = 0.5 - 0.5 * np.cos(2.0 * np.pi * j / (n_k - 1))
        kernel = window * np.exp(-2j * np.pi * f * j / sample_rate)
        kernels.append(kernel / window.sum())
    return kernels


_SPECTRA_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray, int]] = {}
_SPECTRA_CACHE_MAX = 4


def _kernel_spectra(
    sample_rate: int,
    fmin_hz: float,
    bins_per_semitone: int,
    n_bins: int,
    hop_samples: int,
    filter_scale: float,
) -> tuple[np.ndarray, np.ndarray, int]:
    """FFT-domain kernels placed for centered correlation, plus block geometry.

    Returns (spectra[n_bins, L], kernel_lengths[n_bins], margin) where the
    block length L and margin are multiples of the hop.
    """
    key = (sample_rate, fmin_hz, bins_per_semitone, n_bins, hop_samples, filter_scale)
    hit = _SPECTRA_CACHE.get(key)
    if hit is not None:
        return hit
    kernels = _cqt_kernels(sample_rate, fmin_hz, bins_per_semitone, n_bins, filter_scale)
    n_max = max(len(k) for k in kernels)
    margin = int(math.ceil(n_max / hop_samples)) * hop_samples
    length = 1 << int(math.ceil(math.log2(2 * margin + max(16 * hop_samples, 4096))))
    spectra = np.empty((n_bins, length), dtype=np.complex64)
    lengths = np.empty(n_bins, dtype=np.int64)
    buf = np.zeros(length, dtype=np.complex128)
    for b, kern in enumerate(kernels):
        n_k = len(kern)
        center = n_k // 2
        buf[:] = 0
        idx = (center - np.arange(n_k)) % length
        buf[idx] = kern
        spectra[b] = np.fft.fft(buf).astype(np.complex64)
        lengths[b] = n_k
    if len(_SPECTRA_CACHE) >= _SPECTRA_CACHE_MAX:
        _SPECTRA_CACHE.clear()
    _SPECTRA_CACHE[key] = (spectra, lengths, margin)
    return spectra, lengths, margin


def cqt(
    signal: Waveform,
    fmin_hz: float = DEFAULT_FMIN_HZ,
    bins_per_semitone: int = DEFAULT_BINS_PER_SEMITONE,
    n_octaves: int = DEFAULT_N_OCTAVES,
    hop_samples: int = DEFAULT_HOP_SAMPLES,
    filter_scale: float = 1.0,
) -> SpectralFrames:
    """Constant-Q magnitude spectrogram.

    Bin b is a Hann-windowed complex correlation at frequency
    fmin_hz * 2^(b / (12*bins_per_semitone)); frame t is centered on sample
    t*hop_samples (edges zero-padded).  Window length per bin is
    filter_scale * Q periods, so a unit-amplitude sinusoid at a bin center
    yields magnitude ~0.5 there.
    """
    sr = signal.sample_rate
    if fmin_hz <= 0 or n_octaves < 1 or bins_per_semitone < 1:
        raise ValueError("fmin, octave count, and bin density must be positive")
    if fmin_hz * 2.0**n_octaves >= sr / 2:
        raise ValueError(
            f"top of CQT range {fmin_hz * 2.0 ** n_octaves:.1f} Hz reaches the "
            f"Nyquist frequency {sr / 2:.1f} Hz"
        )
    if hop_samples <= 0:
        raise ValueError(f"hop must be positive, got {hop_samples}")
    if filter_scale <= 0:
        raise ValueError(f"filter scale must be positive, got {filter_scale}")

    x = signal.samples
    n = len(x)
    n_bins = 12 * bins_per_semitone * n_octaves
    n_frames = -(-n // hop_samples)  # ceil; frame centers t*hop < n
    spectra, _, margin = _kernel_spectra(
        sr, fmin_hz, bins_per_semitone, n_bins, hop_samples, filter_scale
    )
    length = spectra.shape[1]
    step = length - 2 * margin  # multiple of hop by construction
    fold = length // hop_samples

    mags = np.empty((n_bins, n_frames), dtype=np.float64)
    seg = np.zeros(length, dtype=np.float64)
    first_frame = 0
    while first_frame < n_frames:
        block_start = first_frame * hop_samples  # original position of first valid output
        lo = block_start - margin
        seg[:] = 0
        src_lo, src_hi = max(lo, 0), min(lo + length, n)
        if src_lo < src_hi:
            seg[src_lo - lo : src_hi - lo] = x[src_lo:src_hi]
        x_spec = np.fft.fft(seg).astype(np.complex64)
        frames_here = min(step // hop_samples, n_frames - first_frame)
        m0 = margin // hop_samples
        for c0 in range(0, n_bins, 64):
            c1 = min(c0 + 64, n_bins)
            prod = spectra[c0:c1] * x_spec
            folded = prod.reshape(c1 - c0, hop_samples, fold).sum(axis=1)
            sub = np.fft.ifft(folded, axis=1) * (fold / length)
            mags[c0:c1, first_frame : first_frame + frames_here] = np.abs(
                sub[:, m0 : m0 + frames_here]
            )
        first_frame += frames_here

    grid = FrameGrid(hop_s=hop_samples / sr, n_frames=n_frames, t0_s=0.0)
    return SpectralFrames(mags, bins_per_semitone, fmin_hz, grid)


def harmonic_shift_bins(harmonic: float, bins_per_semitone: int) -> int:
    """Bin offset that moves a harmonic's energy onto the fundamental's row."""
    if harmonic <= 0:
        raise ValueError(f"harmonic must be positive, got {harmonic}")
    return int(round(12 * bins_per_semitone * math.log2(harmonic)))


def harmonic_stack(
    frames: SpectralFrames, harmonics: tuple[float, ...] = DEFAULT_HARMONICS
) -> HarmonicStack:
    """Stack bin-shifted copies of the CQT so overtones align across layers.

    Layer for harmonic h is the grid shifted down by
    round(12*bins_per_semitone*log2(h)) bins, zero-filled out of range, so
    layer_h[b] carries the energy at h times bin b's frequency.
    """
    mags = frames.magnitudes
    n_bins = frames.n_bins
    layers = np.zeros((len(harmonics), n_bins, frames.n_frames), dtype=np.float64)
    for i, h in enumerate(harmonics):
        s = harmonic_shift_bins(h, frames.bins_per_semitone)
        src_lo, src_hi = max(s, 0), min(n_bins + s, n_bins)
        if src_lo < src_hi:
            layers[i, src_lo - s : src_hi - s] = mags[src_lo:src_hi]
    return HarmonicStack(
        layers, tuple(harmonics), frames.bins_per_semitone, frames.fmin_hz, frames.grid
    )
