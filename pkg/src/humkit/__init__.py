"""humkit: monophonic humming transcription toolkit.

Pipeline pieces: envelope-based onset/offset correction, constant-Q
features with harmonic stacking, frame-level note affinities, constrained
dynamic-programming note decoding, and tolerance-based transcription
metrics, plus the file formats tying them together.
"""

from .annotate import (
    AnnotationConfig,
    AnnotationResult,
    adjust_onsets_offsets,
    correct_annotation,
    threshold_crossings,
)
from .core import (
    FrameGrid,
    NoteClassMap,
    NoteEvent,
    NoteSequence,
    class_to_midi,
    frame_to_time,
    hz_to_midi,
    midi_to_class,
    midi_to_hz,
)
from .decode import (
    DecodeConfig,
    FramePath,
    best_valid_path,
    clean_path,
    decode,
    path_to_notes,
)
from .dsp import (
    HarmonicStack,
    SpectralFrames,
    Waveform,
    cqt,
    double_envelope,
    harmonic_stack,
    resample,
    waveform_envelope,
)
from .evaluation import (
    EvalConfig,
    EvalReport,
    evaluate,
    evaluate_corpus,
    macro_average,
    match_notes,
    pitch_match,
)
from .salience import (
    AffinityMatrix,
    class_map_for_cqt,
    logits_to_affinity,
    salience_affinity,
)
from .synth import synth_hum

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "AnnotationConfig",
    "AnnotationResult",
    "DecodeConfig",
    "EvalConfig",
    "EvalReport",
    "FrameGrid",
    "FramePath",
    "HarmonicStack",
    "NoteClassMap",
    "NoteEvent",
    "NoteSequence",
    "SpectralFrames",
    "Waveform",
    "adjust_onsets_offsets",
    "best_valid_path",
    "class_map_for_cqt",
    "class_to_midi",
    "clean_path",
    "correct_annotation",
    "cqt",
    "decode",
    "double_envelope",
    "evaluate",
    "evaluate_corpus",
    "frame_to_time",
    "harmonic_stack",
    "hz_to_midi",
    "logits_to_affinity",
    "macro_average",
    "match_notes",
    "midi_to_class",
    "midi_to_hz",
    "path_to_notes",
    "pitch_match",
    "resample",
    "salience_affinity",
    "synth_hum",
    "threshold_crossings",
    "waveform_envelope",
]
