"""Transcription metrics: tolerance-based one-to-one note matching and
precision / recall / F1.

A reference note and an estimated note are compatible when their pitches
agree within the cent tolerance (optionally modulo the octave) and, unless
running in notes-only mode, their onsets agree within the onset tolerance.
TP is the size of a maximum-cardinality matching over that relation, so a
reference can never be claimed by more than one estimate: of N estimates
crowding one reference, one is a true positive and N-1 are false positives.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import NoteSequence


@dataclass(frozen=True)
class EvalConfig:
    onset_tol_s: float = 0.05
    pitch_tol_cents: float = 1.0
    octave_invariant: bool = False
    use_onsets: bool = True  # False = notes-only mode (pitch compatibility alone)
    use_offsets: bool = False

    def __post_init__(self):
        if self.onset_tol_s < 0 or self.pitch_tol_cents < 0:
            raise ValueError("tolerances must be non-negative")
        if self.use_offsets:
            raise ValueError("offset-aware scoring is not supported")


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "EvalReport":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        return cls(tp, fp, fn, precision, recall, f1)


def pitch_match(ref_midi: int, est_midi: int, cfg: EvalConfig = EvalConfig()) -> bool:
    """Pitch compatibility in cents; octave-invariant mode compares modulo 12."""
    if cfg.octave_invariant:
        ref_midi, est_midi = ref_midi % 12, est_midi % 12
    return abs(ref_midi - est_midi) * 100.0 <= cfg.pitch_tol_cents


def _compatible(ref, est, cfg: EvalConfig) -> bool:
    if not pitch_match(ref.pitch, est.pitch, cfg):
        return False
    if cfg.use_onsets and abs(ref.onset_s - est.onset_s) > cfg.onset_tol_s:
        return False
    return True


def match_notes(
    ref: NoteSequence, est: NoteSequence, cfg: EvalConfig = EvalConfig()
) -> set[tuple[int, int]]:
    """Maximum-cardinality one-to-one matching of compatible (ref, est) pairs.

    Kuhn's augmenting-path algorithm; deterministic given input order.
    """
    adj = [
        [j for j, e in enumerate(est.notes) if _compatible(r, e, cfg)]
        for r in ref.notes
    ]
    matched_est = [-1] * len(est.notes)

    def augment(i: int, seen: list[bool]) -> bool:
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                if matched_est[j] < 0 or augment(matched_est[j], seen):
                    matched_est[j] = i
                    return True
        return False

    for i in range(len(ref.notes)):
        augment(i, [False] * len(est.notes))
    return {(i, j) for j, i in enumerate(matched_est) if i >= 0}


def evaluate(ref: NoteSequence, est: NoteSequence, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Precision / recall / F1 from the maximum matching counts."""
    tp = len(match_notes(ref, est, cfg))
    return EvalReport.from_counts(tp, len(est.notes) - tp, len(ref.notes) - tp)


def evaluate_corpus(
    pairs: list[tuple[NoteSequence, NoteSequence]], cfg: EvalConfig = EvalConfig()
) -> EvalReport:
    """Micro-average: sum TP/FP/FN over files, then apply the P/R/F1 formulas."""
    tp = fp = fn = 0
    for ref, est in pairs:
        report = evaluate(ref, est, cfg)
        tp, fp, fn = tp + report.tp, fp + report.fp, fn + report.fn
    return EvalReport.from_counts(tp, fp, fn)


def macro_average(reports: list[EvalReport]) -> tuple[float, float, float]:
    """Mean per-file precision / recall / F1, reported alongside the micro
    numbers as a diagnostic."""
    if not reports:
        return 0.0, 0.0, 0.0
    n = len(reports)
    return (
        sum(r.precision for r in reports) / n,
        sum(r.recall for r in reports) / n,
        sum(r.f1 for r in reports) / n,
    )
