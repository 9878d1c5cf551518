"""Batch command-line front end.

Subcommands compose the library into the full pipeline:

    annotate   correct onset/offset annotations from waveform envelopes
    features   WAV -> CQT -> harmonic stack -> affinity matrix (AFF1)
    decode     AFF1 -> note events (MIDI and/or JSON)
    evaluate   score estimated notes against references
    synth      render note JSON to WAV
    pipeline   features -> decode -> (optional) evaluate, keeping intermediates

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 precondition
violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as hio
from .annotate import AnnotationConfig, correct_annotation
from .core import NoteSequence
from .decode import DecodeConfig, decode
from .dsp import (
    DEFAULT_BINS_PER_SEMITONE,
    DEFAULT_FMIN_HZ,
    DEFAULT_HARMONICS,
    DEFAULT_HOP_SAMPLES,
    DEFAULT_N_OCTAVES,
    DEFAULT_SAMPLE_RATE,
    cqt,
    harmonic_stack,
    resample,
)
from .evaluation import EvalConfig, EvalReport, evaluate, evaluate_corpus, macro_average
from .salience import (
    DEFAULT_HARMONIC_DECAY,
    DEFAULT_SILENCE_GAIN,
    class_map_for_cqt,
    default_harmonic_weights,
    salience_affinity,
)
from .synth import synth_hum

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PRECONDITION = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _wav_inputs(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.wav"))
        if not files:
            raise FileNotFoundError(f"{path}: no .wav files found")
        return files
    return [path]


def _read_notes(path: Path) -> NoteSequence:
    if path.suffix.lower() == ".json":
        return hio.read_notes_json(path)
    return hio.read_midi_notes(path)


def _note_inputs(path: Path) -> dict[str, Path]:
    if path.is_dir():
        files = {}
        for p in sorted(path.iterdir()):
            if p.suffix.lower() in (".mid", ".midi", ".json"):
                files.setdefault(p.stem, p)
        if not files:
            raise FileNotFoundError(f"{path}: no .mid/.midi/.json files found")
        return files
    return {path.stem: path}


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fmin-hz", type=float, default=DEFAULT_FMIN_HZ)
    p.add_argument("--bins-per-semitone", type=int, default=DEFAULT_BINS_PER_SEMITONE)
    p.add_argument("--octaves", type=int, default=DEFAULT_N_OCTAVES)
    p.add_argument("--hop", type=int, default=DEFAULT_HOP_SAMPLES)
    p.add_argument(
        "--harmonics",
        default=",".join(str(h) for h in DEFAULT_HARMONICS),
        help="comma-separated harmonic ratios for stacking",
    )
    p.add_argument("--target-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--harmonic-decay", type=float, default=DEFAULT_HARMONIC_DECAY)
    p.add_argument("--silence-gain", type=float, default=DEFAULT_SILENCE_GAIN)


def _compute_affinity(wav_path: Path, args):
    signal = hio.read_wav(wav_path)
    if signal.sample_rate != args.target_rate:
        signal = resample(signal, args.target_rate)
    harmonics = tuple(float(h) for h in args.harmonics.split(","))
    frames = cqt(
        signal,
        fmin_hz=args.fmin_hz,
        bins_per_semitone=args.bins_per_semitone,
        n_octaves=args.octaves,
        hop_samples=args.hop,
    )
    stack = harmonic_stack(frames, harmonics)
    cmap = class_map_for_cqt(args.fmin_hz, args.octaves)
    weights = default_harmonic_weights(len(harmonics), args.harmonic_decay)
    return salience_affinity(stack, cmap, weights, args.silence_gain)


def _write_decoded(seq: NoteSequence, out: Path) -> None:
    suffix = out.suffix.lower()
    if suffix in (".mid", ".midi"):
        hio.write_midi_notes(seq, out)
    elif suffix == ".json":
        hio.write_notes_json(seq, out)
    else:
        raise _UsageError(f"cannot infer output format from {out.name!r}; use .mid or .json")


def _format_report(name: str, report: EvalReport, cfg: EvalConfig, style: str) -> str:
    if style == "records":
        return (
            f"file={name} tp={report.tp} fp={report.fp} fn={report.fn} "
            f"precision={report.precision:.6f} recall={report.recall:.6f} "
            f"f1={report.f1:.6f} octave_invariant={int(cfg.octave_invariant)} "
            f"use_onsets={int(cfg.use_onsets)}"
        )
    return (
        f"{name:<32} {report.tp:>5} {report.fp:>5} {report.fn:>5} "
        f"{report.precision:>9.4f} {report.recall:>9.4f} {report.f1:>9.4f}"
    )


def _cmd_annotate(args) -> int:
    wavs = _wav_inputs(Path(args.wav))
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    counts: dict[str, int] = {}
    if args.counts:
        for line in Path(args.counts).read_text().splitlines():
            if line.strip():
                name, count = line.split()
                counts[Path(name).stem] = int(count)
    else:
        for stem, path in _note_inputs(Path(args.counts_from_midi)).items():
            counts[stem] = len(_read_notes(path))

    thresholds = (
        tuple(float(x) for x in args.thresholds.split(","))
        if args.thresholds
        else AnnotationConfig().thresholds
    )
    cfg = AnnotationConfig(
        thresholds=thresholds,
        min_note_s=args.min_note_ms / 1000.0,
        min_silence_s=args.min_silence_ms / 1000.0,
    )

    def process(path: Path):
        if path.stem not in counts:
            return path.stem, None
        signal = hio.read_wav(path)
        result = correct_annotation(signal, counts[path.stem], cfg)
        if result.accepted:
            hio.write_onsets_offsets(
                list(result.onsets_offsets),
                out_dir / f"{path.stem}_onsets_offsets.txt",
                as_samples=args.emit_samples,
                sample_rate=signal.sample_rate,
            )
        return path.stem, result

    results = _map_jobs(process, wavs, args.jobs)
    known = [(stem, r) for stem, r in results if r is not None]
    n_accepted = sum(r.accepted for _, r in known)
    lines = []
    for stem, result in known:
        status = f"accepted threshold={result.threshold_used}" if result.accepted else "rejected"
        lines.append(f"{stem} {status} counts={list(result.n_detected_per_threshold)}\n")
    ratio = n_accepted / len(known) if known else 0.0
    lines.append(f"total accepted {n_accepted}/{len(known)} ({ratio:.1%})\n")
    hio.atomic_write_text(out_dir / "summary.txt", "".join(lines))
    for stem, _ in ((s, r) for s, r in results if r is None):
        print(f"warning: no expected count for {stem}, skipped", file=sys.stderr)
    print(f"accepted {n_accepted}/{len(known)}")
    return EXIT_OK


def _cmd_features(args) -> int:
    aff = _compute_affinity(Path(args.wav), args)
    hio.write_affinity(aff, Path(args.output))
    return EXIT_OK


def _cmd_decode(args) -> int:
    aff = hio.read_affinity(Path(args.aff))
    cfg = DecodeConfig(
        min_note_frames=args.min_note_frames,
        split_on_silence_frames=args.split_silence_frames,
    )
    seq = decode(aff, cfg)
    for out in args.output:
        _write_decoded(seq, Path(out))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = EvalConfig(
        onset_tol_s=args.onset_tol_ms / 1000.0,
        pitch_tol_cents=args.pitch_tol_cents,
        octave_invariant=args.octave_invariant,
        use_onsets=not args.notes_only,
    )
    refs = _note_inputs(Path(args.ref))
    ests = _note_inputs(Path(args.est))
    stems = sorted(refs.keys() & ests.keys())
    if not stems:
        raise FileNotFoundError("no common files between --ref and --est")
    missing = sorted((refs.keys() | ests.keys()) - set(stems))
    for stem in missing:
        print(f"warning: {stem} present on one side only, skipped", file=sys.stderr)

    def load(stem: str):
        return _read_notes(refs[stem]), _read_notes(ests[stem])

    pairs = _map_jobs(load, stems, args.jobs)
    reports = [evaluate(ref, est, cfg) for ref, est in pairs]
    if args.format == "text":
        print(f"{'file':<32} {'tp':>5} {'fp':>5} {'fn':>5} {'precision':>9} {'recall':>9} {'f1':>9}")
    for stem, report in zip(stems, reports):
        print(_format_report(stem, report, cfg, args.format))
    corpus = evaluate_corpus(pairs, cfg)
    print(_format_report("CORPUS(micro)", corpus, cfg, args.format))
    macro_p, macro_r, macro_f1 = macro_average(reports)
    if args.format == "records":
        print(
            f"file=CORPUS(macro) precision={macro_p:.6f} recall={macro_r:.6f} "
            f"f1={macro_f1:.6f} octave_invariant={int(cfg.octave_invariant)} "
            f"use_onsets={int(cfg.use_onsets)}"
        )
    else:
        print(f"{'CORPUS(macro)':<32} {'':>17} {macro_p:>9.4f} {macro_r:>9.4f} {macro_f1:>9.4f}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    notes_path = Path(args.notes)
    out = Path(args.output)
    if notes_path.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        jsons = sorted(notes_path.glob("*.json"))
        if not jsons:
            raise FileNotFoundError(f"{notes_path}: no .json files found")

        def render(p: Path):
            signal = synth_hum(
                hio.read_notes_json(p),
                sample_rate=args.sample_rate,
                noise_rms=args.noise,
                seed=args.seed,
            )
            hio.write_wav(signal, out / f"{p.stem}.wav", encoding=args.encoding)

        _map_jobs(render, jsons, args.jobs)
    else:
        signal = synth_hum(
            hio.read_notes_json(notes_path),
            sample_rate=args.sample_rate,
            noise_rms=args.noise,
            seed=args.seed,
        )
        hio.write_wav(signal, out, encoding=args.encoding)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    wav = Path(args.wav)
    aff = _compute_affinity(wav, args)
    hio.write_affinity(aff, out_dir / f"{wav.stem}.aff1")
    seq = decode(aff, DecodeConfig(min_note_frames=args.min_note_frames))
    hio.write_midi_notes(seq, out_dir / f"{wav.stem}.mid")
    hio.write_notes_json(seq, out_dir / f"{wav.stem}.json")
    print(f"decoded {len(seq)} notes -> {out_dir / (wav.stem + '.json')}")
    if args.ref:
        ref = _read_notes(Path(args.ref))
        cfg = EvalConfig(
            onset_tol_s=args.onset_tol_ms / 1000.0,
            octave_invariant=args.octave_invariant,
        )
        report = evaluate(ref, seq, cfg)
        line = _format_report(wav.stem, report, cfg, "records")
        hio.atomic_write_text(out_dir / f"{wav.stem}_eval.txt", line + "\n")
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="humkit", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    jobs_default = os.cpu_count() or 1

    p = sub.add_parser("annotate", help="correct onset/offset annotations")
    p.add_argument("--wav", required=True, help="input wav file or directory")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--counts", help="text file of 'filename count' lines")
    group.add_argument("--counts-from-midi", help="directory of reference MIDI/JSON files")
    p.add_argument("--thresholds", help="comma-separated ascending fractions in (0,1)")
    p.add_argument("--min-note-ms", type=float, default=50.0)
    p.add_argument("--min-silence-ms", type=float, default=30.0)
    p.add_argument("--emit-samples", action="store_true", help="write sample indices, not seconds")
    p.add_argument("--jobs", type=int, default=jobs_default)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(fn=_cmd_annotate)

    p = sub.add_parser("features", help="WAV to AFF1 affinity matrix")
    p.add_argument("--wav", required=True)
    _add_feature_flags(p)
    p.add_argument("-o", "--output", required=True, help="output .aff1 path")
    p.set_defaults(fn=_cmd_features)

    p = sub.add_parser("decode", help="AFF1 to note events")
    p.add_argument("--aff", required=True)
    p.add_argument("--min-note-frames", type=int, default=DecodeConfig().min_note_frames)
    p.add_argument("--split-silence-frames", type=int, default=None)
    p.add_argument(
        "-o", "--output", required=True, action="append",
        help=".mid or .json output (repeatable)",
    )
    p.set_defaults(fn=_cmd_decode)

    p = sub.add_parser("evaluate", help="score estimated notes against references")
    p.add_argument("--ref", required=True, help="reference file or directory")
    p.add_argument("--est", required=True, help="estimate file or directory")
    p.add_argument("--onset-tol-ms", type=float, default=50.0)
    p.add_argument("--pitch-tol-cents", type=float, default=1.0)
    p.add_argument("--octave-invariant", action="store_true")
    p.add_argument("--notes-only", action="store_true", help="ignore onsets, match pitch only")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--jobs", type=int, default=jobs_default)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("synth", help="render note JSON to WAV")
    p.add_argument("--notes", required=True, help="notes .json file or directory")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--encoding", choices=("pcm16", "float32"), default="float32")
    p.add_argument("--jobs", type=int, default=jobs_default)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("pipeline", help="features -> decode -> evaluate")
    p.add_argument("--wav", required=True)
    _add_feature_flags(p)
    p.add_argument("--min-note-frames", type=int, default=DecodeConfig().min_note_frames)
    p.add_argument("--ref", help="reference notes for evaluation")
    p.add_argument("--onset-tol-ms", type=float, default=50.0)
    p.add_argument("--octave-invariant", action="store_true")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(fn=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (OSError, hio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
