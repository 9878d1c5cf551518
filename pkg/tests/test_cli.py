import json

import numpy as np
import pytest

from humkit import NoteEvent, NoteSequence, synth_hum
from humkit.cli import main
from humkit.io import read_affinity, read_notes_json, write_notes_json, write_wav

from conftest import random_hum_sequence


@pytest.fixture
def hum(tmp_path):
    """A 5-note hum on disk plus its reference notes (JSON + notes dir)."""
    seq = random_hum_sequence(np.random.default_rng(123), 5)
    wav_path = tmp_path / "hum.wav"
    write_wav(synth_hum(seq, noise_rms=0.002, seed=1), wav_path, encoding="float32")
    ref_path = tmp_path / "hum.json"
    write_notes_json(seq, ref_path)
    return seq, wav_path, ref_path


def test_synth_roundtrip(tmp_path):
    seq = NoteSequence((NoteEvent(0.1, 0.4, 60), NoteEvent(0.5, 0.9, 67)))
    notes = tmp_path / "notes.json"
    write_notes_json(seq, notes)
    out = tmp_path / "out.wav"
    assert main(["synth", "--notes", str(notes), "-o", str(out)]) == 0
    assert out.exists()


def test_synth_directory_mode(tmp_path):
    src = tmp_path / "notes"
    src.mkdir()
    for i in range(3):
        write_notes_json(
            NoteSequence((NoteEvent(0.1, 0.4, 60 + i),)), src / f"n{i}.json"
        )
    out = tmp_path / "wavs"
    assert main(["synth", "--notes", str(src), "-o", str(out), "--jobs", "2"]) == 0
    assert sorted(p.name for p in out.glob("*.wav")) == ["n0.wav", "n1.wav", "n2.wav"]


def test_features_decode_pipeline(hum, tmp_path):
    seq, wav_path, ref_path = hum
    aff_path = tmp_path / "hum.aff1"
    assert main(["features", "--wav", str(wav_path), "-o", str(aff_path)]) == 0
    aff = read_affinity(aff_path)
    assert aff.n_classes == 85  # 7 octaves of pitched classes + dummy

    est_json = tmp_path / "est.json"
    est_mid = tmp_path / "est.mid"
    assert main(
        ["decode", "--aff", str(aff_path), "-o", str(est_json), "-o", str(est_mid)]
    ) == 0
    decoded = read_notes_json(est_json)
    assert [n.pitch for n in decoded] == [n.pitch for n in seq]
    assert est_mid.exists()


def test_pipeline_command(hum, tmp_path):
    seq, wav_path, ref_path = hum
    out_dir = tmp_path / "out"
    code = main(
        ["pipeline", "--wav", str(wav_path), "--ref", str(ref_path), "-o", str(out_dir)]
    )
    assert code == 0
    decoded = read_notes_json(out_dir / "hum.json")
    assert [n.pitch for n in decoded] == [n.pitch for n in seq]
    assert (out_dir / "hum.aff1").exists()
    assert (out_dir / "hum.mid").exists()
    eval_line = (out_dir / "hum_eval.txt").read_text()
    assert "f1=1.000000" in eval_line


def test_evaluate_ref_equals_est(tmp_path, capsys):
    ref_dir = tmp_path / "ref"
    ref_dir.mkdir()
    for i in range(3):
        seq = random_hum_sequence(np.random.default_rng(i), 4)
        write_notes_json(seq, ref_dir / f"s{i}.json")
    code = main(
        ["evaluate", "--ref", str(ref_dir), "--est", str(ref_dir), "--format", "records"]
    )
    assert code == 0
    out = capsys.readouterr().out
    micro = [line for line in out.splitlines() if "CORPUS(micro)" in line]
    assert len(micro) == 1
    assert "f1=1.000000" in micro[0]
    assert "file=CORPUS(macro)" in out


def test_evaluate_notes_only_flag(tmp_path, capsys):
    ref = NoteSequence((NoteEvent(0.1, 0.4, 60),))
    est = NoteSequence((NoteEvent(3.0, 3.4, 60),))
    write_notes_json(ref, tmp_path / "a_ref.json")
    est_dir = tmp_path / "est"
    est_dir.mkdir()
    write_notes_json(est, est_dir / "a_ref.json")
    main(["evaluate", "--ref", str(tmp_path / "a_ref.json"), "--est", str(est_dir),
          "--format", "records"])
    strict = capsys.readouterr().out
    assert "file=a_ref tp=0" in strict
    main(["evaluate", "--ref", str(tmp_path / "a_ref.json"), "--est", str(est_dir),
          "--notes-only", "--format", "records"])
    loose = capsys.readouterr().out
    assert "file=a_ref tp=1" in loose


def test_annotate_with_counts(hum, tmp_path):
    seq, wav_path, _ = hum
    counts = tmp_path / "counts.txt"
    counts.write_text(f"{wav_path.name} {len(seq)}\n")
    out_dir = tmp_path / "ann"
    code = main(
        ["annotate", "--wav", str(wav_path), "--counts", str(counts), "-o", str(out_dir)]
    )
    assert code == 0
    pairs_file = out_dir / "hum_onsets_offsets.txt"
    assert pairs_file.exists()
    assert len(pairs_file.read_text().splitlines()) == len(seq)
    assert "total accepted 1/1" in (out_dir / "summary.txt").read_text()


def test_annotate_counts_from_midi(hum, tmp_path):
    seq, wav_path, ref_path = hum
    out_dir = tmp_path / "ann2"
    code = main(
        ["annotate", "--wav", str(wav_path), "--counts-from-midi", str(ref_path.parent),
         "-o", str(out_dir)]
    )
    assert code == 0
    assert (out_dir / "hum_onsets_offsets.txt").exists()


def test_annotate_emit_samples(hum, tmp_path):
    seq, wav_path, _ = hum
    counts = tmp_path / "counts.txt"
    counts.write_text(f"hum {len(seq)}\n")
    out_dir = tmp_path / "ann3"
    main(["annotate", "--wav", str(wav_path), "--counts", str(counts),
          "--emit-samples", "-o", str(out_dir)])
    first = (out_dir / "hum_onsets_offsets.txt").read_text().splitlines()[0]
    assert all(field.isdigit() for field in first.split())


def test_exit_codes(tmp_path):
    # unknown flag -> usage error
    assert main(["decode", "--nonsense"]) == 1
    # missing input file -> I/O error
    assert main(["decode", "--aff", str(tmp_path / "missing.aff1"),
                 "-o", str(tmp_path / "x.json")]) == 2
    # malformed aff1 -> format error
    bad = tmp_path / "bad.aff1"
    bad.write_bytes(b"garbage")
    assert main(["decode", "--aff", str(bad), "-o", str(tmp_path / "x.json")]) == 2


def test_exit_code_precondition(tmp_path, hum):
    _, wav_path, _ = hum
    aff_path = tmp_path / "a.aff1"
    main(["features", "--wav", str(wav_path), "-o", str(aff_path)])
    assert main(["decode", "--aff", str(aff_path), "--min-note-frames", "0",
                 "-o", str(tmp_path / "x.json")]) == 3


def test_determinism(hum, tmp_path):
    _, wav_path, _ = hum
    a, b = tmp_path / "a.aff1", tmp_path / "b.aff1"
    assert main(["features", "--wav", str(wav_path), "-o", str(a)]) == 0
    assert main(["features", "--wav", str(wav_path), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_decode_output_format_required(tmp_path, hum):
    _, wav_path, _ = hum
    aff_path = tmp_path / "a.aff1"
    main(["features", "--wav", str(wav_path), "-o", str(aff_path)])
    assert main(["decode", "--aff", str(aff_path), "-o", str(tmp_path / "x.xyz")]) == 1
