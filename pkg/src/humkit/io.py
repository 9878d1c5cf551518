"""Serialization: WAV, standard MIDI files, note-list JSON, corrected
onset/offset text files, and the AFF1 affinity-matrix binary format.

All readers raise typed errors on malformed input; all writers go through
a temp file and an atomic rename so a failure never leaves partial output.

AFF1 layout (little-endian, normative):
    magic    4 bytes  "AFF1"
    version  u32      1
    L        u32      class count including the dummy row
    T        u32      frame count
    hop_s    f32      seconds per frame
    t0_s     f32      time of frame 0
    lowest_midi u32   MIDI number of class index 0
    reserved 8 bytes  zeros
followed by L*T float32 values, row-major (row = class, column = frame).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import FrameGrid, NoteClassMap, NoteEvent, NoteSequence
from .dsp import Waveform
from .salience import AffinityMatrix


class FormatError(ValueError):
    """A file did not conform to its expected format."""


class WavFormatError(FormatError):
    """Malformed RIFF/WAVE structure."""


class UnsupportedWavEncodingError(WavFormatError):
    """Structurally valid WAV whose sample encoding is not supported."""


class MidiFormatError(FormatError):
    """Malformed or unsupported standard MIDI file content."""


class AffinityFormatError(FormatError):
    """Malformed AFF1 file."""


def _atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text through a temp file + rename; no partial file on error."""
    _atomic_write_bytes(path, text.encode())


# --- WAV --------------------------------------------------------------------

_WAVE_PCM = 1
_WAVE_IEEE_FLOAT = 3
_WAVE_EXTENSIBLE = 0xFFFE


def read_wav(path: str | Path) -> Waveform:
    """Read a PCM-16 or float-32 WAV; channels are averaged down to mono.

    Integer samples are scaled by 1/32768 so full-scale +32767 maps to
    32767/32768.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"{path}: truncated {cid!r} chunk")
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError(f"{path}: fmt chunk too short ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _WAVE_EXTENSIBLE:
                if size < 40:
                    raise WavFormatError(f"{path}: extensible fmt chunk too short")
                (sub,) = struct.unpack_from("<H", body, 24)
                fmt = (sub, *fmt[1:])
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise WavFormatError(f"{path}: missing data chunk")
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1 or sample_rate <= 0:
        raise WavFormatError(f"{path}: invalid channel count or sample rate")

    if audio_format == _WAVE_PCM and bits == 16:
        if len(payload) % 2:
            raise WavFormatError(f"{path}: data size is not a whole number of samples")
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == _WAVE_IEEE_FLOAT and bits == 32:
        if len(payload) % 4:
            raise WavFormatError(f"{path}: data size is not a whole number of samples")
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavEncodingError(
            f"{path}: unsupported encoding (format {audio_format}, {bits}-bit); "
            "only 16-bit PCM and 32-bit float are supported"
        )

    if len(samples) % n_channels:
        raise WavFormatError(f"{path}: data size is not a whole number of frames")
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples, int(sample_rate))


def write_wav(signal: Waveform, path: str | Path, encoding: str = "pcm16") -> None:
    """Write mono WAV as 16-bit PCM (default) or 32-bit float."""
    if encoding == "pcm16":
        ints = np.clip(np.round(signal.samples * 32768.0), -32768, 32767)
        frames = ints.astype("<i2").tobytes()
        fmt_code, bits = _WAVE_PCM, 16
    elif encoding == "float32":
        frames = signal.samples.astype("<f4").tobytes()
        fmt_code, bits = _WAVE_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")
    block_align = bits // 8
    fmt = struct.pack(
        "<HHIIHH", fmt_code, 1, signal.sample_rate,
        signal.sample_rate * block_align, block_align, bits,
    )
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(frames)) + frames
    _atomic_write_bytes(path, b"RIFF" + struct.pack("<I", len(body)) + body)


# --- standard MIDI files ------------------------------------------------------

_MIDI_PPQ = 480
_MIDI_TEMPO_US = 500_000  # 120 BPM
_MIDI_VELOCITY = 100


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MidiFormatError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiFormatError("variable-length quantity longer than 4 bytes")


def _write_vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def _parse_track(data: bytes):
    """Yield (tick, kind, a, b) where kind is 'on' | 'off' | 'tempo'."""
    pos = 0
    tick = 0
    running = None
    while pos < len(data):
        delta, pos = _read_vlq(data, pos)
        tick += delta
        if pos >= len(data):
            raise MidiFormatError("event truncated after delta time")
        status = data[pos]
        if status == 0xFF:
            if pos + 2 > len(data):
                raise MidiFormatError("truncated meta event")
            meta = data[pos + 1]
            length, pos = _read_vlq(data, pos + 2)
            body = data[pos : pos + length]
            if len(body) < length:
                raise MidiFormatError("truncated meta event body")
            pos += length
            running = None
            if meta == 0x51:
                if length != 3:
                    raise MidiFormatError("set-tempo event must carry 3 bytes")
                yield tick, "tempo", int.from_bytes(body, "big"), 0
            elif meta == 0x2F:
                return
        elif status in (0xF0, 0xF7):
            length, pos = _read_vlq(data, pos + 1)
            if pos + length > len(data):
                raise MidiFormatError("truncated sysex event")
            pos += length
            running = None
        else:
            if status & 0x80:
                pos += 1
                running = status
            elif running is None:
                raise MidiFormatError(f"data byte 0x{status:02x} with no running status")
            else:
                status = running
            kind = status & 0xF0
            n_data = 1 if kind in (0xC0, 0xD0) else 2
            if pos + n_data > len(data):
                raise MidiFormatError("truncated channel event")
            d = data[pos : pos + n_data]
            pos += n_data
            if kind == 0x90 and d[1] > 0:
                yield tick, "on", d[0], d[1]
            elif kind == 0x80 or (kind == 0x90 and d[1] == 0):
                yield tick, "off", d[0], 0
    raise MidiFormatError("track ended without an end-of-track event")


def _ticks_to_seconds(ticks: list[int], tempo_events: list[tuple[int, int]], ppq: int) -> list[float]:
    changes = sorted(tempo_events)
    out = []
    for target in ticks:
        seconds = 0.0
        tempo = _MIDI_TEMPO_US
        tick = 0
        for change_tick, change_tempo in changes:
            if change_tick >= target:
                break
            seconds += (min(change_tick, target) - tick) * tempo / (ppq * 1e6)
            tick, tempo = change_tick, change_tempo
        seconds += (target - tick) * tempo / (ppq * 1e6)
        out.append(seconds)
    return out


def read_midi_notes(path: str | Path) -> NoteSequence:
    """Note events from a format-0/1 SMF, ticks converted through the tempo map.

    Velocity-0 note-ons count as note-offs.  Unmatched note-ons, overlapping
    notes (this is a monophonic pipeline), and SMPTE division are rejected.
    """
    data = Path(path).read_bytes()
    if len(data) < 14 or data[0:4] != b"MThd":
        raise MidiFormatError(f"{path}: missing MThd header")
    hlen, fmt, ntrks, division = struct.unpack_from(">IHHH", data, 4)
    if hlen != 6:
        raise MidiFormatError(f"{path}: MThd length {hlen} != 6")
    if fmt not in (0, 1):
        raise MidiFormatError(f"{path}: unsupported SMF format {fmt}")
    if division & 0x8000:
        raise MidiFormatError(f"{path}: SMPTE time division is not supported")
    if division == 0:
        raise MidiFormatError(f"{path}: zero ticks-per-quarter division")

    pos = 8 + hlen
    events = []
    tempos = []
    tracks_seen = 0
    while tracks_seen < ntrks:
        if pos + 8 > len(data):
            raise MidiFormatError(f"{path}: expected {ntrks} tracks, found {tracks_seen}")
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from(">I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid != b"MTrk":
            raise MidiFormatError(f"{path}: expected MTrk chunk, got {cid!r}")
        if len(body) < size:
            raise MidiFormatError(f"{path}: truncated track chunk")
        pos += 8 + size
        tracks_seen += 1
        try:
            for tick, kind, a, b in _parse_track(body):
                if kind == "tempo":
                    tempos.append((tick, a))
                else:
                    events.append((tick, 0 if kind == "off" else 1, a))
        except MidiFormatError as exc:
            raise MidiFormatError(f"{path}: {exc}") from None

    events.sort(key=lambda e: (e[0], e[1]))  # offs before ons at equal ticks
    open_note: tuple[int, int] | None = None
    spans: list[tuple[int, int, int]] = []
    for tick, is_on, pitch in events:
        if is_on:
            if open_note is not None:
                raise MidiFormatError(
                    f"{path}: overlapping notes at tick {tick} (monophonic input required)"
                )
            open_note = (tick, pitch)
        else:
            if open_note is None or open_note[1] != pitch:
                raise MidiFormatError(f"{path}: note-off without matching note-on at tick {tick}")
            if tick == open_note[0]:
                raise MidiFormatError(f"{path}: zero-length note at tick {tick}")
            spans.append((open_note[0], tick, pitch))
            open_note = None
    if open_note is not None:
        raise MidiFormatError(f"{path}: unmatched note-on for pitch {open_note[1]}")

    ticks = [t for span in spans for t in span[:2]]
    times = _ticks_to_seconds(ticks, tempos, division)
    notes = tuple(
        NoteEvent(times[2 * i], times[2 * i + 1], spans[i][2]) for i in range(len(spans))
    )
    return NoteSequence(notes, source_id=Path(path).stem)


def write_midi_notes(seq: NoteSequence, path: str | Path) -> None:
    """Write a format-0 SMF at 480 PPQ / fixed 120 BPM.

    Times quantize to ticks of 1/960 s, so a read-back round trip agrees
    within one tick.
    """
    ticks_per_second = _MIDI_PPQ * 1e6 / _MIDI_TEMPO_US
    events = []
    for note in seq:
        on = int(round(note.onset_s * ticks_per_second))
        off = int(round(note.offset_s * ticks_per_second))
        events.append((on, 1, note.pitch))
        events.append((off, 0, note.pitch))
    events.sort(key=lambda e: (e[0], e[1]))

    body = bytearray()
    body += _write_vlq(0) + bytes([0xFF, 0x51, 0x03]) + _MIDI_TEMPO_US.to_bytes(3, "big")
    prev = 0
    for tick, is_on, pitch in events:
        body += _write_vlq(tick - prev)
        body += bytes([0x90 if is_on else 0x80, pitch, _MIDI_VELOCITY if is_on else 0])
        prev = tick
    body += _write_vlq(0) + bytes([0xFF, 0x2F, 0x00])

    header = struct.pack(">4sIHHH", b"MThd", 6, 0, 1, _MIDI_PPQ)
    track = b"MTrk" + struct.pack(">I", len(body)) + bytes(body)
    _atomic_write_bytes(path, header + track)


# --- AFF1 affinity matrices ---------------------------------------------------

_AFF1_MAGIC = b"AFF1"
_AFF1_VERSION = 1
_AFF1_HEADER = struct.Struct("<4sIIIffI8s")


def write_affinity(aff: AffinityMatrix, path: str | Path) -> None:
    header = _AFF1_HEADER.pack(
        _AFF1_MAGIC,
        _AFF1_VERSION,
        aff.n_classes,
        aff.n_frames,
        aff.grid.hop_s,
        aff.grid.t0_s,
        aff.class_map.lowest_midi,
        b"\x00" * 8,
    )
    payload = np.ascontiguousarray(aff.log_affinity, dtype="<f4").tobytes()
    _atomic_write_bytes(path, header + payload)


def read_affinity(path: str | Path) -> AffinityMatrix:
    data = Path(path).read_bytes()
    if len(data) < _AFF1_HEADER.size:
        raise AffinityFormatError(f"{path}: shorter than an AFF1 header")
    magic, version, n_classes, n_frames, hop_s, t0_s, lowest_midi, _ = _AFF1_HEADER.unpack_from(
        data, 0
    )
    if magic != _AFF1_MAGIC:
        raise AffinityFormatError(f"{path}: not an AFF1 file")
    if version != _AFF1_VERSION:
        raise AffinityFormatError(f"{path}: unsupported AFF1 version {version}")
    if n_classes < 2 or n_frames < 1:
        raise AffinityFormatError(f"{path}: invalid dimensions {n_classes}x{n_frames}")
    expected = n_classes * n_frames * 4
    got = len(data) - _AFF1_HEADER.size
    if got < expected:
        raise AffinityFormatError(f"{path}: truncated payload ({got} of {expected} bytes)")
    if got > expected:
        raise AffinityFormatError(f"{path}: {got - expected} trailing bytes after payload")
    grid_matrix = np.frombuffer(data, dtype="<f4", offset=_AFF1_HEADER.size).reshape(
        n_classes, n_frames
    )
    try:
        cmap = NoteClassMap(n_pitch_classes=n_classes - 1, lowest_midi=lowest_midi)
        grid = FrameGrid(hop_s=float(hop_s), n_frames=n_frames, t0_s=float(t0_s))
        return AffinityMatrix(grid_matrix.astype(np.float64), cmap, grid)
    except ValueError as exc:
        raise AffinityFormatError(f"{path}: {exc}") from None


# --- note-list JSON -----------------------------------------------------------


def write_notes_json(seq: NoteSequence, path: str | Path) -> None:
    records = [
        {"onset": n.onset_s, "offset": n.offset_s, "midi": n.pitch} for n in seq
    ]
    _atomic_write_bytes(path, json.dumps(records, indent=1).encode())


def read_notes_json(path: str | Path) -> NoteSequence:
    try:
        records = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(records, list):
        raise FormatError(f"{path}: expected a JSON array of notes")
    notes = []
    for i, rec in enumerate(records):
        try:
            notes.append(NoteEvent(float(rec["onset"]), float(rec["offset"]), int(rec["midi"])))
        except (TypeError, KeyError, ValueError) as exc:
            raise FormatError(f"{path}: bad note record {i}: {exc}") from None
    try:
        return NoteSequence(tuple(notes), source_id=Path(path).stem)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# --- corrected-annotation text files ------------------------------------------


def write_onsets_offsets(
    pairs: list[tuple[float, float]],
    path: str | Path,
    as_samples: bool = False,
    sample_rate: int | None = None,
) -> None:
    """One "onset offset" pair per line, in seconds (default) or sample indices."""
    lines = []
    for onset, offset in pairs:
        if as_samples:
            if not sample_rate:
                raise ValueError("sample_rate is required when writing sample indices")
            lines.append(f"{int(round(onset * sample_rate))} {int(round(offset * sample_rate))}\n")
        else:
            lines.append(f"{onset:.6f} {offset:.6f}\n")
    _atomic_write_bytes(path, "".join(lines).encode())


def read_onsets_offsets(path: str | Path) -> list[tuple[float, float]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'onset offset'")
        try:
            pairs.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric onset/offset") from None
    return pairs
