"""CSV and WAV readers/writers for signal matrices.

Signal CSVs hold one column per channel under a ``ch0,ch1,...`` header.
WAV files are 16-bit PCM mono, one file per channel.
"""
from __future__ import annotations

import csv
import json
import wave
from pathlib import Path

import numpy as np

PCM_SCALE = 32767.0


class UnsupportedFormatError(OSError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_signals_csv(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"ch{m}" for m in range(X.shape[0])])
        for col in X.T:
            w.writerow([_fmt(v) for v in col])


def read_signals_csv(path) -> np.ndarray:
    """Read a signal CSV into an (M, T) array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UnsupportedFormatError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body if r], dtype=float)
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        return np.empty((len(header), 0))
    if data.shape[1] != len(header):
        raise UnsupportedFormatError(f"{path}: rows do not match the {len(header)}-column header")
    return data.T.copy()


def write_matrix_csv(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"col{j}" for j in range(A.shape[1])])
        for r in A:
            w.writerow([repr(float(v)) for v in r])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: non-numeric entry ({exc})") from None


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "divergence"])
        for k, d in enumerate(trace):
            w.writerow([k, repr(float(d))])


def write_wav(path, x, rate: int = 8000) -> float:
    """Write one channel as 16-bit PCM, peak-normalized. Returns the peak used."""
    x = np.asarray(x, dtype=float).ravel()
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    scaled = x / peak if peak > 0 else x
    pcm = np.round(np.clip(scaled, -1.0, 1.0) * PCM_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(rate))
        wf.writeframes(pcm.tobytes())
    return peak


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a 16-bit PCM mono WAV into floats in [-1, 1] and its sample rate."""
    try:
        wf = wave.open(str(path), "rb")
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from None
    with wf:
        if wf.getnchannels() != 1 or wf.getsampwidth() != 2:
            raise UnsupportedFormatError(
                f"{path}: need 16-bit PCM mono, got {wf.getnchannels()} channel(s) "
                f"of {8 * wf.getsampwidth()}-bit"
            )
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    x = np.frombuffer(raw, dtype="<i2").astype(float) / PCM_SCALE
    return np.clip(x, -1.0, 1.0), rate


def read_signals(paths) -> tuple[np.ndarray, int | None]:
    """Load a signal matrix from one CSV or from several mono WAV files."""
    paths = [Path(p) for p in paths]
    if len(paths) == 1 and paths[0].suffix.lower() != ".wav":
        return read_signals_csv(paths[0]), None
    chans, rates = [], set()
    for p in paths:
        if p.suffix.lower() != ".wav":
            raise UnsupportedFormatError(f"{p}: mix of WAV and non-WAV inputs")
        x, r = read_wav(p)
        chans.append(x)
        rates.add(r)
    if len({c.size for c in chans}) != 1:
        raise UnsupportedFormatError("WAV inputs have different lengths")
    if len(rates) != 1:
        raise UnsupportedFormatError(f"WAV inputs have different sample rates {sorted(rates)}")
    return np.vstack(chans), rates.pop()


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
