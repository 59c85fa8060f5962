"""File formats: IQ traces, spectrograms, model parameters, CSV, PGM.

All binary formats are little-endian and all writes are atomic
(write to a temp file in the same directory, then rename).
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile

import numpy as np

from .errors import InputError
from .waveform import IqTrace

SPG_MAGIC = b"SPG1"
SPG_HEADER = struct.Struct("<4sIIfffff")  # magic, n_windows, n_freq, cit, hop, f_min, f_max, t0


def atomic_write_bytes(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------- IQ traces

def write_iq(path: str, trace: IqTrace, tags: dict | None = None) -> None:
    """Interleaved float32 (I, Q) pairs plus a `key = value` sidecar at path + '.meta'."""
    inter = np.empty(2 * len(trace), dtype="<f4")
    inter[0::2] = trace.samples.real
    inter[1::2] = trace.samples.imag
    atomic_write_bytes(path, inter.tobytes())
    lines = [
        f"sample_rate = {trace.sample_rate!r}",
        f"t0 = {trace.t0!r}",
        f"count = {len(trace)}",
    ]
    for key, value in sorted((tags or {}).items()):
        if key in ("sample_rate", "t0", "count"):
            raise InputError(f"tag {key!r} collides with a reserved sidecar key")
        lines.append(f"{key} = {value}")
    atomic_write_text(path + ".meta", "\n".join(lines) + "\n")


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def read_sidecar(path: str) -> dict:
    meta = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"malformed sidecar line in {path}: {line!r}")
                key, _, value = line.partition("=")
                meta[key.strip()] = _parse_value(value.strip())
    except OSError as exc:
        raise InputError(f"cannot read sidecar {path}: {exc}") from exc
    return meta


def read_iq(path: str) -> tuple[IqTrace, dict]:
    meta = read_sidecar(path + ".meta")
    for key in ("sample_rate", "t0", "count"):
        if key not in meta:
            raise InputError(f"sidecar {path}.meta missing key {key!r}")
    try:
        raw = np.fromfile(path, dtype="<f4")
    except OSError as exc:
        raise InputError(f"cannot read IQ file {path}: {exc}") from exc
    if raw.size != 2 * meta["count"]:
        raise InputError(
            f"IQ file {path} has {raw.size} floats, sidecar count expects {2 * meta['count']}"
        )
    if raw.size == 0:
        raise InputError(f"IQ file {path} is empty")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return IqTrace(samples, float(meta["sample_rate"]), float(meta["t0"])), meta


# ------------------------------------------------------------- spectrograms

def write_spectrogram(path: str, values: np.ndarray, cit: float, hop: float,
                      freqs: np.ndarray, t0: float = 0.0) -> None:
    """Binary spectrogram: 32-byte header then row-major float32 magnitudes."""
    values = np.asarray(values, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != freqs.size:
        raise InputError("spectrogram values must be (n_windows, n_freq) matching freqs")
    header = SPG_HEADER.pack(SPG_MAGIC, values.shape[0], values.shape[1],
                             cit, hop, float(freqs[0]), float(freqs[-1]), t0)
    atomic_write_bytes(path, header + values.astype("<f4").tobytes())


def read_spectrogram(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read spectrogram {path}: {exc}") from exc
    if len(blob) < SPG_HEADER.size:
        raise InputError(f"spectrogram {path} shorter than header")
    magic, n_win, n_freq, cit, hop, f_min, f_max, t0 = SPG_HEADER.unpack_from(blob)
    if magic != SPG_MAGIC:
        raise InputError(f"{path} is not a spectrogram file (bad magic {magic!r})")
    body = np.frombuffer(blob, dtype="<f4", offset=SPG_HEADER.size)
    if body.size != n_win * n_freq:
        raise InputError(f"spectrogram {path} body size mismatch")
    freqs = np.linspace(f_min, f_max, n_freq) if n_freq > 1 else np.array([f_min])
    return {
        "values": body.reshape(n_win, n_freq).astype(np.float64),
        "cit": float(cit), "hop": float(hop), "t0": float(t0),
        "freqs": freqs,
        "times": t0 + np.arange(n_win) * float(hop),
    }


# -------------------------------------------------------------------- images

def write_pgm(path: str, image: np.ndarray) -> None:
    """8-bit binary PGM; input is min-max scaled to 0..255 per image."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise InputError("PGM export needs a 2-D array")
    lo, hi = image.min(), image.max()
    scaled = np.zeros_like(image) if hi <= lo else (image - lo) / (hi - lo)
    pixels = (scaled * 255).round().astype(np.uint8)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + pixels.tobytes())


# ---------------------------------------------------------- model parameters

def save_params(path: str, params: dict[str, np.ndarray]) -> None:
    """Flat little-endian float32 blob + JSON manifest (name, shape, byte offset)."""
    entries = []
    chunks = []
    offset = 0
    for name in sorted(params):
        arr = np.asarray(params[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    atomic_write_bytes(path, b"".join(chunks))
    manifest = {"format": "flat-float32-le", "total_bytes": offset, "entries": entries}
    atomic_write_text(path + ".json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_params(path: str) -> dict[str, np.ndarray]:
    try:
        with open(path + ".json", "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        blob = np.fromfile(path, dtype="<f4")
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load parameters at {path}: {exc}") from exc
    params = {}
    for entry in manifest["entries"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        start = entry["offset"] // 4
        if start + n > blob.size:
            raise InputError(f"parameter blob {path} truncated at {entry['name']}")
        params[entry["name"]] = blob[start:start + n].reshape(shape).astype(np.float64)
    return params


# ---------------------------------------------------------------------- CSV

def write_csv(path: str, header: list[str], rows: list) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def read_csv(path: str) -> tuple[list[str], list[list]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise InputError(f"cannot read CSV {path}: {exc}") from exc
    if not rows:
        raise InputError(f"CSV {path} is empty")
    header, body = rows[0], rows[1:]
    return header, [[_parse_value(cell) for cell in row] for row in body]
