"""File formats: portable graymaps, raw frame stacks, and CSV codecs.

All writers are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import CorruptStreamError, ParameterError
from .stimulus import OFF, ON, EventVolume, FrameSequence

EVENTS_HEADER = "t,x,y,polarity"
MP_HEADER = "t,x,y,value"


# ---------------------------------------------------------------------------
# Portable graymaps (P2 / P5, 8-bit)
# ---------------------------------------------------------------------------

def read_pgm(path) -> np.ndarray:
    """Read an 8-bit PGM (P2 or P5) into an (H, W) uint8 array."""
    raw = Path(path).read_bytes()
    # Strip comments, then tokenize the header.
    pos = 0
    tokens = []
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(raw, pos)
        if m is None:
            raise CorruptStreamError(f"{path}: truncated PGM header")
        pos = m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval <= 0 or maxval > 255:
        raise CorruptStreamError(f"{path}: only 8-bit graymaps supported")
    if magic == b"P5":
        data = np.frombuffer(raw, dtype=np.uint8, count=h * w, offset=pos + 1)
        if data.size != h * w:
            raise CorruptStreamError(f"{path}: truncated P5 payload")
        return data.reshape(h, w).copy()
    if magic == b"P2":
        values = raw[pos:].split()
        if len(values) < h * w:
            raise CorruptStreamError(f"{path}: truncated P2 payload")
        return np.array(values[:h * w], dtype=np.uint8).reshape(h, w)
    raise CorruptStreamError(f"{path}: not a PGM file (magic {magic!r})")


def write_pgm(path, image: np.ndarray) -> None:
    """Write an (H, W) uint8 array as a binary (P5) PGM."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ParameterError("PGM image must be 2-D")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


# ---------------------------------------------------------------------------
# Raw frame stacks: ASCII "H W T" header line, then T row-major uint8 frames
# ---------------------------------------------------------------------------

def read_raw_frames(path, fps: float = 60.0) -> FrameSequence:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CorruptStreamError(f"{path}: missing raw-frame header line")
    try:
        h, w, t = (int(v) for v in raw[:nl].split())
    except ValueError as exc:
        raise CorruptStreamError(f"{path}: bad raw-frame header") from exc
    body = np.frombuffer(raw, dtype=np.uint8, offset=nl + 1)
    if body.size != h * w * t:
        raise CorruptStreamError(
            f"{path}: expected {h * w * t} payload bytes, got {body.size}")
    return FrameSequence(body.reshape(t, h, w).copy(), fps)


def write_raw_frames(path, seq: FrameSequence) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{seq.height} {seq.width} {seq.n_frames}\n".encode("ascii"))
        fh.write(seq.frames.tobytes())


def load_frame_sequence(path, fps: float = 60.0) -> FrameSequence:
    """Load frames from a directory of numbered PGMs or a raw .bin stack."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.pgm"), key=_numeric_key)
        if not files:
            raise ParameterError(f"{path}: no .pgm files found")
        frames = np.stack([read_pgm(f) for f in files])
        return FrameSequence(frames, fps)
    if p.is_file():
        return read_raw_frames(p, fps)
    raise FileNotFoundError(f"{path}: no such file or directory")


def _numeric_key(path: Path):
    m = re.search(r"(\d+)", path.stem)
    return (int(m.group(1)) if m else -1, path.name)


# ---------------------------------------------------------------------------
# Event CSV: "t,x,y,polarity" with polarity in {+1, -1}, sorted (t, y, x)
# ---------------------------------------------------------------------------

def write_events_csv(path, events: EventVolume) -> None:
    records = []
    for pol_idx, pol in ((ON, 1), (OFF, -1)):
        ts, xs, ys = np.nonzero(events.data[:, pol_idx])
        records.extend(zip(ts.tolist(), xs.tolist(), ys.tolist(),
                           [pol] * ts.size))
    records.sort(key=lambda r: (r[0], r[2], r[1]))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(EVENTS_HEADER + "\n")
        for t, x, y, pol in records:
            fh.write(f"{t},{x},{y},{pol}\n")


def read_events_csv(path) -> list[tuple[int, int, int, int]]:
    """Read event records (t, x, y, polarity); polarity is +1 or -1."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line == EVENTS_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise CorruptStreamError(f"{path}:{lineno}: expected 4 fields")
            try:
                t, x, y, pol = (int(v) for v in parts)
            except ValueError as exc:
                raise CorruptStreamError(
                    f"{path}:{lineno}: non-integer field") from exc
            if pol not in (1, -1):
                raise CorruptStreamError(
                    f"{path}:{lineno}: polarity must be +1 or -1, got {pol}")
            if t < 0 or x < 0 or y < 0:
                raise CorruptStreamError(f"{path}:{lineno}: negative index")
            records.append((t, x, y, pol))
    return records


def events_from_records(records, t_bins: int | None = None,
                        height: int | None = None, width: int | None = None,
                        bin_duration: float = 1.0 / 60.0) -> EventVolume:
    """Build an EventVolume from (t, x, y, polarity) records.

    Dimensions default to the smallest volume containing every record.
    """
    if not records and (t_bins is None or height is None or width is None):
        raise ParameterError("cannot infer dimensions from an empty record list")
    t_bins = t_bins if t_bins is not None else max(r[0] for r in records) + 1
    height = height if height is not None else max(r[1] for r in records) + 1
    width = width if width is not None else max(r[2] for r in records) + 1
    data = np.zeros((t_bins, 2, height, width), dtype=np.uint8)
    for t, x, y, pol in records:
        if t >= t_bins or x >= height or y >= width:
            raise CorruptStreamError(
                f"event ({t},{x},{y}) outside volume ({t_bins},{height},{width})")
        data[t, ON if pol == 1 else OFF, x, y] = 1
    return EventVolume(data, bin_duration)


# ---------------------------------------------------------------------------
# Motion-prediction output CSV and heatmap rendering
# ---------------------------------------------------------------------------

def write_mp_csv(path, data: np.ndarray) -> None:
    """Write a (T, kx, ky) tensor as t,x,y,value rows sorted by (t, x, y)."""
    data = np.asarray(data)
    t_bins, kx, ky = data.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MP_HEADER + "\n")
        for t in range(t_bins):
            for x in range(kx):
                for y in range(ky):
                    fh.write(f"{t},{x},{y},{data[t, x, y]!r}\n")


def read_mp_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line == MP_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise CorruptStreamError(f"{path}:{lineno}: expected 4 fields")
            rows.append((int(parts[0]), int(parts[1]), int(parts[2]),
                         float(parts[3])))
    if not rows:
        raise CorruptStreamError(f"{path}: no data rows")
    t_bins = max(r[0] for r in rows) + 1
    kx = max(r[1] for r in rows) + 1
    ky = max(r[2] for r in rows) + 1
    data = np.zeros((t_bins, kx, ky))
    for t, x, y, v in rows:
        data[t, x, y] = v
    return data


def render_heatmaps(out_dir, stem: str, data: np.ndarray) -> tuple[float, float]:
    """Render each bin of a (T, kx, ky) tensor to an 8-bit PGM heatmap.

    A single min-max scale is used for the whole sequence so brightness is
    comparable across bins; the bounds land in ``<stem>_scale.txt``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=np.float64)
    lo = float(data.min())
    hi = float(data.max())
    span = hi - lo
    for t in range(data.shape[0]):
        if span > 0:
            img = np.rint((data[t] - lo) / span * 255.0).astype(np.uint8)
        else:
            img = np.zeros(data.shape[1:], dtype=np.uint8)
        write_pgm(out_dir / f"{stem}_{t:04d}.pgm", img)
    with open(out_dir / f"{stem}_scale.txt", "w", encoding="ascii",
              newline="\n") as fh:
        fh.write(f"min={lo!r}\nmax={hi!r}\n")
    return lo, hi
