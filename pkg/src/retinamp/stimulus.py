"""Event-camera front end: frame differencing and synthetic moving stimuli.

Coordinate convention used throughout the package: ``x`` indexes rows (the
H axis) and ``y`` indexes columns (the W axis).  Horizontal motion and
horizontal mirroring therefore act on the last (column) axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptySequenceError, ParameterError, UnsupportedAspectError

# Polarity slots of an EventVolume.
ON = 0   # luminance increase
OFF = 1  # luminance decrease

DIRECTIONS = ("L2R", "R2L", "T2B", "B2T")

DEFAULT_SPIKE_THRESHOLD = 50.0

# Rec.601 luma weights for any color frames that show up.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class FrameSequence:
    """Stack of grayscale frames, shape (n, H, W) uint8, plus capture rate."""

    frames: np.ndarray
    fps: float = 60.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3:
            raise ParameterError(
                f"frames must be a (n, H, W) stack, got ndim={self.frames.ndim}")
        if self.frames.dtype != np.uint8:
            lo, hi = self.frames.min(initial=0), self.frames.max(initial=0)
            if lo < 0 or hi > 255:
                raise ParameterError("frame intensities must lie in 0..255")
            self.frames = self.frames.astype(np.uint8)
        if not self.fps > 0:
            raise ParameterError(f"fps must be positive, got {self.fps}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def mirrored(self) -> "FrameSequence":
        """Horizontally mirrored copy (columns reversed)."""
        return FrameSequence(self.frames[:, :, ::-1].copy(), self.fps)


@dataclass
class EventVolume:
    """Binary spike tensor, shape (T, 2, H, W); slot 0 = ON, slot 1 = OFF."""

    data: np.ndarray
    bin_duration: float

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 4 or self.data.shape[1] != 2:
            raise ParameterError(
                f"event data must have shape (T, 2, H, W), got {self.data.shape}")
        if self.data.shape[0] < 1:
            raise ParameterError("event volume needs at least one time bin")
        if self.data.dtype != np.uint8:
            self.data = self.data.astype(np.uint8)
        if self.data.max(initial=0) > 1:
            raise ParameterError("event data must be binary")
        if not self.bin_duration > 0:
            raise ParameterError("bin_duration must be positive")

    @property
    def t_bins(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]

    def counts(self) -> tuple[int, int]:
        """(ON, OFF) spike totals."""
        return int(self.data[:, ON].sum()), int(self.data[:, OFF].sum())

    def magnitudes(self) -> np.ndarray:
        """Polarity-agnostic (T, H, W) float frames: 1.0 where any spike."""
        return (self.data[:, ON] | self.data[:, OFF]).astype(np.float64)

    def mirrored(self) -> "EventVolume":
        """Horizontally mirrored copy (columns reversed)."""
        return EventVolume(self.data[:, :, :, ::-1].copy(), self.bin_duration)


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """Collapse an (H, W, 3) color frame to uint8 gray via Rec.601 luma."""
    frame = np.asarray(frame)
    if frame.ndim == 2:
        return frame.astype(np.uint8)
    if frame.ndim == 3 and frame.shape[2] == 3:
        return np.clip(np.rint(frame @ _LUMA), 0, 255).astype(np.uint8)
    raise ParameterError(f"expected (H, W) or (H, W, 3) frame, got {frame.shape}")


def frames_to_events(seq: FrameSequence,
                     threshold: float = DEFAULT_SPIKE_THRESHOLD) -> EventVolume:
    """Convert frames to spikes by thresholded differencing.

    Emits an ON spike where frame[t+1] - frame[t] > threshold and an OFF
    spike where the drop exceeds the threshold (both strict, so ties and
    sub-threshold noise produce nothing).  One time bin per frame delta.
    """
    if seq.n_frames < 2:
        raise EmptySequenceError(
            f"need at least 2 frames to difference, got {seq.n_frames}")
    if not threshold > 0:
        raise ParameterError(f"threshold must be positive, got {threshold}")
    deltas = seq.frames[1:].astype(np.int16) - seq.frames[:-1].astype(np.int16)
    on = deltas > threshold
    off = -deltas > threshold
    data = np.stack([on, off], axis=1).astype(np.uint8)
    return EventVolume(data, bin_duration=1.0 / seq.fps)


def crop_square(seq: FrameSequence) -> FrameSequence:
    """Center-crop frames horizontally so the output is H x H."""
    h, w = seq.height, seq.width
    if w < h:
        raise UnsupportedAspectError(
            f"cannot square-crop frames taller than wide ({h}x{w})")
    left = (w - h) // 2
    return FrameSequence(seq.frames[:, :, left:left + h].copy(), seq.fps)


def _as_dims(grid) -> tuple[int, int]:
    if isinstance(grid, int):
        return grid, grid
    h, w = grid
    return int(h), int(w)


def _check_motion_args(speed: int, direction: str, length: int) -> None:
    if speed < 1:
        raise ParameterError(f"speed must be >= 1 pixel/bin, got {speed}")
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}")
    if length < 1:
        raise ParameterError("length must be at least 1 frame")


def _positions(start: int, speed: int, direction: str, length: int,
               h: int, w: int) -> tuple[list[int], bool]:
    """Per-frame coordinate of the stimulus along its motion axis."""
    extent = w if direction in ("L2R", "R2L") else h
    sign = 1 if direction in ("L2R", "T2B") else -1
    origin = start if sign == 1 else extent - 1 - start
    pos = [origin + sign * t * speed for t in range(length)]
    truncated = pos[-1] < start or pos[-1] > extent - 1 - start
    return pos, truncated


def gen_moving_bar(grid, speed: int = 1, direction: str = "L2R",
                   length: int = 10, *, value: int = 255,
                   background: int = 0, fps: float = 60.0) -> FrameSequence:
    """Bright one-pixel bar sweeping across a constant background.

    The bar spans the full extent perpendicular to its motion and advances
    ``speed`` pixels per frame.  If it exits the grid before ``length``
    frames, remaining frames are pure background and a warning is issued.
    """
    h, w = _as_dims(grid)
    _check_motion_args(speed, direction, length)
    pos, truncated = _positions(0, speed, direction, length, h, w)
    if truncated:
        warnings.warn("bar exits the grid before the requested length; "
                      "trailing frames are background only", stacklevel=2)
    frames = np.full((length, h, w), background, dtype=np.uint8)
    for t, p in enumerate(pos):
        if direction in ("L2R", "R2L"):
            if 0 <= p < w:
                frames[t, :, p] = value
        else:
            if 0 <= p < h:
                frames[t, p, :] = value
    return FrameSequence(frames, fps)


def gen_moving_ball(grid, radius: int = 2, speed: int = 1,
                    direction: str = "L2R", length: int = 10, *,
                    value: int = 255, background: int = 0,
                    fps: float = 60.0) -> FrameSequence:
    """Disc of the given radius sweeping across a constant background.

    Occupancy is the discrete disc: lattice points within ``radius`` of the
    center.  ``radius=0`` degenerates to a single moving pixel.
    """
    h, w = _as_dims(grid)
    _check_motion_args(speed, direction, length)
    if radius < 0:
        raise ParameterError("radius must be non-negative")
    if 2 * radius + 1 > min(h, w):
        raise ParameterError(f"radius {radius} ball does not fit in {h}x{w} grid")
    pos, truncated = _positions(radius, speed, direction, length, h, w)
    if truncated:
        warnings.warn("ball exits the grid before the requested length; "
                      "trailing frames are background only", stacklevel=2)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    frames = np.full((length, h, w), background, dtype=np.uint8)
    for t, p in enumerate(pos):
        if direction in ("L2R", "R2L"):
            cr, cc = h // 2, p
        else:
            cr, cc = p, w // 2
        mask = (rows - cr) ** 2 + (cols - cc) ** 2 <= radius ** 2
        frames[t][mask] = value
    return FrameSequence(frames, fps)
