"""Algorithmic motion-prediction model.

Five stages: Gaussian receptive-field pooling of ON spikes, biphasic
temporal filtering (positive and negated branches), pairwise gap-junction
coupling between neighboring cells, accumulation of the coupling terms,
and rectification into the final prediction map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .stimulus import ON, EventVolume

# Neighbor offsets (dx, dy) taking part in gap-junction exchange.  The
# classification below deliberately leaves (+1,-1), (-1,+1) and (0,0) out,
# giving each interior cell exactly six coupled neighbors (a hexagonal
# neighborhood embedded in the square grid).
INCOMING_OFFSETS = ((-1, -1), (0, -1), (-1, 0))
OUTGOING_OFFSETS = ((1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class Kernel2D:
    """Normalized radially symmetric pooling kernel, shape (ks, ks)."""

    weights: np.ndarray
    ks: int

    def __post_init__(self):
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ParameterError("kernel weights must sum to 1")


@dataclass
class BCGrid:
    """Per-cell activation tensor, shape (T, kx, ky)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ParameterError(f"expected (T, kx, ky), got {self.data.shape}")
        if self.data.shape[1] < 1 or self.data.shape[2] < 1:
            raise ParameterError("grid must have at least one cell per axis")
        if not np.isfinite(self.data).all():
            raise ParameterError("activations must be finite")

    @property
    def t_bins(self) -> int:
        return self.data.shape[0]

    @property
    def kx(self) -> int:
        return self.data.shape[1]

    @property
    def ky(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BiphasicKernel:
    """Zero-sum temporal filter: positive pass lobe, negative refractory lobe."""

    taps: np.ndarray
    f_t: int

    def __post_init__(self):
        if self.f_t < 2 or self.f_t % 2:
            raise ParameterError("f_t must be even and >= 2")
        half = self.f_t // 2
        if not ((self.taps[:half] > 0).all() and (self.taps[half:] < 0).all()):
            raise ParameterError("taps must be a positive lobe then a negative lobe")
        if abs(float(self.taps.sum())) > 1e-9:
            raise ParameterError("taps must sum to zero")


@dataclass
class GJTensor:
    """Pairwise coupling tensor, shape (kx, ky, kx, ky, T).

    Entry [a, b, c, d, t] collects the value cell (c, d) receives through
    its slot for neighbor (a, b), minus what (a, b) pushes toward (c, d).
    """

    data: np.ndarray
    gj_s: float
    gj_nf: float
    gamma: int

    def __post_init__(self):
        if self.gamma < 1:
            raise ParameterError("gamma must be >= 1")
        if not 0.0 <= self.gj_nf <= 1.0:
            raise ParameterError("gj_nf must lie in [0, 1]")
        if abs(self.gj_s - self.gj_nf / self.gamma) > 1e-12:
            raise ParameterError("gj_s must equal gj_nf / gamma")


@dataclass
class MPOutput:
    """Rectified prediction tensor, shape (T, kx, ky), all entries >= 0."""

    data: np.ndarray

    def __post_init__(self):
        if (self.data < 0).any():
            raise ParameterError("prediction output must be non-negative")


@dataclass
class RetinaConfig:
    ks: int = 4
    ko: float = 0.5
    sigma: float | None = None  # None -> ks / 4
    f_t: int = 4
    gj_nf: float = 0.5
    gamma: int = 6

    def __post_init__(self):
        if self.ks < 1:
            raise ParameterError("ks must be >= 1")
        if not 0 < self.ko <= 1:
            raise ParameterError("ko must lie in (0, 1]")
        if self.sigma is not None and not self.sigma > 0:
            raise ParameterError("sigma must be positive")
        if self.f_t < 2 or self.f_t % 2:
            raise ParameterError("f_t must be even and >= 2")
        if not 0 <= self.gj_nf <= 1:
            raise ParameterError("gj_nf must lie in [0, 1]")
        if self.gamma < 1:
            raise ParameterError("gamma must be >= 1")

    @property
    def resolved_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.ks / 4.0

    @property
    def gj_s(self) -> float:
        return self.gj_nf / self.gamma


def build_gaussian_kernel(ks: int, sigma: float) -> Kernel2D:
    """Sampled 2-D Gaussian, centered on the kernel, normalized to sum 1."""
    if ks < 1:
        raise ParameterError("ks must be >= 1")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    c = (ks - 1) / 2.0
    offsets = np.arange(ks) - c
    r2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    weights = np.exp(-r2 / (2.0 * sigma * sigma))
    weights /= weights.sum()
    return Kernel2D(weights, ks)


def rf_stride(ks: int, ko: float) -> int:
    """Stride between receptive-field windows: round(ks * ko), at least 1."""
    return max(1, round(ks * ko))


def bc_activations(events: EventVolume, ks: int, ko: float = 0.5,
                   sigma: float | None = None) -> BCGrid:
    """Pool the ON-spike plane of each bin with a strided Gaussian window.

    Valid (no-padding) windows at stride round(ks*ko) give a grid of
    kx = (H-ks)//s + 1 by ky = (W-ks)//s + 1 cells per bin.  Only positive
    spikes contribute; OFF spikes are ignored at this stage.

    Window sums are accumulated in mirror-symmetric column pairs, so when
    (W-ks) is a multiple of the stride the output of a horizontally
    mirrored input is the bitwise mirror of the original output.
    """
    if not 0 < ko <= 1:
        raise ParameterError("ko must lie in (0, 1]")
    h, w = events.height, events.width
    if ks > h or ks > w:
        raise ParameterError(f"kernel size {ks} exceeds frame dims {h}x{w}")
    kernel = build_gaussian_kernel(ks, sigma if sigma is not None else ks / 4.0)
    s = rf_stride(ks, ko)
    kx = (h - ks) // s + 1
    ky = (w - ks) // s + 1
    pos = events.data[:, ON].astype(np.float64)
    win = kernel.weights

    def window(u, v):
        return pos[:, u:u + (kx - 1) * s + 1:s, v:v + (ky - 1) * s + 1:s]

    acc = np.zeros((events.t_bins, kx, ky))
    for u in range(ks):
        for v in range(ks // 2):
            m = ks - 1 - v
            acc += win[u, v] * window(u, v) + win[u, m] * window(u, m)
        if ks % 2:
            v = ks // 2
            acc += win[u, v] * window(u, v)
    return BCGrid(acc)


def build_biphasic_filter(f_t: int) -> BiphasicKernel:
    """Square biphasic filter: f_t/2 taps of +2/f_t then f_t/2 of -2/f_t."""
    if f_t < 2 or f_t % 2:
        raise ParameterError(f"f_t must be even and >= 2, got {f_t}")
    half = f_t // 2
    taps = np.concatenate([np.full(half, 2.0 / f_t), np.full(half, -2.0 / f_t)])
    return BiphasicKernel(taps, f_t)


def bc_nonlinearities(bc: BCGrid,
                      filt: BiphasicKernel) -> tuple[BCGrid, BCGrid]:
    """Causal temporal convolution with the filter and its negation.

    Output bin t combines input bins t-f_t+1 .. t (zero-padded before the
    first bin); tap 0 weights the newest bin.  Output length equals input
    length, and the two branches are exact negations of each other.
    """
    pos = _temporal_conv(bc.data, filt.taps)
    neg = _temporal_conv(bc.data, -filt.taps)
    return BCGrid(pos), BCGrid(neg)


def _temporal_conv(data: np.ndarray, taps: np.ndarray) -> np.ndarray:
    t_bins = data.shape[0]
    out = np.zeros_like(data)
    for k, tap in enumerate(taps):
        if k >= t_bins:
            break
        out[k:] += tap * data[:t_bins - k]
    return out


def gap_junction_interactions(bc_nl: BCGrid, gj_s: float | None = None, *,
                              gj_nf: float = 0.5, gamma: int = 6) -> GJTensor:
    """Exchange scaled activation with the six coupled neighbors.

    For every cell (x, y) and in-bounds neighbor (nx, ny): a lower-left
    neighbor books +value into slot [nx, ny, x, y], an upper-right neighbor
    books -value into slot [x, y, nx, ny], with value = activation * gj_s.
    The two excluded diagonals and the cell itself contribute nothing.
    """
    if gj_s is None:
        gj_s = gj_nf / gamma
    else:
        gj_nf = gj_s * gamma
    t_bins, kx, ky = bc_nl.data.shape
    value = bc_nl.data * gj_s  # (T, kx, ky)
    gj = np.zeros((kx, ky, kx, ky, t_bins))
    for dx, dy in INCOMING_OFFSETS:
        xs, ys, nxs, nys = _offset_ranges(kx, ky, dx, dy)
        gj[nxs, nys, xs, ys, :] += np.moveaxis(value[:, xs, ys], 0, -1)
    for dx, dy in OUTGOING_OFFSETS:
        xs, ys, nxs, nys = _offset_ranges(kx, ky, dx, dy)
        gj[xs, ys, nxs, nys, :] -= np.moveaxis(value[:, xs, ys], 0, -1)
    return GJTensor(gj, gj_s=gj_s, gj_nf=gj_nf, gamma=gamma)


def _offset_ranges(kx, ky, dx, dy):
    xs = np.arange(max(0, -dx), kx - max(0, dx))[:, None]
    ys = np.arange(max(0, -dy), ky - max(0, dy))[None, :]
    return xs, ys, xs + dx, ys + dy


def accumulate_gj(bc: BCGrid, gj: GJTensor) -> BCGrid:
    """Add each cell's incoming-minus-outgoing coupling sums to its activation.

    Incoming at (x, y) sums slots [:, :, x, y, t]; outgoing sums
    [x, y, :, :, t].  Returns a new grid; inputs are untouched.
    """
    t_bins, kx, ky = bc.data.shape
    if gj.data.shape != (kx, ky, kx, ky, t_bins):
        raise ParameterError(
            f"coupling tensor shape {gj.data.shape} does not match grid "
            f"({kx}, {ky}, {kx}, {ky}, {t_bins})")
    # Contiguous transposes keep per-cell summation order identical to
    # summing each [:, :, x, y, t] slice directly.
    incoming = np.ascontiguousarray(
        gj.data.transpose(2, 3, 4, 0, 1)).reshape(kx, ky, t_bins, -1).sum(axis=-1)
    outgoing = np.ascontiguousarray(
        gj.data.transpose(0, 1, 4, 2, 3)).reshape(kx, ky, t_bins, -1).sum(axis=-1)
    delta = incoming - outgoing  # (kx, ky, T)
    return BCGrid(bc.data + np.moveaxis(delta, 2, 0))


def post_rectification(pos_gj: BCGrid, neg_gj: BCGrid) -> MPOutput:
    """Clamp negatives of both branches to zero and sum them."""
    if pos_gj.data.shape != neg_gj.data.shape:
        raise ParameterError("branch shapes disagree")
    rectified = np.maximum(pos_gj.data, 0.0) + np.maximum(neg_gj.data, 0.0)
    return MPOutput(rectified)


def run_retina_pipeline(events: EventVolume, cfg: RetinaConfig) -> MPOutput:
    """Compose the five stages in order on an event volume."""
    bc = bc_activations(events, cfg.ks, cfg.ko, cfg.resolved_sigma)
    filt = build_biphasic_filter(cfg.f_t)
    pos, neg = bc_nonlinearities(bc, filt)
    gj_pos = gap_junction_interactions(pos, gj_nf=cfg.gj_nf, gamma=cfg.gamma)
    gj_neg = gap_junction_interactions(neg, gj_nf=cfg.gj_nf, gamma=cfg.gamma)
    pos_acc = accumulate_gj(pos, gj_pos)
    neg_acc = accumulate_gj(neg, gj_neg)
    return post_rectification(pos_acc, neg_acc)
