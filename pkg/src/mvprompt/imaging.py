"""Pixel-level primitives: color conversion, histograms, saliency, mask geometry.

All operations are pure functions over immutable image values; no shared
mutable state, safe to call from worker threads.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

from .errors import EmptyMask, ModeMismatch, NoForeground

MIN_SIDE = 16

# D65 reference white, sRGB primaries
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

L_RANGE = (0.0, 100.0)
A_RANGE = (-128.0, 127.0)
B_RANGE = (-128.0, 127.0)


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image, row-major, at least 16x16."""

    pixels: np.ndarray  # (h, w, 3) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixel array, got shape {px.shape}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[1]}x{px.shape[0]}")
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def content_hash(self) -> str:
        cached = getattr(self, "_content_hash", None)
        if cached is None:
            h = hashlib.sha256()
            h.update(f"{self.width}x{self.height}".encode())
            h.update(self.pixels.tobytes())
            cached = h.hexdigest()
            object.__setattr__(self, "_content_hash", cached)
        return cached

    @classmethod
    def from_bytes(cls, data: bytes) -> "RasterImage":
        """Decode PNG or JPEG bytes (the only formats accepted at the boundary)."""
        with PILImage.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise ValueError(f"unsupported image format {im.format!r}; expected PNG or JPEG")
            return cls(np.asarray(im.convert("RGB")))

    @classmethod
    def from_file(cls, path) -> "RasterImage":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        PILImage.fromarray(np.asarray(self.pixels)).save(buf, format="PNG")
        return buf.getvalue()


@dataclass(frozen=True)
class LabImage:
    """CIELAB image: L in [0, 100], a and b in [-128, 127]."""

    values: np.ndarray  # (h, w, 3) float64

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Histogram:
    bins: np.ndarray  # flat, normalized to sum 1
    mode: str         # "lab3d" | "l_channel"
    bin_count: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64).ravel()
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)
        if bins.size != self.bin_count:
            raise ValueError(f"bin array length {bins.size} != bin_count {self.bin_count}")
        if np.any(bins < 0):
            raise ValueError("histogram bins must be non-negative")


@dataclass(frozen=True)
class BinaryMask:
    bits: np.ndarray  # (h, w) bool

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def bbox(self) -> tuple[int, int, int, int] | None:
        """Tight (x0, y0, x1, y1) box, end-exclusive, or None for an empty mask."""
        ys, xs = np.nonzero(self.bits)
        if ys.size == 0:
            return None
        return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


@dataclass(frozen=True)
class SaliencyResult:
    saliency: np.ndarray  # (h, w) float in [0, 1]
    mask: BinaryMask
    bbox: tuple[int, int, int, int]


@dataclass(frozen=True)
class MaskMetrics:
    iou: float
    bbox_iou: float
    centroid_offset: float
    offset_max: float


def _srgb_linear_lut() -> np.ndarray:
    v = np.arange(256, dtype=np.float64) / 255.0
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


_LINEAR_LUT = _srgb_linear_lut()


def rgb_to_lab(img: RasterImage) -> LabImage:
    """sRGB (D65) to CIELAB, per-pixel. Companding goes through an 8-bit LUT."""
    linear = _LINEAR_LUT[img.pixels]
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_D65
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return LabImage(lab)


def _bin_indices(values: np.ndarray, lo: float, hi: float, nbins: int) -> np.ndarray:
    scaled = (values - lo) / (hi - lo) * nbins
    return np.clip(scaled.astype(np.int64), 0, nbins - 1)


def histogram(img: LabImage, mode: str = "lab3d", mask: BinaryMask | None = None) -> Histogram:
    """Normalized histogram over (optionally masked) pixels.

    lab3d bins the joint (L, a, b) space into 8x8x8 cells; l_channel uses
    32 uniform bins over L alone. Bin edges are uniform over the channel
    ranges, top edge inclusive.
    """
    vals = img.values.reshape(-1, 3)
    if mask is not None:
        if mask.height != img.height or mask.width != img.width:
            raise ModeMismatch(f"mask {mask.width}x{mask.height} does not match image {img.width}x{img.height}")
        flat = mask.bits.ravel()
        if not flat.any():
            raise EmptyMask("mask has no foreground pixels")
        vals = vals[flat]

    if mode == "lab3d":
        n = 8
        li = _bin_indices(vals[:, 0], *L_RANGE, n)
        ai = _bin_indices(vals[:, 1], *A_RANGE, n)
        bi = _bin_indices(vals[:, 2], *B_RANGE, n)
        flat_idx = (li * n + ai) * n + bi
        counts = np.bincount(flat_idx, minlength=n**3).astype(np.float64)
        return Histogram(counts / counts.sum(), "lab3d", n**3)
    if mode == "l_channel":
        n = 32
        li = _bin_indices(vals[:, 0], *L_RANGE, n)
        counts = np.bincount(li, minlength=n).astype(np.float64)
        return Histogram(counts / counts.sum(), "l_channel", n)
    if mode == "lab_per_channel":
        # per-channel granularity knob: three 32-bin blocks, each weighted 1/3
        n = 32
        blocks = []
        for channel, (lo, hi) in enumerate((L_RANGE, A_RANGE, B_RANGE)):
            idx = _bin_indices(vals[:, channel], lo, hi, n)
            counts = np.bincount(idx, minlength=n).astype(np.float64)
            blocks.append(counts / counts.sum() / 3.0)
        return Histogram(np.concatenate(blocks), "lab_per_channel", 3 * n)
    raise ModeMismatch(f"unknown histogram mode {mode!r}")


def bhattacharyya(p: Histogram, q: Histogram) -> float:
    """Bhattacharyya coefficient sum(sqrt(p_i * q_i)); 1 iff identical."""
    if p.mode != q.mode or p.bin_count != q.bin_count:
        raise ModeMismatch(f"histogram layouts differ: {p.mode}/{p.bin_count} vs {q.mode}/{q.bin_count}")
    return float(np.sqrt(p.bins * q.bins).sum())


def mean_histogram(hists: list[Histogram]) -> Histogram:
    """Arithmetic mean of normalized histograms, renormalized."""
    if not hists:
        raise ValueError("need at least one histogram")
    mode, count = hists[0].mode, hists[0].bin_count
    for h in hists[1:]:
        if h.mode != mode or h.bin_count != count:
            raise ModeMismatch("cannot average histograms with differing layouts")
    mean = np.mean([h.bins for h in hists], axis=0)
    return Histogram(mean / mean.sum(), mode, count)


def otsu_threshold(values: np.ndarray) -> float:
    """Otsu's threshold over a real-valued map, computed on a 256-bin histogram."""
    flat = values.ravel().astype(np.float64)
    lo, hi = float(flat.min()), float(flat.max())
    if hi - lo < 1e-12:
        return lo
    nbins = 256
    counts, edges = np.histogram(flat, bins=nbins, range=(lo, hi))
    counts = counts.astype(np.float64)
    total = counts.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0
    w0 = np.cumsum(counts)
    w1 = total - w0
    cum = np.cumsum(counts * centers)
    mu0 = np.divide(cum, w0, out=np.zeros(nbins), where=w0 > 0)
    mu1 = np.divide(cum[-1] - cum, w1, out=np.zeros(nbins), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    k = int(np.argmax(between))
    return float(edges[k + 1])


_SALIENCY_WORK_SIZE = 64
_SALIENCY_SIGMA = 1.5


def _resize_gray(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    zoom = (out_h / gray.shape[0], out_w / gray.shape[1])
    return ndimage.zoom(gray, zoom, order=1, mode="nearest")


def _saliency_small(img: RasterImage) -> tuple[np.ndarray, tuple[int, int]]:
    """Spectral residual at the 64px working size, normalized to [0, 1].

    The log-amplitude spectrum minus its local (3x3) average is recombined
    with the original phase; the squared inverse transform is Gaussian
    smoothed. log1p keeps the residual bounded at exact spectral nulls
    (synthetic inputs hit these).
    """
    gray = img.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    if np.ptp(gray) < 1e-9:
        raise NoForeground("uniform image has no salient region")

    h, w = gray.shape
    scale = _SALIENCY_WORK_SIZE / max(h, w)
    wh, ww = max(8, round(h * scale)), max(8, round(w * scale))
    small = _resize_gray(gray, wh, ww)

    spectrum = np.fft.fft2(small)
    log_amp = np.log1p(np.abs(spectrum))
    residual = log_amp - ndimage.uniform_filter(log_amp, size=3, mode="wrap")
    recombined = np.exp(residual) * np.exp(1j * np.angle(spectrum))
    sal_small = np.abs(np.fft.ifft2(recombined)) ** 2
    sal_small = ndimage.gaussian_filter(sal_small, sigma=_SALIENCY_SIGMA)

    lo, hi = float(sal_small.min()), float(sal_small.max())
    if hi - lo < 1e-12:
        raise NoForeground("saliency map is flat")
    return (sal_small - lo) / (hi - lo), (h, w)


def saliency_map(img: RasterImage) -> np.ndarray:
    """Spectral-residual saliency, normalized to [0, 1] at input resolution."""
    sal_small, (h, w) = _saliency_small(img)
    sal = _resize_gray(sal_small, h, w)
    lo, hi = float(sal.min()), float(sal.max())
    return (sal - lo) / (hi - lo)


def _clean_mask(raw: np.ndarray, sal: np.ndarray) -> np.ndarray:
    """Morphological cleanup of the thresholded saliency map (working res).

    Closes and fills the edge response into solid regions, drops thin
    ringing streaks, keeps components carrying meaningful saliency mass,
    then erodes the Gaussian blur skirt back off (unless that would empty
    the mask).
    """
    m = ndimage.binary_closing(raw, structure=np.ones((3, 3)))
    m = ndimage.binary_fill_holes(m)
    m = ndimage.binary_opening(m, structure=np.ones((3, 3)))
    if not m.any():
        return raw
    labels, n = ndimage.label(m, structure=np.ones((3, 3)))
    if n > 1:
        masses = ndimage.sum_labels(sal, labels, index=range(1, n + 1))
        keep = np.nonzero(masses >= 0.3 * masses.max())[0] + 1
        m = np.isin(labels, keep)
    ke = max(1, round(2 * _SALIENCY_SIGMA))
    eroded = ndimage.binary_erosion(m, structure=np.ones((2 * ke + 1, 2 * ke + 1)))
    return eroded if eroded.any() else m


def _mask_from_small(sal_small: np.ndarray, h: int, w: int) -> BinaryMask:
    clean = _clean_mask(sal_small > otsu_threshold(sal_small), sal_small)
    bits = ndimage.zoom(
        clean.astype(np.uint8), (h / clean.shape[0], w / clean.shape[1]), order=0, mode="nearest"
    ).astype(bool)
    mask = BinaryMask(bits)
    if mask.foreground_count == 0:
        raise NoForeground("no pixels above saliency threshold")
    return mask


def foreground_mask(img: RasterImage) -> BinaryMask:
    """The binarized foreground alone, skipping the full-size saliency map."""
    sal_small, (h, w) = _saliency_small(img)
    return _mask_from_small(sal_small, h, w)


def saliency_mask(img: RasterImage) -> SaliencyResult:
    """Foreground estimate: spectral-residual saliency binarized at Otsu level."""
    sal_small, (h, w) = _saliency_small(img)
    mask = _mask_from_small(sal_small, h, w)
    sal = _resize_gray(sal_small, h, w)
    lo, hi = float(sal.min()), float(sal.max())
    sal = (sal - lo) / (hi - lo) if hi > lo else sal
    box = mask.bbox()
    assert box is not None
    return SaliencyResult(saliency=sal, mask=mask, bbox=box)


def _bbox_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0, ix1 - ix0) * max(0, iy1 - iy0)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def mask_metrics(a: BinaryMask, b: BinaryMask, dims: tuple[int, int]) -> MaskMetrics:
    """Mask agreement and centering for a (width, height) canvas.

    iou and bbox_iou compare a against b; the centroid offset is measured
    from a's centroid to the image center, with the half-diagonal as the
    maximum so that 1 - O/O_max stays in [0, 1].
    """
    width, height = dims
    if (a.width, a.height) != (width, height) or (b.width, b.height) != (width, height):
        raise ModeMismatch("mask dimensions do not match the canvas")
    if a.foreground_count == 0:
        raise EmptyMask("reference mask is empty")

    if b.foreground_count == 0:
        iou = 0.0
        bbox_iou = 0.0
    else:
        inter = int(np.count_nonzero(a.bits & b.bits))
        union = int(np.count_nonzero(a.bits | b.bits))
        iou = inter / union
        box_a, box_b = a.bbox(), b.bbox()
        assert box_a is not None and box_b is not None
        bbox_iou = _bbox_iou(box_a, box_b)

    ys, xs = np.nonzero(a.bits)
    cy, cx = float(ys.mean()), float(xs.mean())
    center_x, center_y = (width - 1) / 2.0, (height - 1) / 2.0
    offset = math.hypot(cx - center_x, cy - center_y)
    offset_max = math.hypot(width, height) / 2.0
    return MaskMetrics(iou=iou, bbox_iou=bbox_iou, centroid_offset=min(offset, offset_max), offset_max=offset_max)
