"""Image containers, raster I/O, and colorspace conversions.

An :class:`Image` is an immutable float64 array of shape
``(height, width, channels)`` with values nominally in ``[0, 1]``.
Pixels are indexed row-major, so the flat index of pixel ``(r, c)``
is ``r * width + c``; the same convention is used for graph vertices.

Supported file formats:

* PNG, 8-bit, grayscale or RGB (via Pillow);
* binary PPM (``P6``) / PGM (``P5``), 8-bit, hand-rolled so outputs can be
  diffed without any imaging dependency;
* LMCH, a float32 container for arbitrary channel counts: magic ``LMCH``,
  three little-endian uint32 ``(width, height, channels)``, then
  ``width * height * channels`` little-endian float32 samples in planar
  channel order (all of channel 0 row-major, then channel 1, ...).

8-bit data is mapped to float by dividing by 255; saving quantizes with
round-half-away-from-zero via ``np.rint`` after clipping to ``[0, 1]``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage

# Rec.709 / sRGB luma coefficients applied directly to stored (gamma-encoded)
# channel values; no linearization step.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# sRGB (D65) linear RGB -> CIE XYZ.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# Chromaticity of the matrix's own white (RGB = (1,1,1)), used as the
# fallback for near-black pixels where x, y are undefined.
_WHITE_XYZ = RGB_TO_XYZ @ np.ones(3)
WHITE_POINT_XY = _WHITE_XYZ[:2] / _WHITE_XYZ.sum()

CHROMA_EPS = 1e-9

LMCH_MAGIC = b"LMCH"


class ImageFormatError(ValueError):
    """Unsupported or corrupt image file."""


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable (height, width, channels) float64 image."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"image data must be 2-D or 3-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError(f"image has a zero dimension: shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image data contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def pixels(self) -> np.ndarray:
        """Flat (height * width, channels) view, row-major pixel order."""
        return self.data.reshape(-1, self.channels)


def load_image(path) -> Image:
    """Load PNG / PPM / PGM / LMCH from ``path``, values scaled to float."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such image file: {p}")
    suffix = p.suffix.lower()
    if suffix == ".png":
        return _load_png(p)
    if suffix in (".ppm", ".pgm"):
        return _load_pnm(p)
    if suffix == ".lmch":
        return load_lmch(p)
    raise ImageFormatError(f"unsupported image format: {suffix!r}")


def save_image(img: Image, path) -> None:
    """Save to an 8-bit raster (PNG / PPM / PGM); 1 or 3 channels only.

    Values are clipped to [0, 1] and quantized with round(v * 255).
    """
    if img.channels not in (1, 3):
        raise ValueError(
            f"8-bit rasters need 1 or 3 channels, got {img.channels} "
            "(use save_lmch for other channel counts)"
        )
    p = Path(path)
    q = np.clip(np.rint(img.data * 255.0), 0.0, 255.0).astype(np.uint8)
    suffix = p.suffix.lower()
    if suffix == ".png":
        pil = _PILImage.fromarray(q[:, :, 0] if img.channels == 1 else q)
        pil.save(p)
    elif suffix == ".ppm":
        if img.channels != 3:
            raise ValueError("PPM requires 3 channels")
        _write_pnm(p, b"P6", q)
    elif suffix == ".pgm":
        if img.channels != 1:
            raise ValueError("PGM requires 1 channel")
        _write_pnm(p, b"P5", q)
    else:
        raise ImageFormatError(f"unsupported image format: {suffix!r}")


def _load_png(p: Path) -> Image:
    with _PILImage.open(p) as pil:
        if pil.mode == "P":
            pil = pil.convert("RGB")
        if pil.mode not in ("L", "RGB"):
            raise ImageFormatError(
                f"unsupported PNG mode {pil.mode!r}: 8-bit grayscale or RGB required"
            )
        arr = np.asarray(pil, dtype=np.float64) / 255.0
    return Image(arr)


def _pnm_tokens(raw: bytes, count: int, start: int):
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns (tokens, position one byte past the final separator).
    """
    tokens = []
    i = start
    while len(tokens) < count:
        while i < len(raw) and raw[i : i + 1].isspace():
            i += 1
        if i < len(raw) and raw[i] == ord("#"):
            while i < len(raw) and raw[i] != ord("\n"):
                i += 1
            continue
        j = i
        while j < len(raw) and not raw[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError("truncated PNM header")
        tokens.append(raw[i:j])
        i = j
    return tokens, i + 1  # single whitespace byte separates header from data


def _load_pnm(p: Path) -> Image:
    raw = p.read_bytes()
    if raw[:2] not in (b"P5", b"P6"):
        raise ImageFormatError(f"not a binary PGM/PPM file: {p}")
    channels = 3 if raw[:2] == b"P6" else 1
    try:
        (w, h, maxval), pos = _pnm_tokens(raw, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ImageFormatError(f"corrupt PNM header in {p}: {exc}") from exc
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"zero-dimension PNM image: {w}x{h}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"only 8-bit PNM supported, got maxval {maxval}")
    n = w * h * channels
    data = raw[pos : pos + n]
    if len(data) < n:
        raise ImageFormatError(f"truncated PNM data: expected {n} bytes, got {len(data)}")
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.float64) / maxval
    return Image(arr.reshape(h, w, channels))


def _write_pnm(p: Path, magic: bytes, q: np.ndarray) -> None:
    header = magic + b"\n%d %d\n255\n" % (q.shape[1], q.shape[0])
    p.write_bytes(header + q.tobytes())


def load_lmch(path) -> Image:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such image file: {p}")
    raw = p.read_bytes()
    if raw[:4] != LMCH_MAGIC:
        raise ImageFormatError(f"not an LMCH file: {p}")
    if len(raw) < 16:
        raise ImageFormatError(f"truncated LMCH header in {p}")
    w, h, c = struct.unpack("<III", raw[4:16])
    if w == 0 or h == 0 or c == 0:
        raise ImageFormatError(f"zero-dimension LMCH image: {w}x{h}x{c}")
    n = w * h * c
    if len(raw) < 16 + 4 * n:
        raise ImageFormatError(f"truncated LMCH data: expected {n} float32 samples")
    flat = np.frombuffer(raw[16 : 16 + 4 * n], dtype="<f4").astype(np.float64)
    arr = flat.reshape(c, h, w).transpose(1, 2, 0)
    if not np.all(np.isfinite(arr)):
        raise ImageFormatError(f"non-finite samples in {p}")
    if arr.min() < -1e-6 or arr.max() > 1 + 1e-6:
        raise ImageFormatError(
            f"LMCH samples outside [0, 1]: range [{arr.min():g}, {arr.max():g}]"
        )
    return Image(np.clip(arr, 0.0, 1.0))


def save_lmch(img: Image, path) -> None:
    """Save any channel count as planar little-endian float32."""
    p = Path(path)
    header = LMCH_MAGIC + struct.pack("<III", img.width, img.height, img.channels)
    planar = img.data.transpose(2, 0, 1).astype("<f4")
    p.write_bytes(header + planar.tobytes())


def _axis_weights(n_old: int, n_new: int) -> np.ndarray:
    """Box-filter (area overlap) weights for shrinking an axis."""
    ratio = n_old / n_new
    w = np.zeros((n_new, n_old))
    for i in range(n_new):
        lo = i * ratio
        hi = (i + 1) * ratio
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_old)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1) - max(lo, j)
        w[i] /= w[i].sum()
    return w


def resize_longside(img: Image, max_side: int) -> Image:
    """Area-average downsample so the long side is at most ``max_side``.

    Aspect ratio is preserved (short side rounded, at least 1 pixel);
    images already small enough are returned unchanged.
    """
    if max_side < 1:
        raise ValueError(f"max_side must be >= 1, got {max_side}")
    long_side = max(img.height, img.width)
    if long_side <= max_side:
        return img
    scale = max_side / long_side
    new_h = max_side if img.height == long_side else max(1, round(img.height * scale))
    new_w = max_side if img.width == long_side else max(1, round(img.width * scale))
    arr = img.data
    if new_h != img.height:
        arr = np.tensordot(_axis_weights(img.height, new_h), arr, axes=(1, 0))
    if new_w != img.width:
        arr = np.tensordot(_axis_weights(img.width, new_w), arr, axes=(1, 1))
        arr = arr.transpose(1, 0, 2)
    return Image(arr)


def rgb_to_luma(img: Image) -> Image:
    """Weighted luma 0.2126 R + 0.7152 G + 0.0722 B as a 1-channel image."""
    if img.channels != 3:
        raise ValueError(f"luma needs an RGB image, got {img.channels} channels")
    y = img.pixels @ LUMA_WEIGHTS
    return Image(y.reshape(img.height, img.width, 1))


def rgb_to_xy_chroma(img: Image) -> Image:
    """Per-pixel CIE xy chromaticity as a 2-channel image.

    Near-black pixels (X + Y + Z < CHROMA_EPS) get the white point's
    chromaticity instead of a 0/0.
    """
    if img.channels != 3:
        raise ValueError(f"chromaticity needs an RGB image, got {img.channels} channels")
    xyz = img.pixels @ RGB_TO_XYZ.T
    total = xyz.sum(axis=1)
    dark = total < CHROMA_EPS
    total[dark] = 1.0
    xy = xyz[:, :2] / total[:, None]
    xy[dark] = WHITE_POINT_XY
    return Image(xy.reshape(img.height, img.width, 2))


@dataclass(frozen=True, eq=False)
class CvdTransform:
    """A 3x3 linear dichromacy simulation acting on RGB."""

    kind: str
    matrix: np.ndarray


# Dichromat simulation matrices in the style of Vienot, Brettel & Mollon
# (1999): RGB -> LMS, collapse of the missing cone axis, LMS -> RGB,
# composed and rounded.  Rows sum to 1, so grays are fixed points, and the
# collapse makes each matrix idempotent.
_CVD_MATRICES = {
    "protanopia": [
        [0.11238, 0.88762, 0.0],
        [0.11238, 0.88762, 0.0],
        [0.00401, -0.00401, 1.0],
    ],
    "deuteranopia": [
        [0.29275, 0.70725, 0.0],
        [0.29275, 0.70725, 0.0],
        [-0.02234, 0.02234, 1.0],
    ],
    "tritanopia": [
        [1.0, 0.14461, -0.14461],
        [0.0, 0.85924, 0.14076],
        [0.0, 0.85924, 0.14076],
    ],
}

_CVD_ALIASES = {
    "protan": "protanopia",
    "protanopia": "protanopia",
    "deutan": "deuteranopia",
    "deuteranopia": "deuteranopia",
    "tritan": "tritanopia",
    "tritanopia": "tritanopia",
}


def cvd_transform(kind: str) -> CvdTransform:
    key = _CVD_ALIASES.get(kind.lower())
    if key is None:
        raise ValueError(
            f"unknown CVD kind {kind!r}: expected one of {sorted(_CVD_ALIASES)}"
        )
    m = np.array(_CVD_MATRICES[key])
    m.flags.writeable = False
    return CvdTransform(key, m)


def cvd_confusion_axis(transform: CvdTransform) -> np.ndarray:
    """Unit RGB direction the simulation collapses (its null direction).

    Colors differing only along this axis simulate identically; the sign is
    fixed so the largest-magnitude component is positive.
    """
    _, s, vt = np.linalg.svd(transform.matrix)
    if s[-1] > 1e-8:
        raise ValueError(f"{transform.kind} matrix has no null direction")
    v = vt[-1]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def cvd_simulate(img: Image, transform: CvdTransform) -> Image:
    """Apply a dichromacy simulation, clipping the result to [0, 1]."""
    if img.channels != 3:
        raise ValueError(f"CVD simulation needs RGB, got {img.channels} channels")
    out = np.clip(img.pixels @ transform.matrix.T, 0.0, 1.0)
    return Image(out.reshape(img.height, img.width, 3))


def normalize_channels(img: Image) -> Image:
    """Affinely stretch each channel to span [0, 1]; constant channels -> 0."""
    out = np.empty_like(img.data)
    for c in range(img.channels):
        ch = img.data[:, :, c]
        lo = ch.min()
        span = ch.max() - lo
        if span == 0.0:
            out[:, :, c] = 0.0
        else:
            out[:, :, c] = np.clip((ch - lo) / span, 0.0, 1.0)
    return Image(out)
