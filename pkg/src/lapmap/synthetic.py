"""Synthetic test scenes with known ground-truth structure.

Used by the validation suite and the example scripts.  Each scene is
deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np

from .images import Image, LUMA_WEIGHTS, cvd_confusion_axis, cvd_transform

# Directions orthogonal to the luma functional: moving a color along them
# changes chroma but leaves 0.2126 R + 0.7152 G + 0.0722 B unchanged.
_LUMA_NULL = np.array(
    [
        [LUMA_WEIGHTS[1], -LUMA_WEIGHTS[0], 0.0],
        [0.0, LUMA_WEIGHTS[2], -LUMA_WEIGHTS[1]],
    ]
)
_LUMA_NULL /= np.linalg.norm(_LUMA_NULL, axis=1, keepdims=True)


def _shared_pattern(size: int, amplitude: float) -> np.ndarray:
    """Smooth zero-mean luminance pattern, full periods across the image."""
    t = 2.0 * np.pi * np.arange(size) / (size / 2.0)
    return amplitude * np.outer(np.sin(t), np.sin(t))


def metamer_regions(
    size: int = 32, seed: int = 0, jitter: float = 0.01
) -> tuple[Image, np.ndarray]:
    """Two equal-luma regions (colored vs gray) sharing a luminance pattern.

    The left half is a green-ish color, the right half the gray of the
    same luma, so a luma projection merges the regions exactly.  A shared
    sinusoidal pattern gives both halves genuine image structure, and a
    small luma-orthogonal chroma jitter keeps the graph non-degenerate.
    Returns the image and the per-pixel region labels (0 left, 1 right).
    """
    colored = np.array([0.10, 0.65, 0.10])
    luma = float(colored @ LUMA_WEIGHTS)
    gray = np.full(3, luma)

    rng = np.random.default_rng(seed)
    data = np.empty((size, size, 3))
    labels = np.zeros((size, size), dtype=int)
    half = size // 2
    data[:, :half] = colored
    data[:, half:] = gray
    labels[:, half:] = 1

    data += _shared_pattern(size, 0.12)[:, :, None]
    amounts = rng.uniform(-jitter, jitter, size=(size, size, 2))
    data += np.einsum("hwk,kc->hwc", amounts, _LUMA_NULL)
    return Image(np.clip(data, 0.0, 1.0)), labels.ravel()


def cvd_confusable_regions(
    kind: str = "deuteranopia", size: int = 32, seed: int = 0, jitter: float = 0.01
) -> tuple[Image, np.ndarray]:
    """Two regions separated only along a dichromat's confusion axis.

    Both regions simulate to (numerically) the same color, while a shared
    achromatic pattern survives simulation exactly.  Jitter is applied
    along the confusion axis, so it too is invisible to the dichromat.
    """
    transform = cvd_transform(kind)
    axis = cvd_confusion_axis(transform)
    base = np.array([0.35, 0.42, 0.50])
    shift = 0.30 * axis
    other = base + shift
    if other.min() < 0.02 or other.max() > 0.98:
        other = base - shift

    rng = np.random.default_rng(seed)
    data = np.empty((size, size, 3))
    labels = np.zeros((size, size), dtype=int)
    half = size // 2
    data[:, :half] = base
    data[:, half:] = other
    labels[:, half:] = 1

    data += _shared_pattern(size, 0.12)[:, :, None]
    amounts = rng.uniform(-jitter, jitter, size=(size, size))
    data += amounts[:, :, None] * axis[None, None, :]
    return Image(np.clip(data, 0.0, 1.0)), labels.ravel()


def colorful_field(size: int = 48, seed: int = 0) -> Image:
    """Smooth, saturated color field from low-frequency random waves."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    data = np.zeros((size, size, 3))
    for c in range(3):
        field = np.zeros((size, size))
        for _ in range(4):
            fx, fy = rng.uniform(0.5, 2.0, size=2)
            phase = rng.uniform(0, 2 * np.pi, size=2)
            field += rng.uniform(0.3, 1.0) * np.sin(
                2 * np.pi * fx * xx / size + phase[0]
            ) * np.sin(2 * np.pi * fy * yy / size + phase[1])
        lo, hi = field.min(), field.max()
        data[:, :, c] = 0.05 + 0.9 * (field - lo) / (hi - lo)
    return Image(data)


def two_blob_image(size: int = 24, contrast: float = 0.6) -> tuple[Image, np.ndarray]:
    """Left/right halves of strongly different gray levels."""
    data = np.full((size, size, 1), 0.2)
    half = size // 2
    data[:, half:] = 0.2 + contrast
    labels = np.zeros((size, size), dtype=int)
    labels[:, half:] = 1
    return Image(data), labels.ravel()


def saturated_blocks(size: int = 48, block: int = 8, seed: int = 0) -> Image:
    """Grid of saturated color blocks (many chromaticities out of a small gamut)."""
    rng = np.random.default_rng(seed)
    palette = np.array(
        [
            [0.95, 0.05, 0.05],
            [0.05, 0.90, 0.05],
            [0.10, 0.10, 0.95],
            [0.95, 0.90, 0.05],
            [0.90, 0.10, 0.90],
            [0.05, 0.85, 0.90],
            [0.95, 0.50, 0.05],
            [0.40, 0.95, 0.30],
        ]
    )
    nb = int(np.ceil(size / block))
    data = np.empty((size, size, 3))
    for bi in range(nb):
        for bj in range(nb):
            color = palette[rng.integers(len(palette))]
            data[bi * block : (bi + 1) * block, bj * block : (bj + 1) * block] = color
    # gentle gradient so within-block structure is not totally flat
    ramp = np.linspace(-0.03, 0.03, size)
    data += ramp[None, :, None]
    return Image(np.clip(data, 0.0, 1.0))


def shrunken_chroma_triangle(scale: float = 0.45) -> np.ndarray:
    """A display-like chromaticity triangle shrunk toward the white point."""
    from .images import WHITE_POINT_XY

    primaries = np.array([[0.64, 0.33], [0.30, 0.60], [0.15, 0.06]])
    return WHITE_POINT_XY[None, :] + scale * (primaries - WHITE_POINT_XY[None, :])


def fusion_scene(
    size: int = 32, seed: int = 0
) -> tuple[Image, np.ndarray]:
    """RGB gradient plus a fourth channel carrying an RGB-invisible blob.

    Returns the 4-channel image and the per-pixel blob mask (1 inside).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    ramp = 0.25 + 0.5 * (xx + yy) / (2.0 * (size - 1))
    data = np.empty((size, size, 4))
    for c in range(3):
        data[:, :, c] = ramp + 0.02 * rng.standard_normal()
    cy = cx = (size - 1) / 2.0
    r2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / (size / 4.0) ** 2
    blob = 0.4 * np.exp(-r2)
    data[:, :, 3] = 0.3 + blob
    mask = (r2 <= 1.0).astype(int)
    return Image(np.clip(data, 0.0, 1.0)), mask.ravel()
