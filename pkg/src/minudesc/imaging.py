"""Fingerprint image enhancement.

Difference-of-Gaussians band-pass filtering followed by local mean/variance
regularization. Rasters are plain 2-D numpy arrays indexed ``[row, col]``;
:class:`GrayImage` wraps an 8-bit raster together with its resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError, MalformedFileError

MIN_SIDE = 32
REFERENCE_DPI = 500


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster (0 = dark ridge, 255 = bright valley)."""

    pixels: np.ndarray
    dpi: int = REFERENCE_DPI

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise InvalidParameterError(f"expected a 2-D raster, got shape {px.shape}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise InvalidParameterError(
                f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[1]}x{px.shape[0]}"
            )
        if px.dtype != np.uint8:
            px = np.clip(np.rint(px), 0, 255).astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def as_raster(img) -> np.ndarray:
    """Return a float64 copy of an image or raster."""
    if isinstance(img, GrayImage):
        img = img.pixels
    return np.asarray(img, dtype=np.float64)


@dataclass(frozen=True)
class EnhanceParams:
    sigma1: float = 1.0
    sigma2: float = 4.0
    window: int = 15
    c: float = 40.0

    def __post_init__(self):
        if not (0 < self.sigma1 < self.sigma2):
            raise InvalidParameterError(
                f"need 0 < sigma1 < sigma2, got sigma1={self.sigma1}, sigma2={self.sigma2}"
            )
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidParameterError(f"window must be odd and >= 3, got {self.window}")
        if self.c <= 0:
            raise InvalidParameterError(f"c must be positive, got {self.c}")

    @classmethod
    def for_dpi(cls, dpi: float, **overrides) -> "EnhanceParams":
        """Defaults with the Gaussian widths scaled linearly from 500 dpi."""
        scale = dpi / REFERENCE_DPI
        kw = dict(sigma1=cls.sigma1 * scale, sigma2=cls.sigma2 * scale)
        kw.update(overrides)
        return cls(**kw)

    def scaled(self, dpi: float) -> "EnhanceParams":
        """These parameters, read as 500 dpi values, adapted to ``dpi``."""
        scale = dpi / REFERENCE_DPI
        return replace(self, sigma1=self.sigma1 * scale, sigma2=self.sigma2 * scale)


def _gaussian_1d(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _check_sigmas(sigma1, sigma2):
    if sigma1 <= 0 or sigma2 <= 0 or sigma1 >= sigma2:
        raise InvalidParameterError(
            f"invalid sigma: need 0 < sigma1 < sigma2, got {sigma1}, {sigma2}"
        )


def dog_radius(sigma2: float) -> int:
    return int(math.ceil(3.5 * sigma2))


def dog_kernel(sigma1: float, sigma2: float) -> np.ndarray:
    """Sampled DOG impulse response on a ``(2r+1, 2r+1)`` grid, r = ceil(3.5 sigma2).

    Each Gaussian is normalized to unit discrete mass, so the kernel sums to zero.
    """
    _check_sigmas(sigma1, sigma2)
    r = dog_radius(sigma2)
    g1 = _gaussian_1d(sigma1, r)
    g2 = _gaussian_1d(sigma2, r)
    return np.outer(g1, g1) - np.outer(g2, g2)


def dog_filter(img, sigma1: float, sigma2: float) -> np.ndarray:
    """Convolve with the DOG kernel, mirror-padding the borders.

    Both Gaussians are separable, so this runs as four 1-D passes.
    """
    _check_sigmas(sigma1, sigma2)
    x = as_raster(img)
    r = dog_radius(sigma2)
    out = []
    for s in (sigma1, sigma2):
        g = _gaussian_1d(s, r)
        y = ndimage.correlate1d(x, g, axis=0, mode="mirror")
        out.append(ndimage.correlate1d(y, g, axis=1, mode="mirror"))
    return out[0] - out[1]


def local_normalize(raster, window: int, c: float) -> np.ndarray:
    """Local mean/variance regularization: ``c * (I - m) / sqrt(var) + 128``.

    ``m`` and ``var`` are the mean and population variance over the
    ``window x window`` neighbourhood (mirror-padded). Pixels whose window
    variance is below 1e-12 map to 128.
    """
    if window < 3 or window % 2 == 0:
        raise InvalidParameterError(f"window must be odd and >= 3, got {window}")
    x = np.asarray(raster, dtype=np.float64)
    # removing the global mean first keeps E[x^2] - m^2 from cancelling badly
    x = x - x.mean()
    m = ndimage.uniform_filter(x, window, mode="mirror")
    var = ndimage.uniform_filter(x * x, window, mode="mirror") - m * m
    var = np.maximum(var, 0.0)
    out = np.full(x.shape, 128.0)
    ok = var >= 1e-12
    out[ok] = c * (x[ok] - m[ok]) / np.sqrt(var[ok]) + 128.0
    return out


def enhance(img, params: EnhanceParams | None = None) -> np.ndarray:
    """DOG filtering followed by local normalization; returns a float raster."""
    if params is None:
        dpi = img.dpi if isinstance(img, GrayImage) else REFERENCE_DPI
        params = EnhanceParams.for_dpi(dpi)
    return local_normalize(dog_filter(img, params.sigma1, params.sigma2), params.window, params.c)


def to_uint8(raster) -> np.ndarray:
    """Clip and round a real raster for export."""
    return np.clip(np.rint(np.asarray(raster, dtype=np.float64)), 0, 255).astype(np.uint8)


# --- image files -----------------------------------------------------------

def _pgm_tokens(data: bytes, count: int):
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedFileError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise MalformedFileError(f"{path}: not a binary PGM (P5) file")
    tokens, offset = _pgm_tokens(data, 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise MalformedFileError(f"{path}: bad PGM header") from exc
    if maxval != 255:
        raise MalformedFileError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    body = data[offset:offset + w * h]
    if len(body) != w * h:
        raise MalformedFileError(f"{path}: truncated PGM payload")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, raster) -> None:
    if isinstance(raster, GrayImage):
        raster = raster.pixels
    px = raster if np.asarray(raster).dtype == np.uint8 else to_uint8(raster)
    px = np.ascontiguousarray(px)
    h, w = px.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + px.tobytes())


def read_image(path, dpi: int = REFERENCE_DPI) -> GrayImage:
    """Load an 8-bit grayscale PGM (P5) or PNG file."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        px = read_pgm(path)
    else:
        from PIL import Image

        with Image.open(path) as im:
            if im.mode not in ("L", "P", "1"):
                raise MalformedFileError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
            px = np.asarray(im.convert("L"), dtype=np.uint8)
    return GrayImage(px, dpi=dpi)
