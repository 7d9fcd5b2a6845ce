"""48x30 binary plan images: pixel-center rasterization and PGM persistence.

Every sample is drawn into one fixed world window so that pixel position
carries absolute geometry and images are comparable across samples.  The
window margin must cover the worst reachable vertex: a 3.5 m bump combined
with deep notches elsewhere gets scaled up about the centroid and can land
5.62 m outside the base rectangle, so the default margin is 6.0 m.

In memory, 1 = building interior, 0 = background, row 0 = top (largest y).
On disk the polarity follows plan-drawing convention: interior pixels are
black (0x00) on a white (0xFF) background, binary PGM ("P5").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Footprint, GeometryConfig, contains_points

WINDOW_MARGIN_M = 6.0


class WindowError(ValueError):
    """A footprint vertex lies outside the raster world window."""


class PgmFormatError(ValueError):
    """Malformed PGM payload; `offset` is the byte position of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class RasterSpec:
    """Pixel grid plus the fixed world window it maps onto."""

    width_px: int = 48
    height_px: int = 30
    x_min: float = -WINDOW_MARGIN_M
    x_max: float = WINDOW_MARGIN_M
    y_min: float = -WINDOW_MARGIN_M
    y_max: float = WINDOW_MARGIN_M

    @classmethod
    def for_config(
        cls,
        cfg: GeometryConfig,
        width_px: int = 48,
        height_px: int = 30,
        margin: float = WINDOW_MARGIN_M,
    ) -> "RasterSpec":
        return cls(
            width_px=width_px,
            height_px=height_px,
            x_min=-margin,
            x_max=cfg.length + margin,
            y_min=-margin,
            y_max=cfg.width + margin,
        )

    @property
    def pixel_dx(self) -> float:
        return (self.x_max - self.x_min) / self.width_px

    @property
    def pixel_dy(self) -> float:
        return (self.y_max - self.y_min) / self.height_px


class BinaryImage:
    """Row-major {0,1} grid; row 0 is the top of the world window."""

    def __init__(self, pixels):
        px = np.asarray(pixels, dtype=np.uint8)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-d grid")
        if not np.isin(px, (0, 1)).all():
            raise ValueError("pixel values must be 0 or 1")
        px.setflags(write=False)
        self.pixels = px

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    def interior_count(self) -> int:
        return int(self.pixels.sum())

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(
            self.pixels, other.pixels
        )

    def __repr__(self):
        return (
            f"BinaryImage({self.width_px}x{self.height_px}, "
            f"{self.interior_count()} interior px)"
        )


def pixel_centers(spec: RasterSpec) -> tuple[np.ndarray, np.ndarray]:
    """World coordinates of pixel centers: (xs per column, ys per row)."""
    cols = np.arange(spec.width_px)
    rows = np.arange(spec.height_px)
    xs = spec.x_min + (cols + 0.5) * spec.pixel_dx
    ys = spec.y_max - (rows + 0.5) * spec.pixel_dy
    return xs, ys


def rasterize(f: Footprint, spec: RasterSpec) -> BinaryImage:
    """Pixel (r, c) = 1 iff the pixel's center point lies in the footprint."""
    v = f.vertices
    if (
        v[:, 0].min() < spec.x_min or v[:, 0].max() > spec.x_max
        or v[:, 1].min() < spec.y_min or v[:, 1].max() > spec.y_max
    ):
        raise WindowError(
            f"footprint extent x[{v[:, 0].min():.3f}, {v[:, 0].max():.3f}] "
            f"y[{v[:, 1].min():.3f}, {v[:, 1].max():.3f}] exceeds window "
            f"x[{spec.x_min}, {spec.x_max}] y[{spec.y_min}, {spec.y_max}]"
        )
    xs, ys = pixel_centers(spec)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = contains_points(f, pts).reshape(spec.height_px, spec.width_px)
    return BinaryImage(inside.astype(np.uint8))


def encode_pgm(img: BinaryImage) -> bytes:
    """Binary graymap: interior 0x00 (black), background 0xFF (white)."""
    header = f"P5\n{img.width_px} {img.height_px}\n255\n".encode("ascii")
    payload = (255 - img.pixels.astype(np.uint16) * 255).astype(np.uint8)
    return header + payload.tobytes()


def decode_pgm(data: bytes, width_px: int = 48, height_px: int = 30) -> BinaryImage:
    """Strict inverse of `encode_pgm`; only 0x00/0xFF payload bytes are legal."""
    if data[:2] != b"P5":
        raise PgmFormatError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
    parts = data.split(b"\n", 3)
    if len(parts) < 4:
        raise PgmFormatError("truncated header", len(data))
    _, dims, maxval, payload = parts
    header_len = len(data) - len(payload)
    try:
        w, h = (int(t) for t in dims.split())
    except ValueError:
        raise PgmFormatError(f"unparseable dimensions {dims!r}", 3) from None
    if (w, h) != (width_px, height_px):
        raise PgmFormatError(
            f"dimensions {w}x{h}, expected {width_px}x{height_px}", 3
        )
    if maxval.strip() != b"255":
        raise PgmFormatError(f"maxval {maxval!r}, expected 255", len(data) - len(payload) - len(maxval) - 1)
    expected = width_px * height_px
    if len(payload) != expected:
        raise PgmFormatError(
            f"payload is {len(payload)} bytes, expected {expected}",
            header_len + min(len(payload), expected),
        )
    raw = np.frombuffer(payload, dtype=np.uint8)
    bad = (raw != 0x00) & (raw != 0xFF)
    if bad.any():
        i = int(np.argmax(bad))
        raise PgmFormatError(
            f"payload byte {raw[i]:#04x} is neither 0x00 nor 0xff",
            header_len + i,
        )
    pixels = (raw == 0x00).astype(np.uint8).reshape(height_px, width_px)
    return BinaryImage(pixels)
