"""Synthetic Body/Boundary scenes with known fragment geometry."""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidArgument
from .raster import BACKGROUND, BODY, BOUNDARY
from .shape import ellipsoid_volume, equivalent_diameter


@dataclass(frozen=True)
class EllipseSpec:
    cx: float
    cy: float
    a: float  # semi-major, px
    b: float  # semi-minor, px
    theta: float = 0.0  # radians, major axis from +x towards +y
    band: int = 2

    def extent(self):
        """Half-width and half-height of the axis-aligned bounding box."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return math.hypot(self.a * c, self.b * s), math.hypot(self.a * s, self.b * c)


@dataclass(frozen=True)
class SyntheticSceneSpec:
    width: int
    height: int
    ellipses: tuple = field(default_factory=tuple)
    seed: int = 0


@dataclass(frozen=True)
class TrueFragment:
    index: int
    a_px: float
    b_px: float
    d_px: float
    volume_px: float
    centre: tuple


def _ellipse_level(spec, rows, cols):
    dx = cols - spec.cx
    dy = rows - spec.cy
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return u, v


def rasterize_ellipse(spec, shape):
    """Boolean masks ``(fragment, body)`` of one ellipse on a canvas of ``shape``.

    The fragment is the closed ellipse over pixel centres; the body is the
    ellipse shrunk by ``band`` on both semi-axes, so the outer ``band`` pixels
    form the boundary ring.
    """
    h, w = shape
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    u, v = _ellipse_level(spec, rows, cols)
    outer = (u / spec.a) ** 2 + (v / spec.b) ** 2 <= 1.0
    ia, ib = spec.a - spec.band, spec.b - spec.band
    if ia <= 0 or ib <= 0:
        inner = np.zeros_like(outer)
    else:
        inner = (u / ia) ** 2 + (v / ib) ** 2 <= 1.0
    return outer, inner


def generate_synthetic_scene(spec):
    """Rasterise ``spec`` into a class mask plus the analytic fragment list.

    Later ellipses overwrite earlier ones.  Ground truth sizes are in pixels;
    multiply by a calibration to get centimetres.
    """
    h, w = spec.height, spec.width
    if w < 1 or h < 1:
        raise InvalidArgument("canvas must be at least 1x1")
    mask = np.full((h, w), BACKGROUND, dtype=np.uint8)
    truth = []
    for k, e in enumerate(spec.ellipses):
        if e.band < 1:
            raise InvalidArgument("boundary band must be >= 1 px")
        if not e.a >= e.b > 0:
            raise InvalidArgument(f"ellipse {k}: need a >= b > 0")
        ex, ey = e.extent()
        if e.cx - ex < 0 or e.cx + ex > w - 1 or e.cy - ey < 0 or e.cy + ey > h - 1:
            raise InvalidArgument(f"ellipse {k} extends outside the canvas")
        y0, y1 = int(math.floor(e.cy - ey)), int(math.ceil(e.cy + ey)) + 1
        x0, x1 = int(math.floor(e.cx - ex)), int(math.ceil(e.cx + ex)) + 1
        local = EllipseSpec(e.cx - x0, e.cy - y0, e.a, e.b, e.theta, e.band)
        outer, inner = rasterize_ellipse(local, (y1 - y0, x1 - x0))
        view = mask[y0:y1, x0:x1]
        view[outer] = BOUNDARY
        view[inner] = BODY
        d = equivalent_diameter(e.a, e.b)
        truth.append(TrueFragment(k, e.a, e.b, d, ellipsoid_volume(e.a, e.b, d), (e.cx, e.cy)))
    return mask, truth


def random_scene(width, height, n, a_range=(10.0, 60.0), aspect_range=(0.5, 1.0),
                 min_b=8.0, band=2, gap=4.0, seed=0, max_tries=20000):
    """Place ``n`` random non-touching ellipses.

    Rejection sampling on an occupancy grid of footprints grown by ``gap`` px,
    so neighbouring fragments end up at least ``2*gap`` px apart.
    """
    rng = np.random.default_rng(seed)
    occupied = np.zeros((height, width), dtype=bool)
    placed = []
    tries = 0
    while len(placed) < n:
        tries += 1
        if tries > max_tries:
            raise InvalidArgument(f"could only place {len(placed)} of {n} ellipses")
        a = rng.uniform(*a_range)
        b = max(min_b, a * rng.uniform(*aspect_range))
        b = min(a, b)
        theta = rng.uniform(0.0, math.pi)
        grown = EllipseSpec(0.0, 0.0, a + gap, b + gap, theta, band)
        ex, ey = grown.extent()
        if 2 * ex + 3 > width or 2 * ey + 3 > height:
            continue
        cx = rng.uniform(ex + 1, width - 2 - ex)
        cy = rng.uniform(ey + 1, height - 2 - ey)
        y0, y1 = int(math.floor(cy - ey)), int(math.ceil(cy + ey)) + 1
        x0, x1 = int(math.floor(cx - ex)), int(math.ceil(cx + ex)) + 1
        g = EllipseSpec(cx - x0, cy - y0, a + gap, b + gap, theta, band)
        foot, _ = rasterize_ellipse(g, (y1 - y0, x1 - x0))
        if (occupied[y0:y1, x0:x1] & foot).any():
            continue
        e = EllipseSpec(cx, cy, a, b, theta, band)
        occupied[y0:y1, x0:x1] |= foot
        placed.append(e)
    return SyntheticSceneSpec(width, height, tuple(placed), seed)
