"""Fragment geometry: equivalent ellipse, equivalent diameter and ellipsoid volume."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidArgument

# d = 1.16 * b * sqrt(1.35 * a / b)
DIAMETER_COEF = 1.16
DIAMETER_ASPECT = 1.35
# 1.16 * sqrt(1.35): d = SQRT_AB_COEF * sqrt(a * b)
SQRT_AB_COEF = DIAMETER_COEF * math.sqrt(DIAMETER_ASPECT)

# second moment of a unit pixel about its own centre
_PIXEL_VAR = 1.0 / 12.0
# relative eigenvalue gap below which the ellipse is treated as a circle
_ISOTROPIC_TOL = 1e-12


@dataclass(frozen=True)
class Fragment:
    id: int
    pixel_area: int
    centroid: tuple  # (x, y) in pixels
    a: float  # semi-major axis, cm
    b: float  # semi-minor axis, cm
    orientation: float  # radians in [0, pi), major axis from +x towards +y (image rows)
    d: float  # equivalent diameter, cm
    volume: float  # cm^3
    touches_border: bool
    d_px: float = float("nan")  # equivalent diameter in pixels


def _axes_from_moments(n, cxx, cyy, cxy):
    """Area-matched semi-axes and orientation from central second moments.

    ``cxx``, ``cyy``, ``cxy`` are per-pixel variances/covariance including the
    intra-pixel term, so every input is strictly positive definite unless a
    caller passes degenerate values; those fall back to a circle.
    """
    n = np.asarray(n, dtype=np.float64)
    cxx = np.asarray(cxx, dtype=np.float64)
    cyy = np.asarray(cyy, dtype=np.float64)
    cxy = np.asarray(cxy, dtype=np.float64)
    half_tr = 0.5 * (cxx + cyy)
    root = np.sqrt(0.25 * (cxx - cyy) ** 2 + cxy ** 2)
    lam1 = half_tr + root
    lam2 = half_tr - root
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sqrt(lam1 / lam2)
    ratio = np.where(np.isfinite(ratio) & (lam2 > 0), ratio, 1.0)
    a = np.sqrt(n * ratio / np.pi)
    b = np.sqrt(n / (ratio * np.pi))
    theta = 0.5 * np.arctan2(2.0 * cxy, cxx - cyy)
    theta = np.where(root <= _ISOTROPIC_TOL * np.maximum(half_tr, 1e-300), 0.0, theta)
    theta = np.mod(theta, np.pi)
    theta = np.where(theta >= np.pi, 0.0, theta)
    return a, b, theta


def fit_ellipse(rows, cols):
    """Equivalent ellipse of a pixel set given by row and column indices.

    Orientation and aspect ratio come from the second central moments of the
    pixels (each pixel counted as a unit square), and the axes are scaled so
    that ``pi * a * b`` equals the pixel count.  Returns ``(a_px, b_px,
    orientation)`` with ``a >= b``.
    """
    y = np.asarray(rows, dtype=np.float64).ravel()
    x = np.asarray(cols, dtype=np.float64).ravel()
    if x.size == 0 or x.size != y.size:
        raise InvalidArgument("fit_ellipse needs a non-empty pixel set")
    dx = x - x.mean()
    dy = y - y.mean()
    a, b, theta = _axes_from_moments(
        x.size,
        (dx * dx).mean() + _PIXEL_VAR,
        (dy * dy).mean() + _PIXEL_VAR,
        (dx * dy).mean(),
    )
    return float(a), float(b), float(theta)


def equivalent_diameter(a, b):
    a = float(a)
    b = float(b)
    if a < 0 or b < 0:
        raise InvalidArgument("axes must be non-negative")
    if a < b:
        raise InvalidArgument(f"semi-major axis {a} smaller than semi-minor {b}")
    if b == 0:
        return 0.0
    return DIAMETER_COEF * b * math.sqrt(DIAMETER_ASPECT * a / b)


def ellipsoid_volume(a, b, d):
    if a < 0 or b < 0 or d < 0:
        raise InvalidArgument("ellipsoid dimensions must be non-negative")
    return 4.0 / 3.0 * math.pi * a * b * (d / 2.0)


def measure(instances, cm_per_pixel):
    """One :class:`Fragment` per positive id in ``instances``, sorted by id."""
    if not (math.isfinite(cm_per_pixel) and cm_per_pixel > 0):
        raise InvalidArgument("cm_per_pixel must be positive and finite")
    ids = np.asarray(instances)
    if ids.ndim != 2:
        raise InvalidArgument("instance map must be 2-D")
    h, w = ids.shape
    flat = ids.ravel().astype(np.int64)
    if flat.size == 0 or flat.max() <= 0:
        return []
    if flat.min() < 0:
        raise InvalidArgument("instance ids must be non-negative")
    nlab = int(flat.max()) + 1
    rr, cc = np.divmod(np.arange(flat.size, dtype=np.int64), w)
    x = cc.astype(np.float64)
    y = rr.astype(np.float64)

    def tally(weights=None):
        return np.bincount(flat, weights=weights, minlength=nlab)

    n = tally()
    present = np.flatnonzero(n)
    present = present[present > 0]
    n = n[present]
    sx = tally(x)[present]
    sy = tally(y)[present]
    mx = sx / n
    my = sy / n
    # shift before squaring to keep the variance well conditioned on large images
    ox = x - (w - 1) / 2.0
    oy = y - (h - 1) / 2.0
    mox = mx - (w - 1) / 2.0
    moy = my - (h - 1) / 2.0
    cxx = tally(ox * ox)[present] / n - mox ** 2 + _PIXEL_VAR
    cyy = tally(oy * oy)[present] / n - moy ** 2 + _PIXEL_VAR
    cxy = tally(ox * oy)[present] / n - mox * moy
    a_px, b_px, theta = _axes_from_moments(n, cxx, cyy, cxy)

    border = np.zeros(h * w, dtype=bool).reshape(h, w)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    on_border = tally(border.ravel().astype(np.float64))[present] > 0

    out = []
    for k, fid in enumerate(present):
        a = float(a_px[k]) * cm_per_pixel
        b = min(float(b_px[k]) * cm_per_pixel, a)
        d = equivalent_diameter(a, b)
        out.append(Fragment(
            id=int(fid),
            pixel_area=int(n[k]),
            centroid=(float(mx[k]), float(my[k])),
            a=a,
            b=b,
            orientation=float(theta[k]),
            d=d,
            volume=ellipsoid_volume(a, b, d),
            touches_border=bool(on_border[k]),
            d_px=d / cm_per_pixel,
        ))
    return out
