"""Image and label-grid primitives.

Arrays follow the numpy convention ``(height, width)``; sizes and tile origins
are given as ``(x, y)`` / ``(width, height)`` pairs like image tools do.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import accel
from .errors import InvalidArgument

BACKGROUND = 0
BODY = 1
BOUNDARY = 2
CLASS_LABELS = (BACKGROUND, BODY, BOUNDARY)


@dataclass(frozen=True)
class Calibration:
    cm_per_pixel: float

    def __post_init__(self):
        if not (math.isfinite(self.cm_per_pixel) and self.cm_per_pixel > 0):
            raise InvalidArgument(f"cm_per_pixel must be positive and finite, got {self.cm_per_pixel}")


@dataclass(frozen=True)
class TileLayout:
    window: int
    stride: int
    tile_origins: tuple  # ((x, y), ...) row-major
    padded_size: tuple  # (width, height)
    image_size: tuple  # (width, height)

    @property
    def grid(self):
        """Tile count per axis as ``(nx, ny)``."""
        pw, ph = self.padded_size
        return ((pw - self.window) // self.stride + 1, (ph - self.window) // self.stride + 1)

    def index_of(self, origin):
        x, y = origin
        nx, ny = self.grid
        if x % self.stride or y % self.stride:
            raise InvalidArgument(f"origin {tuple(origin)} is not on the tile grid")
        i, j = x // self.stride, y // self.stride
        if not (0 <= i < nx and 0 <= j < ny):
            raise InvalidArgument(f"origin {tuple(origin)} outside tile layout")
        return j * nx + i

    def to_dict(self):
        return {
            "window": self.window,
            "stride": self.stride,
            "padded_size": list(self.padded_size),
            "image_size": list(self.image_size),
            "tile_origins": [list(o) for o in self.tile_origins],
        }

    @classmethod
    def from_dict(cls, d):
        w, h = d["image_size"]
        layout = plan_tiles(int(w), int(h), int(d["window"]), int(d["stride"]))
        if [list(o) for o in layout.tile_origins] != [list(o) for o in d.get("tile_origins", layout.tile_origins)]:
            raise InvalidArgument("layout tile_origins do not match window/stride/image_size")
        return layout


def _as_2d(img):
    a = np.asarray(img)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgument(f"expected a non-empty 2-D array, got shape {a.shape}")
    return a


def validate_class_mask(mask):
    m = _as_2d(mask)
    bad = ~np.isin(m, CLASS_LABELS)
    if bad.any():
        v = m[bad][0]
        raise InvalidArgument(f"invalid class label {v} (allowed: 0, 1, 2)")
    return m.astype(np.uint8, copy=False)


# -- rescaling ---------------------------------------------------------------

def _bilinear_axis(n_in, n_out):
    # half-pixel-centre sampling, clamped to the valid source range
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def rescale_bilinear(img, new_width, new_height, quantize=True):
    """Resize a grey image with bilinear interpolation.

    With ``quantize`` the result is rounded back to ``uint8``; otherwise the
    raw float64 samples are returned.
    """
    a = _as_2d(img).astype(np.float64)
    if new_width < 1 or new_height < 1:
        raise InvalidArgument(f"target size must be >= 1, got {new_width}x{new_height}")
    y0, y1, fy = _bilinear_axis(a.shape[0], int(new_height))
    x0, x1, fx = _bilinear_axis(a.shape[1], int(new_width))
    top = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    bot = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    if quantize:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out


# -- tiling ------------------------------------------------------------------

def _padded_dim(n, window, stride):
    if n <= window:
        return window
    return window + math.ceil((n - window) / stride) * stride


def plan_tiles(width, height, window=512, stride=256):
    if stride < 1 or window < 1:
        raise InvalidArgument("window and stride must be >= 1")
    if stride > window:
        raise InvalidArgument(f"stride {stride} exceeds window {window}")
    if width < 1 or height < 1:
        raise InvalidArgument("image size must be >= 1")
    pw = _padded_dim(width, window, stride)
    ph = _padded_dim(height, window, stride)
    xs = range(0, pw - window + 1, stride)
    ys = range(0, ph - window + 1, stride)
    origins = tuple((x, y) for y in ys for x in xs)
    return TileLayout(window, stride, origins, (pw, ph), (width, height))


def pad_to_layout(img, layout):
    a = _as_2d(img)
    w, h = layout.image_size
    if a.shape != (h, w):
        raise InvalidArgument(f"image shape {a.shape[::-1]} does not match layout {layout.image_size}")
    pw, ph = layout.padded_size
    if (pw, ph) == (w, h):
        return a
    # np.pad's "reflect" needs >= 2 samples on the reflected axis
    mode = "reflect" if min(a.shape) > 1 else "edge"
    return np.pad(a, ((0, ph - h), (0, pw - w)), mode=mode)


def extract_tile(img, layout, origin):
    layout.index_of(origin)
    x, y = origin
    win = layout.window
    padded = pad_to_layout(img, layout)
    return padded[y:y + win, x:x + win].copy()


def iter_tiles(img, layout):
    """Yield ``(origin, tile)`` for every tile, padding the image only once."""
    padded = pad_to_layout(img, layout)
    win = layout.window
    for x, y in layout.tile_origins:
        yield (x, y), padded[y:y + win, x:x + win]


# -- stitching ---------------------------------------------------------------

def _nearest_tile_axis(n_out, n_tiles, window, stride):
    """Per output coordinate, the tile index whose centre is nearest (lowest on ties)."""
    centres = np.arange(n_tiles) * stride + window / 2.0
    pix = np.arange(n_out) + 0.5
    dist = np.abs(pix[:, None] - centres[None, :])
    return np.argmin(dist, axis=1)  # argmin returns the first minimum


@accel.njit
def _gather_numba(stack, ty, tx, stride):
    h = ty.shape[0]
    w = tx.shape[0]
    out = np.empty((h, w), dtype=stack.dtype)
    for r in range(h):
        j = ty[r]
        ly = r - j * stride
        for c in range(w):
            i = tx[c]
            out[r, c] = stack[j, i, ly, c - i * stride]
    return out


def _gather_numpy(stack, ty, tx, stride):
    ly = np.arange(ty.shape[0]) - ty * stride
    lx = np.arange(tx.shape[0]) - tx * stride
    return stack[ty[:, None], tx[None, :], ly[:, None], lx[None, :]]


def stitch(tile_masks, layout, out_size=None):
    """Assemble tile predictions into one mask.

    Each output pixel takes its label from the tile whose centre is nearest
    (Euclidean, pixel centres); ties go to the lowest row-major tile index.
    Squared distance separates into x and y terms over the regular tile grid,
    so the nearest tile is found per axis.
    """
    if out_size is None:
        out_size = layout.image_size
    w, h = out_size
    pw, ph = layout.padded_size
    if w > pw or h > ph or w < 1 or h < 1:
        raise InvalidArgument(f"out_size {out_size} incompatible with padded size {layout.padded_size}")
    nx, ny = layout.grid
    win = layout.window
    stack = None
    seen = np.zeros(nx * ny, dtype=bool)
    for origin, tile in tile_masks:
        k = layout.index_of(tuple(int(v) for v in origin))
        t = np.asarray(tile)
        if t.shape != (win, win):
            raise InvalidArgument(f"tile at {tuple(origin)} has shape {t.shape}, expected {(win, win)}")
        if stack is None:
            stack = np.zeros((ny, nx, win, win), dtype=t.dtype)
        stack[k // nx, k % nx] = t
        seen[k] = True
    if not seen.all():
        missing = [layout.tile_origins[k] for k in np.flatnonzero(~seen)]
        raise InvalidArgument(f"missing tile(s) at origin {', '.join(str(o) for o in missing)}")
    tx = _nearest_tile_axis(w, nx, win, layout.stride)
    ty = _nearest_tile_axis(h, ny, win, layout.stride)
    if accel.enabled():
        return _gather_numba(stack, ty, tx, layout.stride)
    return _gather_numpy(stack, ty, tx, layout.stride)


# -- morphology --------------------------------------------------------------

def structuring_element(se_half=4, shape="disk"):
    """Boolean footprint of size ``(2*se_half+1)``, either a full square or an inscribed disk."""
    if se_half < 0:
        raise InvalidArgument("se_half must be >= 0")
    r = np.arange(-se_half, se_half + 1)
    if shape == "square":
        return np.ones((r.size, r.size), dtype=bool)
    if shape == "disk":
        return (r[:, None] ** 2 + r[None, :] ** 2) <= (se_half + 0.5) ** 2
    raise InvalidArgument(f"unknown structuring element shape {shape!r}")


@accel.njit
def _erode_numba(fg, offs, outside):
    h, w = fg.shape
    out = np.empty((h, w), dtype=np.bool_)
    n = offs.shape[0]
    for r in range(h):
        for c in range(w):
            v = True
            for k in range(n):
                rr = r + offs[k, 0]
                cc = c + offs[k, 1]
                if rr < 0 or rr >= h or cc < 0 or cc >= w:
                    s = outside
                else:
                    s = fg[rr, cc]
                if not s:
                    v = False
                    break
            out[r, c] = v
    return out


def _erode_numpy(fg, offs, outside):
    h, w = fg.shape
    p = int(np.abs(offs).max()) if offs.size else 0
    padded = np.pad(fg, p, constant_values=outside)
    out = np.ones((h, w), dtype=bool)
    for dr, dc in offs:
        out &= padded[p + dr:p + dr + h, p + dc:p + dc + w]
    return out


@accel.njit
def _erode_runs_numba(fg, drs, los, widths, pad, outside):
    # one comparison per footprint row: the run of foreground pixels starting
    # at the row span's left end must cover the span
    h, w = fg.shape
    ph, pw = h + 2 * pad, w + 2 * pad
    run = np.empty((ph, pw), dtype=np.int32)
    for r in range(ph):
        rr = r - pad
        n = 0
        for c in range(pw - 1, -1, -1):
            cc = c - pad
            if 0 <= rr < h and 0 <= cc < w:
                s = fg[rr, cc]
            else:
                s = outside
            n = n + 1 if s else 0
            run[r, c] = n
    out = np.empty((h, w), dtype=np.bool_)
    m = drs.shape[0]
    for r in range(h):
        for c in range(w):
            v = True
            for k in range(m):
                if run[r + pad + drs[k], c + pad + los[k]] < widths[k]:
                    v = False
                    break
            out[r, c] = v
    return out


def _row_spans(offs):
    """``(dr, lo, width)`` per footprint row, or None if a row is not one contiguous span."""
    spans = []
    for dr in np.unique(offs[:, 0]):
        dcs = np.sort(offs[offs[:, 0] == dr, 1])
        if dcs[-1] - dcs[0] + 1 != dcs.size:
            return None
        spans.append((dr, dcs[0], dcs.size))
    return np.array(spans, dtype=np.int64).reshape(-1, 3)


def _erode(fg, offs, outside):
    if accel.enabled():
        spans = _row_spans(offs) if offs.size else None
        if spans is not None:
            pad = int(np.abs(offs).max())
            return _erode_runs_numba(fg, np.ascontiguousarray(spans[:, 0]), np.ascontiguousarray(spans[:, 1]),
                                     np.ascontiguousarray(spans[:, 2]), pad, outside)
        return _erode_numba(fg, offs, outside)
    return _erode_numpy(fg, offs, outside)


def binary_open(fg, footprint):
    """Opening of a boolean image.

    Erosion treats pixels beyond the border as foreground and dilation treats
    them as background, so objects cut by the image edge are not eaten from
    the edge side.  Dilation is computed as erosion of the complement.
    """
    fg = np.ascontiguousarray(fg, dtype=bool)
    offs = np.argwhere(footprint) - np.array(footprint.shape) // 2
    offs = np.ascontiguousarray(offs, dtype=np.int64)
    eroded = _erode(fg, offs, True)
    return ~_erode(~eroded, -offs, True)


def morphological_open(mask, se_half=4, shape="disk"):
    """Open Body and Boundary together, then restore each surviving pixel's class."""
    m = validate_class_mask(mask)
    kept = binary_open(m != BACKGROUND, structuring_element(se_half, shape))
    return np.where(kept, m, BACKGROUND).astype(np.uint8)
