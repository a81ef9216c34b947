"""Fuse Body seeds and Boundary bands into whole fragments."""
from dataclasses import replace

import numpy as np
from scipy import ndimage as ndi

from . import accel
from .errors import InvalidArgument
from .raster import BODY, BOUNDARY, validate_class_mask

_OFFSETS = {
    4: np.array([(-1, 0), (0, -1), (0, 1), (1, 0)], dtype=np.int64),
    8: np.array([(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)], dtype=np.int64),
}


def _offsets(connectivity):
    try:
        return _OFFSETS[connectivity]
    except KeyError:
        raise InvalidArgument(f"connectivity must be 4 or 8, got {connectivity}") from None


# -- seeds -------------------------------------------------------------------

@accel.njit
def _label_numba(fg, offs):
    h, w = fg.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stack = np.empty((h * w, 2), dtype=np.int64)
    n = 0
    for r in range(h):
        for c in range(w):
            if not fg[r, c] or labels[r, c] != 0:
                continue
            n += 1
            labels[r, c] = n
            stack[0, 0] = r
            stack[0, 1] = c
            top = 1
            while top > 0:
                top -= 1
                pr = stack[top, 0]
                pc = stack[top, 1]
                for k in range(offs.shape[0]):
                    rr = pr + offs[k, 0]
                    cc = pc + offs[k, 1]
                    if 0 <= rr < h and 0 <= cc < w and fg[rr, cc] and labels[rr, cc] == 0:
                        labels[rr, cc] = n
                        stack[top, 0] = rr
                        stack[top, 1] = cc
                        top += 1
    return labels, n


def _label_numpy(fg, offs):
    structure = np.zeros((3, 3), dtype=bool)
    structure[1, 1] = True
    structure[offs[:, 0] + 1, offs[:, 1] + 1] = True
    labels, n = ndi.label(fg, structure=structure)
    # ndimage numbers components by first pixel in raster order already; make it explicit
    if n:
        first = ndi.minimum(np.arange(labels.size).reshape(labels.shape), labels, np.arange(1, n + 1))
        order = np.argsort(first, kind="stable")
        remap = np.zeros(n + 1, dtype=np.int32)
        remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
        labels = remap[labels]
    return labels.astype(np.int32), int(n)


def extract_seeds(mask, connectivity=4):
    """Label connected Body components in raster-scan discovery order.

    Returns ``(labels, n)`` where ``labels`` is an int32 image (0 outside
    seeds) and ``n`` the number of seeds.
    """
    m = validate_class_mask(mask)
    offs = _offsets(connectivity)
    fg = np.ascontiguousarray(m == BODY)
    if accel.enabled():
        labels, n = _label_numba(fg, offs)
        return labels, int(n)
    return _label_numpy(fg, offs)


# -- region expansion --------------------------------------------------------

@accel.njit
def _expand_numba(seeds, open_, offs, max_radius):
    h, w = seeds.shape
    ids = seeds.copy()
    dist = np.full((h, w), -1, dtype=np.int32)
    frontier = np.empty((h * w, 2), dtype=np.int64)
    nf = 0
    for r in range(h):
        for c in range(w):
            if seeds[r, c] > 0:
                dist[r, c] = 0
                frontier[nf, 0] = r
                frontier[nf, 1] = c
                nf += 1
    nxt = np.empty((h * w, 2), dtype=np.int64)
    step = 0
    while nf > 0 and step < max_radius:
        step += 1
        nn = 0
        # the whole previous layer is final before this layer is written,
        # so a pixel keeps the lowest id among equally distant fronts
        for f in range(nf):
            pr = frontier[f, 0]
            pc = frontier[f, 1]
            lab = ids[pr, pc]
            for k in range(offs.shape[0]):
                rr = pr + offs[k, 0]
                cc = pc + offs[k, 1]
                if rr < 0 or rr >= h or cc < 0 or cc >= w or not open_[rr, cc]:
                    continue
                d = dist[rr, cc]
                if d == -1:
                    dist[rr, cc] = step
                    ids[rr, cc] = lab
                    nxt[nn, 0] = rr
                    nxt[nn, 1] = cc
                    nn += 1
                elif d == step and lab < ids[rr, cc]:
                    ids[rr, cc] = lab
        frontier, nxt = nxt, frontier
        nf = nn
    return ids


def _expand_numpy(seeds, open_, offs, max_radius):
    h, w = seeds.shape
    big = np.iinfo(np.int32).max
    ids = seeds.astype(np.int32).copy()
    front = np.where(seeds > 0, ids, big).astype(np.int32)
    free = open_ & (seeds == 0)
    for _ in range(max_radius):
        padded = np.pad(front, 1, constant_values=big)
        cand = np.full((h, w), big, dtype=np.int32)
        for dr, dc in offs:
            np.minimum(cand, padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w], out=cand)
        claim = free & (cand < big)
        if not claim.any():
            break
        ids[claim] = cand[claim]
        free &= ~claim
        front = np.where(claim, cand, big).astype(np.int32)
    return ids


def expand_regions(mask, seeds, max_radius=10, connectivity=8):
    """Grow every seed into neighbouring Boundary pixels.

    Multi-source breadth-first growth, one step per layer, through Boundary
    pixels only.  A pixel goes to the nearest seed by geodesic step count;
    equal distances resolve to the lower seed id.  Growth stops after
    ``max_radius`` steps; Boundary pixels never reached get id 0.

    ``seeds`` is the ``(labels, n)`` pair from :func:`extract_seeds` or just
    the label image.
    """
    m = validate_class_mask(mask)
    labels = seeds[0] if isinstance(seeds, tuple) else seeds
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    if labels.shape != m.shape:
        raise InvalidArgument("seed labels and mask differ in shape")
    if max_radius < 0:
        raise InvalidArgument("max_radius must be >= 0")
    offs = _offsets(connectivity)
    open_ = np.ascontiguousarray(m == BOUNDARY)
    if accel.enabled():
        return _expand_numba(labels, open_, offs, int(max_radius))
    return _expand_numpy(labels, open_, offs, int(max_radius))


def fuse(mask, max_radius=10, step_connectivity=8, seed_connectivity=4):
    """extract_seeds followed by expand_regions; returns ``(instance_map, count)``."""
    labels, n = extract_seeds(mask, seed_connectivity)
    return expand_regions(mask, labels, max_radius, step_connectivity), n


# -- fine-particle exclusion ---------------------------------------------------

def filter_fine(instances, fragments, min_diameter_px=10.0):
    """Drop fragments whose equivalent diameter is at most ``min_diameter_px`` pixels.

    Survivors are renumbered 1..k in their original id order, both in the map
    and in the returned fragment list.
    """
    if min_diameter_px < 0:
        raise InvalidArgument("min_diameter_px must be >= 0")
    ids = np.asarray(instances)
    keep = [f for f in fragments if f.d_px > min_diameter_px]
    n = int(ids.max()) if ids.size else 0
    n = max(n, max((f.id for f in fragments), default=0))
    remap = np.zeros(n + 1, dtype=np.int32)
    out = []
    for new_id, f in enumerate(sorted(keep, key=lambda f: f.id), start=1):
        remap[f.id] = new_id
        out.append(replace(f, id=new_id))
    return remap[ids], out
