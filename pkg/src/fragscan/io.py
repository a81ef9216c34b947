"""File formats: PNG masks and instance maps, fragment CSV, section maps, JSON reports."""
import csv
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, InvalidArgument
from .raster import validate_class_mask
from .shape import Fragment

FRAGMENT_COLUMNS = (
    "image_id", "fragment_id", "pixel_area", "centroid_x_px", "centroid_y_px",
    "a_cm", "b_cm", "orientation_rad", "d_cm", "volume_cm3", "touches_border",
)


def fmt(x):
    """Fixed 6-significant-digit rendering used in every text output."""
    return f"{x:.6g}"


def round_sig(obj):
    """Recursively round floats to 6 significant digits for JSON output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: round_sig(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_sig(obj.tolist())
    if isinstance(obj, np.generic):
        return round_sig(obj.item())
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(round_sig(obj), indent=2, sort_keys=False) + "\n")


# -- images ---------------------------------------------------------------------

def _open(path):
    try:
        with Image.open(path) as im:
            im.load()
            return im.copy()
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: cannot read image ({exc})") from exc


def read_gray(path):
    im = _open(path)
    if im.mode != "L":
        raise DataError(f"{path}: expected an 8-bit single-channel image, got mode {im.mode}")
    return np.asarray(im, dtype=np.uint8)


def read_class_mask(path):
    a = read_gray(path)
    try:
        return validate_class_mask(a)
    except InvalidArgument as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_gray(path, arr):
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        raise InvalidArgument("grey images are written as uint8")
    Image.fromarray(a).save(path, format="PNG")


write_class_mask = write_gray


def write_instance_map(path, ids):
    a = np.asarray(ids)
    if a.size and (a.min() < 0 or a.max() > 65535):
        raise InvalidArgument("instance ids must fit in 16 bits")
    Image.fromarray(a.astype(np.uint16)).save(path, format="PNG")


def read_instance_map(path):
    im = _open(path)
    if im.mode not in ("I;16", "I", "L"):
        raise DataError(f"{path}: expected a 16-bit single-channel image, got mode {im.mode}")
    a = np.asarray(im).astype(np.int32)
    if a.ndim != 2:
        raise DataError(f"{path}: instance map must be single-channel")
    if a.min() < 0:
        raise DataError(f"{path}: negative instance id")
    return a


# -- fragment tables -----------------------------------------------------------

def write_fragments(path, image_id, fragments):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAGMENT_COLUMNS)
        for f in fragments:
            w.writerow([
                image_id, f.id, f.pixel_area, fmt(f.centroid[0]), fmt(f.centroid[1]),
                fmt(f.a), fmt(f.b), fmt(f.orientation), fmt(f.d), fmt(f.volume),
                int(f.touches_border),
            ])


def read_fragments(path):
    """Return ``{image_id: [Fragment, ...]}`` in file order."""
    out = {}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(FRAGMENT_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise DataError(f"{path}: missing column(s) {sorted(missing)}")
            for row in reader:
                f = Fragment(
                    id=int(row["fragment_id"]),
                    pixel_area=int(row["pixel_area"]),
                    centroid=(float(row["centroid_x_px"]), float(row["centroid_y_px"])),
                    a=float(row["a_cm"]),
                    b=float(row["b_cm"]),
                    orientation=float(row["orientation_rad"]),
                    d=float(row["d_cm"]),
                    volume=float(row["volume_cm3"]),
                    touches_border=row["touches_border"].strip() in ("1", "true", "True"),
                )
                out.setdefault(row["image_id"], []).append(f)
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed fragment row ({exc})") from exc
    return out


# -- section map ---------------------------------------------------------------

def read_section_map(path):
    """CSV with columns ``image_id, section_id, depth_range``.

    Returns ``(image -> section, section -> depth_range)``; sections keep the
    order in which they first appear (crest to toe).
    """
    image_section, depths = {}, {}
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if rows and [c.strip() for c in rows[0][:2]] == ["image_id", "section_id"]:
        rows = rows[1:]
    for r in rows:
        if len(r) < 2:
            raise DataError(f"{path}: each row needs image_id and section_id")
        img, sec = r[0].strip(), r[1].strip()
        image_section[img] = sec
        depths.setdefault(sec, r[2].strip() if len(r) > 2 else "")
    return image_section, depths
