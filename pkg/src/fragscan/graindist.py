"""Size distributions, characteristic diameters and segregation indices."""
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources
import json
import math

import numpy as np
from scipy import stats

from .errors import EmptyInputError, InsufficientSamplesError, InvalidArgument

DEFAULT_BIN_WIDTH = {"count": 0.2, "volume": 0.8}
PERCENTILES = (0.10, 0.50, 0.90)


@dataclass(frozen=True)
class SizeDistribution:
    mode: str
    bin_width: float
    bin_edges: np.ndarray
    bin_shares: np.ndarray
    cumulative: np.ndarray  # (m, 2) rows of (d, F); first row is (d_min, 0)
    n_fragments: int
    total_volume: float

    def to_dict(self):
        return {
            "mode": self.mode,
            "bin_width": self.bin_width,
            "bin_edges": self.bin_edges.tolist(),
            "bin_shares": self.bin_shares.tolist(),
            "cumulative": self.cumulative.tolist(),
            "n_fragments": self.n_fragments,
            "total_volume": self.total_volume,
        }


@dataclass(frozen=True)
class CharacteristicDiameters:
    d10: float
    d50: float
    d90: float

    def as_tuple(self):
        return (self.d10, self.d50, self.d90)

    def to_dict(self):
        return {"d10": self.d10, "d50": self.d50, "d90": self.d90}


@dataclass(frozen=True)
class SectionReport:
    section_id: str
    depth_range: str
    per_image: tuple
    mean: CharacteristicDiameters
    ci95: dict  # "d10" -> (low, high)

    def to_dict(self):
        return {
            "section_id": self.section_id,
            "depth_range": self.depth_range,
            "n_images": len(self.per_image),
            "per_image": [cd.to_dict() for cd in self.per_image],
            "mean": self.mean.to_dict(),
            "ci95": {k: list(v) for k, v in self.ci95.items()},
        }


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    residuals: tuple = field(default=())

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "residuals": list(self.residuals)}


@dataclass(frozen=True)
class SegregationReport:
    overall: CharacteristicDiameters
    ratios: dict  # section_id -> (r10, r50, r90)
    fits: dict  # "d10" -> LineFit
    section_order: tuple = ()

    def to_dict(self):
        return {
            "overall": {"d'10": self.overall.d10, "d'50": self.overall.d50, "d'90": self.overall.d90},
            "section_order": list(self.section_order),
            "ratios": {
                sid: {"d10/d'10": r[0], "d50/d'50": r[1], "d90/d'90": r[2]}
                for sid, r in self.ratios.items()
            },
            "fits": {k: f.to_dict() for k, f in self.fits.items()},
        }


def _diameters_and_volumes(fragments):
    d = np.array([f.d for f in fragments], dtype=np.float64)
    v = np.array([f.volume for f in fragments], dtype=np.float64)
    return d, v


def size_distribution(d, weights, mode, bin_width, total_volume=0.0):
    """Histogram + exact cumulative curve from raw diameters and weights."""
    d = np.asarray(d, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if d.size == 0:
        raise EmptyInputError("no fragments")
    if not bin_width > 0:
        raise InvalidArgument("bin_width must be > 0")
    total = weights.sum()
    if not total > 0:
        raise InvalidArgument("total weight must be positive")
    nbins = int(math.floor(d.max() / bin_width)) + 1
    edges = np.arange(nbins + 1, dtype=np.float64) * bin_width
    idx = np.minimum(np.floor(d / bin_width).astype(np.int64), nbins - 1)
    shares = np.bincount(idx, weights=weights, minlength=nbins) / total
    # equal diameters form one point so duplicated lists give the same curve
    ds, inv = np.unique(d, return_inverse=True)
    F = np.cumsum(np.bincount(inv.ravel(), weights=weights, minlength=ds.size)) / total
    F[-1] = 1.0
    cum = np.column_stack([np.concatenate([[ds[0]], ds]), np.concatenate([[0.0], F])])
    return SizeDistribution(mode, float(bin_width), edges, shares, cum, int(d.size), float(total_volume))


def psd(fragments, mode="count", bin_width=None):
    """Count- or volume-weighted size distribution of ``fragments``."""
    if mode not in DEFAULT_BIN_WIDTH:
        raise InvalidArgument(f"mode must be 'count' or 'volume', got {mode!r}")
    if bin_width is None:
        bin_width = DEFAULT_BIN_WIDTH[mode]
    fragments = list(fragments)
    if not fragments:
        raise EmptyInputError("psd of an empty fragment list")
    d, v = _diameters_and_volumes(fragments)
    w = v if mode == "volume" else np.ones_like(d)
    return size_distribution(d, w, mode, bin_width, v.sum())


def passing_diameter(cumulative, p):
    """Invert a piecewise-linear cumulative curve ``[(d, F), ...]`` at fraction ``p``."""
    cum = np.asarray(cumulative, dtype=np.float64)
    d, F = cum[1:, 0], cum[1:, 1]
    i = int(np.searchsorted(F, p, side="left"))
    if i == 0:
        return float(d[0])
    if i >= len(F):
        return float(d[-1])
    f0, f1 = F[i - 1], F[i]
    return float(d[i - 1] + (d[i] - d[i - 1]) * (p - f0) / (f1 - f0))


def characteristic_diameters(dist):
    if dist.mode != "volume":
        raise InvalidArgument("characteristic diameters need a volume-mode distribution")
    return CharacteristicDiameters(*(passing_diameter(dist.cumulative, p) for p in PERCENTILES))


def count_summary(fragments, small_cm=5.0, large_cm=20.0):
    """``(share below small_cm, share above large_cm, mean d)`` by count."""
    d = np.array([f.d for f in fragments], dtype=np.float64)
    if d.size == 0:
        raise EmptyInputError("count summary of an empty fragment list")
    return float(np.mean(d < small_cm)), float(np.mean(d > large_cm)), float(d.mean())


def mean_ci95(values):
    """Mean and two-sided 95% Student-t interval."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples for a confidence interval, got {n}")
    m = float(x.mean())
    half = float(stats.t.ppf(0.975, n - 1) * x.std(ddof=1) / math.sqrt(n))
    return m, (m - half, m + half)


def section_report(per_image_cd, section_id, depth_range=""):
    per_image = tuple(per_image_cd)
    if len(per_image) < 2:
        raise InsufficientSamplesError(
            f"section {section_id} has {len(per_image)} image(s); at least 2 are required")
    means, cis = [], {}
    for k, name in enumerate(("d10", "d50", "d90")):
        m, ci = mean_ci95([cd.as_tuple()[k] for cd in per_image])
        means.append(m)
        cis[name] = ci
    return SectionReport(str(section_id), str(depth_range), per_image, CharacteristicDiameters(*means), cis)


def pool_overall(fragments):
    """Volume PSD and characteristic diameters of all fragments pooled together."""
    dist = psd(fragments, "volume")
    return dist, characteristic_diameters(dist)


def relative_diameters(section, overall):
    s = section.as_tuple() if isinstance(section, CharacteristicDiameters) else tuple(section)
    o = overall.as_tuple() if isinstance(overall, CharacteristicDiameters) else tuple(overall)
    if any(not v > 0 for v in o):
        raise InvalidArgument("overall characteristic diameters must be positive")
    return tuple(si / oi for si, oi in zip(s, o))


def fit_line(points):
    """Ordinary least-squares line through ``[(x, y), ...]``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidArgument("need at least 2 points")
    x, y = pts[:, 0], pts[:, 1]
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise InvalidArgument("all x values are equal")
    slope = float(dx @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    return LineFit(slope, intercept, tuple((y - (slope * x + intercept)).tolist()))


def segregation(section_means, overall):
    """Relative characteristic diameters per section and their line fits.

    ``section_means`` is an ordered mapping ``section_id -> CharacteristicDiameters``
    (crest first); sections are placed at x = 1, 2, ...
    """
    order = tuple(section_means)
    if len(order) < 2:
        raise InsufficientSamplesError("need at least 2 sections")
    ratios = {sid: relative_diameters(section_means[sid], overall) for sid in order}
    fits = {}
    for k, name in enumerate(("d10", "d50", "d90")):
        fits[name] = fit_line([(i + 1, ratios[sid][k]) for i, sid in enumerate(order)])
    if not isinstance(overall, CharacteristicDiameters):
        overall = CharacteristicDiameters(*overall)
    return SegregationReport(overall, ratios, fits, order)


def load_reference():
    """Bundled published section means/CIs and whole-slope diameters."""
    return json.loads(resources.files("fragscan").joinpath("data/reference.json").read_text())


def reference_segregation(ref=None):
    """Segregation report computed from the bundled section means and overall diameters."""
    ref = ref or load_reference()
    means = OrderedDict(
        (s["section_id"], CharacteristicDiameters(s["mean"]["d10"], s["mean"]["d50"], s["mean"]["d90"]))
        for s in ref["sections"]
    )
    o = ref["overall"]
    return segregation(means, CharacteristicDiameters(o["d10"], o["d50"], o["d90"]))
