"""Segmentation scoring: confusion counts, accuracy metrics and training losses."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

CLASS_NAMES = ("Background", "Body", "Boundary")
CLIP_EPS = 1e-12


@dataclass(frozen=True)
class ConfusionMatrix:
    """One-vs-rest pixel counts, one entry per class."""
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray

    @property
    def n_classes(self):
        return len(self.tp)

    @property
    def total(self):
        return int(self.tp[0] + self.fp[0] + self.tn[0] + self.fn[0])


@dataclass(frozen=True)
class MetricsReport:
    class_names: tuple
    iou: tuple
    precision: tuple
    recall: tuple
    f1: tuple
    pixel_accuracy: tuple  # (TP+TN)/all per class
    miou: float
    mpa: float
    mpa_conventional: float
    classes: tuple  # class indices averaged into miou/mpa
    foreground: dict = field(default_factory=dict)  # miou/mpa over Body+Boundary
    zero_division: tuple = ()  # (class name, metric) pairs reported as 0

    def to_dict(self):
        per_class = {
            name: {
                "IoU": self.iou[k],
                "Precision": self.precision[k],
                "Recall": self.recall[k],
                "F1": self.f1[k],
                "PA": self.pixel_accuracy[k],
            }
            for k, name in enumerate(self.class_names)
        }
        return {
            "mIoU": self.miou,
            "mPA": self.mpa,
            "mPA_conventional": self.mpa_conventional,
            "averaged_classes": [self.class_names[k] for k in self.classes],
            "foreground": self.foreground,
            "per_class": per_class,
            "zero_division": [list(z) for z in self.zero_division],
        }

    def table(self):
        """Plain-text table, columns as in the ablation table (percent)."""
        cols = ["mIoU", "mPA"]
        vals = [self.miou, self.mpa]
        for k in range(1, len(self.class_names)):
            name = self.class_names[k]
            for metric, series in (("IoU", self.iou), ("Precision", self.precision),
                                   ("Recall", self.recall), ("F1", self.f1)):
                cols.append(f"{name} {metric}")
                vals.append(series[k])
        width = max(len(c) for c in cols) + 2
        head = "".join(c.rjust(width) for c in cols)
        row = "".join(f"{100 * v:.2f}".rjust(width) for v in vals)
        return head + "\n" + row


def confusion(pred, truth, n_classes=3):
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise InvalidArgument(f"prediction shape {p.shape} != truth shape {t.shape}")
    p = p.ravel().astype(np.int64)
    t = t.ravel().astype(np.int64)
    for name, a in (("prediction", p), ("truth", t)):
        if a.size and (a.min() < 0 or a.max() >= n_classes):
            raise InvalidArgument(f"{name} holds labels outside 0..{n_classes - 1}")
    joint = np.bincount(t * n_classes + p, minlength=n_classes * n_classes).reshape(n_classes, n_classes)
    tp = np.diag(joint).copy()
    fp = joint.sum(axis=0) - tp
    fn = joint.sum(axis=1) - tp
    tn = p.size - tp - fp - fn
    return ConfusionMatrix(tp, fp, tn, fn)


def _ratio(num, den, flags, key):
    if den == 0:
        flags.append(key)
        return 0.0
    return float(num) / float(den)


def metrics(cm, classes=None, class_names=None):
    """Per-class Precision/Recall/F1/IoU and their class means.

    ``mpa`` averages (TP+TN)/(TP+TN+FP+FN) over classes, which is the
    formula the reference model was scored with; ``mpa_conventional`` is the
    usual mean of TP/(TP+FN).  ``classes`` picks which classes the means run
    over (all by default).  Empty denominators give 0 and are listed in
    ``zero_division``.
    """
    k = cm.n_classes
    if class_names is None:
        class_names = CLASS_NAMES if k == 3 else tuple(f"class{i}" for i in range(k))
    classes = tuple(range(k)) if classes is None else tuple(classes)
    flags = []
    iou, prec, rec, f1, pa = [], [], [], [], []
    for c in range(k):
        tp, fp, tn, fn = (int(v[c]) for v in (cm.tp, cm.fp, cm.tn, cm.fn))
        name = class_names[c]
        p = _ratio(tp, tp + fp, flags, (name, "Precision"))
        r = _ratio(tp, tp + fn, flags, (name, "Recall"))
        f1.append(_ratio(2 * p * r, p + r, flags, (name, "F1")))
        prec.append(p)
        rec.append(r)
        iou.append(_ratio(tp, tp + fp + fn, flags, (name, "IoU")))
        pa.append(_ratio(tp + tn, tp + tn + fp + fn, flags, (name, "PA")))
    sel = list(classes)
    report_fg = {}
    if k == 3:
        report_fg = {
            "mIoU": float(np.mean([iou[1], iou[2]])),
            "mPA": float(np.mean([pa[1], pa[2]])),
        }
    return MetricsReport(
        class_names=tuple(class_names),
        iou=tuple(iou),
        precision=tuple(prec),
        recall=tuple(rec),
        f1=tuple(f1),
        pixel_accuracy=tuple(pa),
        miou=float(np.mean([iou[c] for c in sel])),
        mpa=float(np.mean([pa[c] for c in sel])),
        mpa_conventional=float(np.mean([rec[c] for c in sel])),
        classes=classes,
        foreground=report_fg,
        zero_division=tuple(flags),
    )


# -- losses --------------------------------------------------------------------

def check_probability_map(p, y=None, atol=1e-6):
    """Validate an ``(N, K)`` probability map and optional one-hot truth."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise InvalidArgument(f"probabilities must be a non-empty (N, K) array, got {p.shape}")
    if (p < -atol).any() or (p > 1 + atol).any() or not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=atol):
        raise InvalidArgument("each pixel's probabilities must lie in [0, 1] and sum to 1")
    if y is None:
        return p
    y = np.asarray(y, dtype=np.float64)
    if y.shape != p.shape:
        raise InvalidArgument(f"truth shape {y.shape} != probability shape {p.shape}")
    if not (np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=1) == 1).all()):
        raise InvalidArgument("truth must be one-hot per pixel")
    return p, y


def one_hot(labels, n_classes):
    lab = np.asarray(labels).ravel().astype(np.int64)
    return np.eye(n_classes)[lab]


def cross_entropy(p, y):
    p, y = check_probability_map(p, y)
    return float(-(y * np.log(np.clip(p, CLIP_EPS, 1.0))).sum() / p.shape[0])


def dice_loss(s, g):
    s, g = check_probability_map(s, g)
    return float(1.0 - 2.0 * (g * s).sum() / (g.sum() + s.sum()))


def total_loss(p, y):
    return cross_entropy(p, y) + dice_loss(p, y)
