"""Door-status detector evaluation.

Two regimes are implemented:

* per-class average precision over the whole confidence range, using
  all-point interpolation of the precision/recall curve;
* a deployment-style matcher that keeps only confident boxes and counts, per
  ground-truth door, a true positive (right status) or false positive (wrong
  status), plus background false detections that overlap no door.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from doorscape.dataset_io import DoorStatus
from doorscape.errors import ConfigError, ImageMismatch, NoGroundTruth

CLASSES = (DoorStatus.CLOSED, DoorStatus.OPEN)


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5  # rho_a
    confidence_threshold: float = 0.75  # rho_c
    max_detections: int = 10

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError("iou_threshold must be in (0, 1]")
        if not self.confidence_threshold >= 0.0:
            raise ConfigError("confidence_threshold must be >= 0")
        if self.max_detections < 1:
            raise ConfigError("max_detections must be >= 1")

    def to_dict(self):
        return {"iou_threshold": self.iou_threshold,
                "confidence_threshold": self.confidence_threshold,
                "max_detections": self.max_detections}


def iou(a, b):
    """Intersection over union of two boxes; status is ignored."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


@dataclass
class MatchOutcome:
    """Per-image matching result; indices refer to the input lists.

    ``true_positives``, ``false_positives`` and ``suppressed`` hold
    ``(gt_index, pred_index)`` pairs; ``background`` holds prediction indices.
    ``dropped`` lists predictions removed by the confidence gate or the
    detection cap; they take no part in the counts.
    """

    true_positives: list = field(default_factory=list)
    false_positives: list = field(default_factory=list)
    background: list = field(default_factory=list)
    suppressed: list = field(default_factory=list)
    dropped: list = field(default_factory=list)


def match_image(preds, gts, cfg=EvalConfig()):
    kept = [i for i, p in enumerate(preds) if p.confidence >= cfg.confidence_threshold]
    kept.sort(key=lambda i: (-preds[i].confidence, i))
    out = MatchOutcome()
    out.dropped = sorted(set(range(len(preds))) - set(kept[:cfg.max_detections]))
    kept = kept[:cfg.max_detections]

    on_door = {}
    for i in kept:
        best, best_iou = None, -1.0
        for j, g in enumerate(gts):
            v = iou(preds[i], g)
            if v >= cfg.iou_threshold and v > best_iou:
                best, best_iou = j, v
        if best is None:
            out.background.append(i)
        else:
            on_door.setdefault(best, []).append(i)

    for j in sorted(on_door):
        chosen, *rest = on_door[j]  # already in confidence order
        if preds[chosen].status == gts[j].status:
            out.true_positives.append((j, chosen))
        else:
            out.false_positives.append((j, chosen))
        out.suppressed.extend((j, i) for i in rest)
    out.background.sort()
    return out


@dataclass
class Counts:
    gt: int = 0
    tp: int = 0
    fp: int = 0
    bfd: int = 0
    suppressed: int = 0

    def __add__(self, other):
        return Counts(self.gt + other.gt, self.tp + other.tp, self.fp + other.fp,
                      self.bfd + other.bfd, self.suppressed + other.suppressed)

    def pct(self, name):
        """``count / GT`` for ``tp``, ``fp`` or ``bfd`` (0 when GT is 0)."""
        return getattr(self, name) / self.gt if self.gt else 0.0

    @property
    def tp_pct(self):
        return self.pct("tp")

    @property
    def fp_pct(self):
        return self.pct("fp")

    @property
    def bfd_pct(self):
        return self.pct("bfd")

    def to_dict(self):
        return {"GT": self.gt, "TP": self.tp, "FP": self.fp, "BFD": self.bfd,
                "suppressed": self.suppressed, "TP_pct": self.tp_pct,
                "FP_pct": self.fp_pct, "BFD_pct": self.bfd_pct}


def count_outcome(outcome, n_gt):
    return Counts(n_gt, len(outcome.true_positives), len(outcome.false_positives),
                  len(outcome.background), len(outcome.suppressed))


@dataclass
class EvalReport:
    config: EvalConfig
    counts: Counts
    ap: dict  # DoorStatus -> AP fraction, or None when the class has no GT
    per_env: dict = field(default_factory=dict)  # env_id -> (Counts, ap dict)

    gt = property(lambda self: self.counts.gt)
    tp = property(lambda self: self.counts.tp)
    fp = property(lambda self: self.counts.fp)
    bfd = property(lambda self: self.counts.bfd)
    tp_pct = property(lambda self: self.counts.tp_pct)
    fp_pct = property(lambda self: self.counts.fp_pct)
    bfd_pct = property(lambda self: self.counts.bfd_pct)

    @property
    def ap_closed(self):
        return self.ap.get(DoorStatus.CLOSED)

    @property
    def ap_open(self):
        return self.ap.get(DoorStatus.OPEN)

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "totals": self.counts.to_dict(),
            "per_class_ap": {s.value: self.ap.get(s) for s in CLASSES},
            "per_env": {
                env: {"totals": c.to_dict(), "per_class_ap": {s.value: ap.get(s) for s in CLASSES}}
                for env, (c, ap) in sorted(self.per_env.items())
            },
        }

    @classmethod
    def from_dict(cls, d):
        def counts(t):
            return Counts(t["GT"], t["TP"], t["FP"], t["BFD"], t.get("suppressed", 0))

        def aps(a):
            return {s: a.get(s.value) for s in CLASSES}

        cfg = EvalConfig(**d["config"])
        per_env = {env: (counts(v["totals"]), aps(v["per_class_ap"]))
                   for env, v in d.get("per_env", {}).items()}
        return cls(cfg, counts(d["totals"]), aps(d["per_class_ap"]), per_env)


def _align(pred_set, gt_set):
    gts = {r.image_id: r for r in gt_set}
    preds = {}
    for r in pred_set:
        if r.image_id not in gts:
            raise ImageMismatch(f"prediction for unknown image_id {r.image_id!r}")
        preds[r.image_id] = r
    return gts, preds


def pr_curve(pred_set, gt_set, status, iou_threshold=0.5):
    """Ranked (recall, precision) points for one door status.

    Predictions of that status are ranked by confidence (ties by image id,
    then box order); each claims the best-overlapping unclaimed ground-truth
    box of the same status with IOU >= ``iou_threshold``.
    """
    status = DoorStatus(status)
    gts, preds = _align(pred_set, gt_set)
    gt_boxes = {k: [b for b in r.boxes if b.status == status] for k, r in gts.items()}
    n_pos = sum(len(v) for v in gt_boxes.values())
    if n_pos == 0:
        raise NoGroundTruth(f"no ground-truth {status.value} doors; AP is undefined")
    ranked = [
        (-b.confidence, image_id, k, b)
        for image_id, r in preds.items()
        for k, b in enumerate(r.boxes)
        if b.status == status
    ]
    ranked.sort(key=lambda t: t[:3])
    claimed = {k: [False] * len(v) for k, v in gt_boxes.items()}
    tp = fp = 0
    curve = []
    for _, image_id, _, box in ranked:
        best, best_iou = None, -1.0
        for j, g in enumerate(gt_boxes[image_id]):
            if claimed[image_id][j]:
                continue
            v = iou(box, g)
            if v >= iou_threshold and v > best_iou:
                best, best_iou = j, v
        if best is None:
            fp += 1
        else:
            claimed[image_id][best] = True
            tp += 1
        curve.append((tp / n_pos, tp / (tp + fp)))
    return curve


def average_precision(curve):
    """All-point interpolated AP.

    Precision at recall r is the best precision at any recall >= r; the AP
    sums it over each distinct recall level times the recall gained there.
    """
    if not curve:
        return 0.0
    pts = sorted(curve)
    recalls = np.array([p[0] for p in pts])
    prec = np.array([p[1] for p in pts])
    envelope = np.maximum.accumulate(prec[::-1])[::-1]
    ap = 0.0
    prev = 0.0
    for k in range(len(pts)):
        if k > 0 and recalls[k] == recalls[k - 1]:
            continue
        ap += (recalls[k] - prev) * envelope[k]
        prev = recalls[k]
    return float(ap)


def voc07_average_precision(curve):
    """11-point interpolated AP (recall levels 0, 0.1, ..., 1)."""
    total = 0.0
    for t in np.linspace(0.0, 1.0, 11):
        ps = [p for r, p in curve if r >= t]
        total += max(ps) if ps else 0.0
    return total / 11.0


def _class_ap(pred_set, gt_set, iou_threshold):
    out = {}
    for s in CLASSES:
        try:
            out[s] = average_precision(pr_curve(pred_set, gt_set, s, iou_threshold))
        except NoGroundTruth:
            out[s] = None
    return out


def evaluate(pred_set, gt_set, cfg=EvalConfig()):
    """Counts and AP over a prediction set; images without predictions count as empty."""
    gts, preds = _align(pred_set, gt_set)
    per_env_counts = {}
    for image_id, g in gts.items():
        p = preds.get(image_id)
        pboxes = list(p.boxes) if p is not None else []
        c = count_outcome(match_image(pboxes, list(g.boxes), cfg), len(g.boxes))
        per_env_counts[g.env_id] = per_env_counts.get(g.env_id, Counts()) + c
    total = sum(per_env_counts.values(), Counts())
    per_env = {}
    for env, c in per_env_counts.items():
        env_gt = [g for g in gt_set if g.env_id == env]
        env_ids = {g.image_id for g in env_gt}
        env_pred = [p for p in pred_set if p.image_id in env_ids]
        per_env[env] = (c, _class_ap(env_pred, env_gt, cfg.iou_threshold))
    ap = _class_ap(pred_set, gt_set, cfg.iou_threshold)
    return EvalReport(cfg, total, ap, per_env)


def sweep_confidence(pred_set, gt_set, thresholds, cfg=EvalConfig()):
    """One report per confidence threshold, thresholds ascending."""
    thresholds = list(thresholds)
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ConfigError("sweep thresholds must be sorted ascending")
    return [evaluate(pred_set, gt_set, replace(cfg, confidence_threshold=t)) for t in thresholds]


def default_thresholds(steps=21):
    return [round(k / (steps - 1), 10) for k in range(steps)]


# -- cross-detector comparison ------------------------------------------------

@dataclass
class AggregateStat:
    mean: float
    sigma: float
    increment_mean: float = None  # percent
    increment_sigma: float = None
    excluded: int = 0  # environments whose reference AP was 0 or missing


def _mean_sigma(values):
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=0))


def compare_reports(detectors):
    """Mean AP, its spread and the increments over the preceding detector.

    ``detectors`` is an ordered list of ``(name, {env_id: EvalReport})``.
    The increment of a detector is the mean over environments of
    ``(AP - AP_prev) / AP_prev * 100``, i.e. the mean of per-environment
    increments rather than the increment of the means. Returns a list of
    ``(name, {DoorStatus: AggregateStat})``.
    """
    if not detectors:
        return []
    envs = sorted(detectors[0][1])
    for name, reports in detectors:
        if sorted(reports) != envs:
            raise ConfigError(f"detector {name} covers environments {sorted(reports)}, "
                              f"expected {envs}")
    table = []
    prev = None
    for name, reports in detectors:
        row = {}
        for s in CLASSES:
            vals = [reports[e].ap.get(s) for e in envs]
            present = [v for v in vals if v is not None]
            if not present:
                row[s] = AggregateStat(None, None)
                continue
            mean, sigma = _mean_sigma(present)
            stat = AggregateStat(mean, sigma)
            if prev is not None:
                incs = []
                for e, v in zip(envs, vals):
                    ref = prev[e].ap.get(s)
                    if v is None or ref is None or ref <= 0:
                        stat.excluded += 1
                        continue
                    incs.append((v - ref) / ref * 100.0)
                if incs:
                    stat.increment_mean, stat.increment_sigma = _mean_sigma(incs)
            row[s] = stat
        table.append((name, row))
        prev = reports
    return table


def whole_percent(fraction):
    """Whole percent truncated toward zero, so 18/235 renders as "7"."""
    if fraction is None or math.isnan(fraction):
        return "--"
    v = fraction * 100.0
    return str(int(math.copysign(math.floor(abs(v) + 1e-9), v)))


def _count_pct(count, gt):
    return str(100 * count // gt) if gt else "0"


def render_ap_table(table):
    """Markdown table with columns Exp., Label, AP, σ, Increment, σ."""
    with_inc = len(table) > 1
    head = ["Exp.", "Label", "AP", "σ"] + (["Increment", "σ"] if with_inc else [])
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for k, (name, row) in enumerate(table):
        for s in CLASSES:
            st = row[s]
            cells = [name, s.value.capitalize(), whole_percent(st.mean), whole_percent(st.sigma)]
            if with_inc:
                if k == 0 or st.increment_mean is None:
                    cells += ["--", "--"]
                else:
                    cells += [whole_percent(st.increment_mean / 100.0) + "%",
                              whole_percent(st.increment_sigma / 100.0)]
            lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_counts_table(rows):
    """Markdown table of GT / TP / FP / BFD with GT-scaled percentages.

    ``rows`` is a list of ``(env_label, detector_name, Counts)``.
    """
    head = ["Env.", "Exp.", "GT", "TP (TP%)", "FP (FP%)", "BFD (BFD%)"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for env, name, c in rows:
        lines.append("| " + " | ".join([
            env, name, str(c.gt),
            f"{c.tp} ({_count_pct(c.tp, c.gt)}%)",
            f"{c.fp} ({_count_pct(c.fp, c.gt)}%)",
            f"{c.bfd} ({_count_pct(c.bfd, c.gt)}%)",
        ]) + " |")
    return "\n".join(lines) + "\n"


def comparison_to_dict(table):
    return [
        {"detector": name,
         "classes": {s.value: {"mean": st.mean, "sigma": st.sigma,
                               "increment_mean": st.increment_mean,
                               "increment_sigma": st.increment_sigma,
                               "excluded": st.excluded}
                     for s, st in row.items()}}
        for name, row in table
    ]
