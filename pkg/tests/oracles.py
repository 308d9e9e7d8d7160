"""Independent reference implementations used as test oracles.

They favour obviousness over speed: pixel counting for IOU, and direct
re-statement of the matching rules with explicit enumeration.
"""
import numpy as np

from doorscape.dataset_io import Box, DoorStatus, ImageRecord

STATUSES = (DoorStatus.OPEN, DoorStatus.CLOSED)


def pixel_iou(a, b, size=64):
    """IOU of integer boxes by counting unit pixels on a raster."""
    ma = np.zeros((size, size), bool)
    mb = np.zeros((size, size), bool)
    ma[int(a.y_min):int(a.y_max), int(a.x_min):int(a.x_max)] = True
    mb[int(b.y_min):int(b.y_max), int(b.x_min):int(b.x_max)] = True
    union = (ma | mb).sum()
    return float((ma & mb).sum() / union) if union else 0.0


def brute_match(preds, gts, rho_a, rho_c, cap):
    """Matching rule restated from its definition.

    Returns sorted lists (tp pairs, fp pairs, background, suppressed pairs).
    """
    confident = [i for i in range(len(preds)) if preds[i].confidence >= rho_c]
    # rank by confidence, earlier index first on ties, and keep the cap
    ranked = sorted(confident, key=lambda i: (-preds[i].confidence, i))
    kept = set(ranked[:cap])
    door_of = {}
    for i in kept:
        overlaps = [(pixel_or_exact_iou(preds[i], g), j) for j, g in enumerate(gts)]
        passing = [(v, j) for v, j in overlaps if v >= rho_a]
        if passing:
            top = max(v for v, _ in passing)
            door_of[i] = min(j for v, j in passing if v == top)
    tp, fp, sup = [], [], []
    for j in range(len(gts)):
        claim = [i for i in kept if door_of.get(i) == j]
        if not claim:
            continue
        best_conf = max(preds[i].confidence for i in claim)
        chosen = min(i for i in claim if preds[i].confidence == best_conf)
        (tp if preds[chosen].status == gts[j].status else fp).append((j, chosen))
        sup += [(j, i) for i in claim if i != chosen]
    bg = sorted(i for i in kept if i not in door_of)
    return sorted(tp), sorted(fp), bg, sorted(sup)


def pixel_or_exact_iou(a, b):
    """Exact IOU with the intersection written as a product of clipped overlaps."""
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    if inter == 0:
        return 0.0
    union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + \
        (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter
    return inter / union


def brute_pr_curve(pred_set, gt_set, status, rho_a):
    """Recall and precision at every rank, each prefix replayed from scratch."""
    gts = {r.image_id: [b for b in r.boxes if b.status == status] for r in gt_set}
    npos = sum(len(v) for v in gts.values())
    ranked = sorted(
        ((b.confidence, r.image_id, k, b) for r in pred_set for k, b in enumerate(r.boxes)
         if b.status == status),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    curve = []
    for n in range(1, len(ranked) + 1):
        used = set()
        hits = 0
        for _, image_id, _, box in ranked[:n]:
            options = [(pixel_or_exact_iou(box, g), j) for j, g in enumerate(gts[image_id])
                       if (image_id, j) not in used]
            options = [(v, j) for v, j in options if v >= rho_a]
            if options:
                top = max(v for v, _ in options)
                used.add((image_id, min(j for v, j in options if v == top)))
                hits += 1
        curve.append((hits / npos, hits / n))
    return curve


def random_box(rng, size=20, conf=False):
    x0, x1 = sorted(rng.choice(size + 1, 2, replace=False))
    y0, y1 = sorted(rng.choice(size + 1, 2, replace=False))
    status = STATUSES[rng.integers(2)]
    c = float(rng.choice([0.3, 0.5, 0.6, 0.75, 0.8, 0.9, 1.0])) if conf else None
    return Box(float(x0), float(y0), float(x1), float(y1), status, c)


def near_box(rng, g, conf=True):
    """Prediction jittered around a ground-truth box so matches are common."""
    j = rng.integers(-2, 3, 4)
    x0, x1 = sorted((g.x_min + j[0], g.x_max + j[1]))
    y0, y1 = sorted((g.y_min + j[2], g.y_max + j[3]))
    x0, y0 = max(0.0, x0), max(0.0, y0)
    x1, y1 = min(20.0, max(x1, x0 + 1)), min(20.0, max(y1, y0 + 1))
    if x1 <= x0:
        x0 = x1 - 1
    if y1 <= y0:
        y0 = y1 - 1
    status = g.status if rng.random() < 0.7 else STATUSES[rng.integers(2)]
    c = float(rng.choice([0.3, 0.5, 0.6, 0.75, 0.8, 0.9, 1.0]))
    return Box(float(x0), float(y0), float(x1), float(y1), status, c)


def random_instance(rng, max_images=5, max_gt=4, max_pred=6):
    """Ground-truth and prediction records on a 20x20 canvas."""
    gt_set, pred_set = [], []
    for k in range(int(rng.integers(1, max_images + 1))):
        image_id = f"im{k}"
        gts = [random_box(rng) for _ in range(int(rng.integers(0, max_gt + 1)))]
        preds = []
        for _ in range(int(rng.integers(0, max_pred + 1))):
            if gts and rng.random() < 0.7:
                preds.append(near_box(rng, gts[int(rng.integers(len(gts)))]))
            else:
                preds.append(random_box(rng, conf=True))
        gt_set.append(ImageRecord(image_id, f"env{k % 2}", 20, 20, tuple(gts)))
        pred_set.append(ImageRecord(image_id, f"env{k % 2}", 20, 20, tuple(preds)))
    return gt_set, pred_set


def random_ranked_curve(rng):
    """PR curve of a random ranked TP/FP sequence (1..20 positives, 1..30 predictions)."""
    npos = int(rng.integers(1, 21))
    n = int(rng.integers(1, 31))
    tp = fp = 0
    curve = []
    for _ in range(n):
        if tp < npos and rng.random() < 0.5:
            tp += 1
        else:
            fp += 1
        curve.append((tp / npos, tp / (tp + fp)))
    return curve
