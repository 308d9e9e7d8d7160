"""Annotation records and the per-environment experiment splits.

Records are stored as JSON Lines, one image per line::

    {"image_id": ..., "env_id": ..., "width": ..., "height": ...,
     "boxes": [{"x_min": ..., "y_min": ..., "x_max": ..., "y_max": ...,
                "status": "open" | "closed", "confidence": ...}]}

Ground-truth files omit ``confidence``; prediction files carry it on every box.
"""
import enum
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from doorscape._io import atomic_write_text
from doorscape.errors import SchemaError, TooFewImages, UnknownEnvironment


class DoorStatus(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


# canonical order puts closed doors before open ones
_STATUS_RANK = {DoorStatus.CLOSED: 0, DoorStatus.OPEN: 1}


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    status: DoorStatus
    confidence: float = None

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise SchemaError(
                f"inverted box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def area(self):
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def sort_key(self):
        return (_STATUS_RANK[self.status], self.x_min, self.y_min, self.x_max, self.y_max,
                -1.0 if self.confidence is None else self.confidence)

    def to_dict(self):
        d = {"x_min": self.x_min, "y_min": self.y_min, "x_max": self.x_max,
             "y_max": self.y_max, "status": self.status.value}
        if self.confidence is not None:
            d["confidence"] = self.confidence
        return d


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    env_id: str
    width: int
    height: int
    boxes: tuple = ()

    def canonical(self):
        return ImageRecord(self.image_id, self.env_id, self.width, self.height,
                           tuple(sorted(self.boxes, key=Box.sort_key)))

    def to_dict(self):
        return {"image_id": self.image_id, "env_id": self.env_id, "width": self.width,
                "height": self.height, "boxes": [b.to_dict() for b in self.boxes]}


def _number(d, key, where):
    try:
        v = d[key]
    except KeyError:
        raise SchemaError(f"{where}: missing field {key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError(f"{where}: field {key!r} must be a finite number")
    return v


def parse_record(d, kind=None):
    """Build an :class:`ImageRecord` from a decoded JSON object.

    ``kind`` may be ``"gt"`` (confidence forbidden), ``"pred"`` (confidence
    required) or ``None`` (either).
    """
    if not isinstance(d, dict):
        raise SchemaError("record must be a JSON object")
    image_id = d.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise SchemaError("record: missing or empty 'image_id'")
    where = f"image {image_id}"
    env_id = d.get("env_id")
    if not isinstance(env_id, str) or not env_id:
        raise SchemaError(f"{where}: missing or empty 'env_id'")
    width = _number(d, "width", where)
    height = _number(d, "height", where)
    if int(width) != width or int(height) != height or width <= 0 or height <= 0:
        raise SchemaError(f"{where}: width and height must be positive integers")
    raw_boxes = d.get("boxes")
    if not isinstance(raw_boxes, list):
        raise SchemaError(f"{where}: 'boxes' must be a list")
    boxes = []
    for k, b in enumerate(raw_boxes):
        bw = f"{where}, box {k}"
        if not isinstance(b, dict):
            raise SchemaError(f"{bw}: must be an object")
        coords = [_number(b, key, bw) for key in ("x_min", "y_min", "x_max", "y_max")]
        try:
            status = DoorStatus(b.get("status"))
        except ValueError:
            raise SchemaError(f"{bw}: bad status {b.get('status')!r}") from None
        conf = b.get("confidence")
        if conf is not None:
            conf = _number(b, "confidence", bw)
        if kind == "gt" and conf is not None:
            raise SchemaError(f"{bw}: ground-truth boxes must not carry a confidence")
        if kind == "pred" and conf is None:
            raise SchemaError(f"{bw}: prediction boxes need a confidence")
        try:
            box = Box(*coords, status, conf)
        except SchemaError as exc:
            raise SchemaError(f"{bw}: {exc}") from None
        if box.x_min < 0 or box.y_min < 0 or box.x_max > width or box.y_max > height:
            raise SchemaError(f"{bw}: box lies outside the {int(width)}x{int(height)} image")
        boxes.append(box)
    return ImageRecord(image_id, env_id, int(width), int(height), tuple(boxes))


def load_records(path, kind=None):
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            try:
                rec = parse_record(d, kind)
            except SchemaError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
            if rec.image_id in seen:
                raise SchemaError(f"{path}: line {lineno}: duplicate image_id {rec.image_id}")
            seen.add(rec.image_id)
            records.append(rec)
    return records


def records_to_jsonl(records):
    return "".join(json.dumps(r.canonical().to_dict()) + "\n" for r in records)


def save_records(records, path):
    atomic_write_text(path, records_to_jsonl(records))


@dataclass(frozen=True)
class SplitPlan:
    env_id: str
    quarters: tuple  # four tuples of image ids
    seed: int

    def to_dict(self):
        return {"env_id": self.env_id, "seed": self.seed,
                "quarters": [list(q) for q in self.quarters]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"


def split_environment(records, seed=0):
    """Randomly partition one environment's images into four balanced quarters.

    Image ids are sorted, permuted with a seeded generator and dealt
    round-robin, so quarter sizes differ by at most one.
    """
    envs = sorted({r.env_id for r in records})
    if len(envs) > 1:
        raise SchemaError(f"split_environment expects one environment, got {envs}")
    ids = sorted(r.image_id for r in records)
    if len(ids) < 4:
        raise TooFewImages(
            f"environment {envs[0] if envs else '?'} has {len(ids)} images; need at least 4"
        )
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate image ids in environment")
    perm = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    quarters = tuple(tuple(shuffled[k::4]) for k in range(4))
    return SplitPlan(envs[0], quarters, int(seed))


def compose_finetune_sets(plan):
    """Nested fine-tuning sets (25/50/75 %) and the held-out test quarter."""
    q1, q2, q3, q4 = (list(q) for q in plan.quarters)
    return OrderedDict(
        train_25=q1,
        train_50=q1 + q2,
        train_75=q1 + q2 + q3,
        test=q4,
    )


@dataclass
class LeaveOneOut:
    general_train: list = field(default_factory=list)
    env_set: list = field(default_factory=list)


def leave_one_out(records, env_id):
    """Split records into the held-out environment and everything else."""
    if not any(r.env_id == env_id for r in records):
        raise UnknownEnvironment(f"environment {env_id!r} not present in the dataset")
    out = LeaveOneOut()
    for r in records:
        (out.env_set if r.env_id == env_id else out.general_train).append(r)
    return out


def select(records, image_ids):
    """Records whose id is in ``image_ids``, in the order of ``image_ids``."""
    by_id = {r.image_id: r for r in records}
    return [by_id[i] for i in image_ids]
