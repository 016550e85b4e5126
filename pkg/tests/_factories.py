"""Seeded random generators for trial documents, result rows, and metric
inputs shared across test modules."""

from __future__ import annotations

import numpy as np

from lemur.metrics import Detection, GroundTruth, MaskPair
from lemur.registry import EpochResult, ResultRow, TrialDocument
from lemur.config import ConfigId

TASKS = ("img-classification", "img-segmentation", "obj-detection")
DATASETS = ("cifar-10", "coco", "blobs", "voc-mini")
METRICS = ("acc", "iou", "map")
NNS = ("AlexNet", "ResNet-18", "UNet-1", "FCOS", "RefLinear", "MiniNet")
TRANSFORMS = ("identity", "normalize", "echo-aug")
TOKEN_VALUES = ("fast", "slow", "wide-x", "deep_3")


def pick(rng: np.random.Generator, pool):
    return pool[int(rng.integers(0, len(pool)))]


def random_prm(rng: np.random.Generator, uid: int | None = None) -> dict:
    prm: dict = {}
    if rng.random() < 0.9:
        prm["lr"] = float(10 ** rng.uniform(-5, 0))
    if rng.random() < 0.7:
        prm["batch"] = int(2 ** rng.integers(0, 8))
    if rng.random() < 0.5:
        prm["momentum"] = float(rng.uniform(0, 0.99))
    if rng.random() < 0.4:
        prm["mode"] = pick(rng, TOKEN_VALUES)
    if uid is not None:
        prm["uid"] = uid
    return prm


def code_for(kind: str, name: str) -> str:
    # same name always maps to the same text, so repeated ingests never collide
    return f"# {kind} artifact: {name}\n"


def random_doc(rng: np.random.Generator, uid: int | None = None) -> TrialDocument:
    config = ConfigId(
        pick(rng, TASKS), pick(rng, DATASETS), pick(rng, METRICS), pick(rng, NNS)
    )
    transform = pick(rng, TRANSFORMS)
    n_epochs = int(rng.integers(1, 6))
    epochs = tuple(
        EpochResult(
            epoch=i + 1,
            accuracy=float(rng.random()),
            duration_ns=int(rng.integers(0, 10**9)),
        )
        for i in range(n_epochs)
    )
    return TrialDocument(
        config=config,
        transform=transform,
        prm=random_prm(rng, uid),
        epochs=epochs,
        codes={
            "nn": code_for("nn", config.nn),
            "metric": code_for("metric", config.metric),
            "transform": code_for("transform", transform),
        },
    )


def random_result_rows(rng: np.random.Generator, n: int) -> list[ResultRow]:
    rows = []
    for i in range(n):
        nn = pick(rng, NNS)
        metric = pick(rng, METRICS)
        rows.append(
            ResultRow(
                task=pick(rng, TASKS),
                dataset=pick(rng, DATASETS),
                metric=metric,
                metric_code=f'# metric, with "quotes"\nline two: {metric}\n',
                nn=nn,
                nn_code=code_for("nn", nn),
                epoch=int(rng.integers(1, 51)),
                accuracy=float(rng.random()),
                duration=int(rng.integers(0, 10**10)),
                prm=random_prm(rng, uid=i),
                transform_code=code_for("transform", pick(rng, TRANSFORMS)),
            )
        )
    return rows


# -- metric instances ----------------------------------------------------------


def random_mask_pairs(rng: np.random.Generator):
    """(MaskPair list, plain-list pairs for the oracle)."""
    num_classes = int(rng.integers(1, 6))
    n_pairs = int(rng.integers(1, 4))
    pairs = []
    raw = []
    for _ in range(n_pairs):
        h = int(rng.integers(1, 9))
        w = int(rng.integers(1, 9))
        pred = rng.integers(0, num_classes, size=(h, w))
        tgt = rng.integers(0, num_classes, size=(h, w))
        pairs.append(MaskPair(pred, tgt, num_classes))
        raw.append((pred.tolist(), tgt.tolist(), num_classes))
    return pairs, raw


def random_box(rng: np.random.Generator) -> tuple[float, float, float, float]:
    x1 = float(rng.uniform(0, 8))
    y1 = float(rng.uniform(0, 8))
    return (x1, y1, x1 + float(rng.uniform(0.5, 6)), y1 + float(rng.uniform(0.5, 6)))


def random_detection_instance(rng: np.random.Generator):
    """(Detection list, GroundTruth list, raw tuples for the oracle)."""
    n_classes = int(rng.integers(1, 3))
    n_gts = int(rng.integers(1, 5))
    n_dets = int(rng.integers(0, 7))
    gts = [(int(rng.integers(0, n_classes)), random_box(rng)) for _ in range(n_gts)]
    dets = []
    for _ in range(n_dets):
        if gts and rng.random() < 0.6:
            # jitter an existing ground-truth box so matches actually occur
            cls, (x1, y1, x2, y2) = gts[int(rng.integers(0, len(gts)))]
            dx = float(rng.uniform(-0.8, 0.8))
            dy = float(rng.uniform(-0.8, 0.8))
            box = (x1 + dx, y1 + dy, x2 + dx, y2 + dy)
        else:
            cls = int(rng.integers(0, n_classes))
            box = random_box(rng)
        confidence = round(float(rng.random()), 2)  # coarse grid forces ties
        dets.append((cls, confidence, box))
    det_objs = [Detection(c, conf, box) for c, conf, box in dets]
    gt_objs = [GroundTruth(c, box) for c, box in gts]
    return det_objs, gt_objs, dets, gts
