"""Segmentation and detection metrics: OCE, point-level IoU, P/R/F.

OCE follows the object-level consistency error definition: a directed
error weighs, per ground-truth segment, how well the overlapping
predicted segments cover it, and the final score is the minimum of the
two directions. It is 0 exactly when the partitions are identical.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _dense(labels):
    labels = np.asarray(labels).ravel()
    _, dense = np.unique(labels, return_inverse=True)
    return dense


def _confusion(a, b):
    na = int(a.max()) + 1
    nb = int(b.max()) + 1
    m = np.zeros((na, nb), dtype=np.int64)
    np.add.at(m, (a, b), 1)
    return m


def _directed_error(m):
    """E(A,B) over confusion m with rows = A segments, cols = B segments."""
    n = m.sum()
    sizes_a = m.sum(axis=1)          # |A_i|
    sizes_b = m.sum(axis=0)          # |B_j|
    union = sizes_a[:, None] + sizes_b[None, :] - m
    with np.errstate(divide="ignore", invalid="ignore"):
        jaccard = np.where(union > 0, m / union, 0.0)
        weight = np.where(sizes_b[None, :] > 0, m / sizes_b[None, :], 0.0)
    inner = (jaccard * weight).sum(axis=0)
    return float(((sizes_b / n) * (1.0 - inner)).sum())


def oce(segmented, ground_truth):
    """Object-level consistency error in [0, 1]; 0 iff identical partitions."""
    a = np.asarray(segmented).ravel()
    b = np.asarray(ground_truth).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ValidationError("partitions must cover the same non-empty universe")
    m = _confusion(_dense(a), _dense(b))
    return min(_directed_error(m), _directed_error(m.T))


def point_iou(detected, truth):
    """Intersection over union of two element sets."""
    detected = set(detected)
    truth = set(truth)
    union = detected | truth
    if not union:
        raise ValidationError("IoU of two empty sets is undefined")
    return len(detected & truth) / len(union)


def detection_prf(candidates, truths, iou_threshold=0.5):
    """Greedy one-to-one matching by descending IoU; TP iff IoU > threshold.

    Returns (precision, recall, f_measure) with zero-denominator cases 0.
    """
    cand_sets = [set(c) for c in candidates]
    truth_sets = [set(t) for t in truths]
    scored = []
    for ci, c in enumerate(cand_sets):
        for ti, t in enumerate(truth_sets):
            if not c and not t:
                continue
            iou = len(c & t) / len(c | t)
            if iou > 0:
                scored.append((iou, ci, ti))
    scored.sort(key=lambda x: (-x[0], x[1], x[2]))
    used_c, used_t = set(), set()
    tp = 0
    for iou, ci, ti in scored:
        if ci in used_c or ti in used_t:
            continue
        used_c.add(ci)
        used_t.add(ti)
        if iou > iou_threshold:
            tp += 1
    precision = tp / len(cand_sets) if cand_sets else 0.0
    recall = tp / len(truth_sets) if truth_sets else 0.0
    f = (
        2.0 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    return precision, recall, f
