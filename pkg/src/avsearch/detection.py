"""Star-model scoring: correlation, distance transforms, detection, fusion.

Scoring walks every pyramid level and model component.  The root filter
correlates against the level (valid placements only).  Components with parts
additionally correlate each part against the level one octave finer and take,
per root position, the best part placement under the quadratic displacement
cost; the spatial maximization runs as two passes of a 1-D generalized
distance transform, linear in the response size.

A root position (x, y) at a level with scale s maps to the pixel box
``x * cell / s .. (x + w) * cell / s`` (same for y), clipped to the extent
covered by the finest level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FeatureLevel, FeaturePyramid, build_pyramid
from .models import Component, DetectorModel, Detection, Filter
from .viewpoint import ViewGrid, backproject_box, make_view, simulate_view

__all__ = [
    "correlate",
    "distance_transform_1d",
    "place_parts",
    "detect",
    "detect_multiview",
    "iou",
    "nms",
    "DetectStats",
]

# Counts crossing-point evaluations inside the envelope passes; the
# complexity test asserts this grows linearly with input length.
_ENVELOPE_OPS = 0


def correlate(level: FeatureLevel, filt: Filter) -> np.ndarray:
    """Valid-region cross-correlation of a filter with a feature level.

    Returns a float64 response of shape
    (cells_h - h + 1, cells_w - w + 1).
    """
    fh, fw = filt.h, filt.w
    if fh > level.cells_h or fw > level.cells_w:
        raise ValueError(
            f"filter {fw}x{fh} does not fit level {level.cells_w}x{level.cells_h}"
        )
    data = level.data.astype(np.float64, copy=False)
    weights = filt.weights.astype(np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(data, (fh, fw), axis=(0, 1))
    # windows: (H-fh+1, W-fw+1, 31, fh, fw); contract channel and both taps.
    return np.tensordot(windows, weights, axes=([3, 4, 2], [0, 1, 2]))


# ---------------------------------------------------------------------------
# 1-D generalized distance transform


def _envelope_pass(f, d1, d2, q_lo, q_hi, prefer_late):
    """Maximize f[j] - d1 (q - j) - d2 (q - j)^2 over j <= q.

    Queried at integer q in [q_lo, q_hi).  Each candidate j contributes a
    parabola in q with curvature -d2; all curvatures match, so consecutive
    candidates cross exactly once and a lower-envelope stack with a monotone
    query pointer answers all queries in O(n + q_hi - q_lo).

    Ties at exact crossings go to the earlier candidate unless `prefer_late`
    (used by the mirrored pass so the combined transform prefers smaller j).
    Queries below 0 have no candidates and yield -inf.
    """
    global _ENVELOPE_OPS
    n = len(f)
    m = q_hi - q_lo
    out_v = np.full(m, -np.inf)
    out_j = np.full(m, -1, dtype=np.int64)
    js: list[int] = []
    cs: list[float] = []   # parabola offsets C_j = f[j] + d1 j - d2 j^2
    xls: list[float] = []  # query point from which js[i] beats js[i-1]
    head = 0
    nxt = 0
    for qi in range(m):
        q = q_lo + qi
        while nxt < n and nxt <= q:
            j = nxt
            nxt += 1
            cj = f[j] + d1 * j - d2 * (j * j)
            xl = -np.inf
            while len(js) > head:
                # q-coordinate where j overtakes the current stack top
                _ENVELOPE_OPS += 1
                s = (cs[-1] - cj) / (2.0 * d2 * (j - js[-1]))
                if s <= xls[-1]:
                    js.pop(), cs.pop(), xls.pop()
                else:
                    xl = s
                    break
            js.append(j)
            cs.append(cj)
            xls.append(xl)
        if head >= len(js):
            continue
        if prefer_late:
            while head + 1 < len(js) and xls[head + 1] <= q:
                head += 1
        else:
            while head + 1 < len(js) and xls[head + 1] < q:
                head += 1
        j = js[head]
        d = q - j
        out_v[qi] = f[j] - d1 * d - d2 * (d * d)
        out_j[qi] = j
    return out_v, out_j


def _dt_range(f, d1, d2, q_lo, q_hi):
    """Distance transform over an arbitrary integer query window.

    D[q] = max_j f[j] - d1 |q - j| - d2 (q - j)^2, smallest j on ties.
    """
    f = np.asarray(f, dtype=np.float64)
    n = len(f)
    lv, lj = _envelope_pass(f, d1, d2, q_lo, q_hi, prefer_late=False)
    # Mirror for j >= q: reverse the array, flip the query window, and prefer
    # late entries so reversed ties resolve to the smallest original j.
    rv, rj = _envelope_pass(f[::-1], d1, d2, (n - 1) - (q_hi - 1), (n - 1) - q_lo + 1,
                            prefer_late=True)
    rv = rv[::-1]
    rj = (n - 1) - rj[::-1]
    # On exact ties keep the left result: its argmax is <= q <= the right one.
    right_wins = rv > lv
    values = np.where(right_wins, rv, lv)
    argmax = np.where(right_wins, rj, lj)
    return values, argmax


def distance_transform_1d(f, d1: float, d2: float):
    """1-D generalized distance transform under max semantics.

    Returns (values, argmax); argmax holds the smallest maximizing j on ties.
    d1 must be non-negative and d2 strictly positive.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or len(f) == 0:
        raise ValueError("f must be a non-empty 1-D array")
    if d1 < 0.0:
        raise ValueError("d1 must be non-negative")
    if d2 <= 0.0:
        raise ValueError("d2 must be positive")
    return _dt_range(f, d1, d2, 0, len(f))


# ---------------------------------------------------------------------------
# part placement


def place_parts(
    root_response: np.ndarray,
    part_responses: list[np.ndarray],
    component: Component,
):
    """Combine a root response with optimally placed part responses.

    Part responses live one octave finer than the root, so a root position
    (x, y) anchors part p at (2x + ax, 2y + ay) in the part's frame.  For
    every root position the part contributes its best response minus the
    displacement cost from that anchor point; the 2-D maximization separates
    into a distance transform along rows, then along columns.

    Returns (combined, placements); combined has the root response shape and
    already includes the component bias, placements gives one (px, py) array
    pair per part with the chosen part positions.
    """
    if len(part_responses) != len(component.parts):
        raise ValueError("one response map per part is required")
    rh, rw = root_response.shape
    combined = root_response + component.bias
    placements = []
    for part, resp in zip(component.parts, part_responses):
        ax, ay = part.anchor
        dx, dy, dxx, dyy = part.deform
        ph, pw = resp.shape
        qx_lo, qx_hi = ax, 2 * (rw - 1) + ax + 1
        qy_lo, qy_hi = ay, 2 * (rh - 1) + ay + 1
        row_v = np.empty((ph, qx_hi - qx_lo))
        row_j = np.empty((ph, qx_hi - qx_lo), dtype=np.int64)
        for r in range(ph):
            row_v[r], row_j[r] = _dt_range(resp[r], dx, dxx, qx_lo, qx_hi)
        col_v = np.empty((qy_hi - qy_lo, qx_hi - qx_lo))
        col_j = np.empty((qy_hi - qy_lo, qx_hi - qx_lo), dtype=np.int64)
        for c in range(qx_hi - qx_lo):
            col_v[:, c], col_j[:, c] = _dt_range(row_v[:, c], dy, dyy, qy_lo, qy_hi)
        qxs = 2 * np.arange(rw) + ax - qx_lo
        qys = 2 * np.arange(rh) + ay - qy_lo
        combined = combined + col_v[np.ix_(qys, qxs)]
        py = col_j[np.ix_(qys, qxs)]
        px = row_j[py, qxs[None, :]]
        placements.append((px, py))
    return combined, placements


# ---------------------------------------------------------------------------
# detection


@dataclass
class DetectStats:
    """Bookkeeping for one scoring run."""

    levels_scored: int = 0
    part_level_skips: int = 0
    detections: int = 0
    notes: list[str] = field(default_factory=list)


def detect(
    pyramid: FeaturePyramid,
    model: DetectorModel,
    threshold: float | None = None,
    stats: DetectStats | None = None,
) -> list[Detection]:
    """Score a pyramid with a model and emit boxes at or above threshold."""
    if model.cell_size != pyramid.cell_size:
        raise ValueError(
            f"model cell_size {model.cell_size} != pyramid cell_size {pyramid.cell_size}"
        )
    if model.levels_per_octave != pyramid.levels_per_octave:
        raise ValueError(
            f"model levels_per_octave {model.levels_per_octave} "
            f"!= pyramid levels_per_octave {pyramid.levels_per_octave}"
        )
    if threshold is None:
        threshold = model.threshold
    cell = pyramid.cell_size
    octave = pyramid.levels_per_octave
    finest = pyramid.levels[0]
    extent_x = finest.cells_w * cell / finest.scale
    extent_y = finest.cells_h * cell / finest.scale
    out: list[Detection] = []
    for li, level in enumerate(pyramid.levels):
        for ci, comp in enumerate(model.components):
            if comp.root.w > level.cells_w or comp.root.h > level.cells_h:
                continue
            if comp.parts:
                fli = li - octave  # one octave finer than the root level
                if fli < 0:
                    if stats is not None:
                        stats.part_level_skips += 1
                    continue
                finer = pyramid.levels[fli]
                if any(p.filter.w > finer.cells_w or p.filter.h > finer.cells_h
                       for p in comp.parts):
                    if stats is not None:
                        stats.part_level_skips += 1
                    continue
                root_resp = correlate(level, comp.root)
                part_resps = [correlate(finer, p.filter) for p in comp.parts]
                score_map, _ = place_parts(root_resp, part_resps, comp)
            else:
                score_map = correlate(level, comp.root) + comp.bias
            if stats is not None:
                stats.levels_scored += 1
            ys, xs = np.nonzero(score_map >= threshold)
            scale = level.scale
            for y, x in zip(ys.tolist(), xs.tolist()):
                x0 = x * cell / scale
                y0 = y * cell / scale
                x1 = min((x + comp.root.w) * cell / scale, extent_x)
                y1 = min((y + comp.root.h) * cell / scale, extent_y)
                if x1 <= x0 or y1 <= y0:
                    continue
                out.append(Detection(
                    box=(x0, y0, x1, y1),
                    score=float(score_map[y, x]),
                    view_index=0,
                    component_index=ci,
                    level_index=li,
                ))
    if stats is not None:
        stats.detections += len(out)
    return out


def detect_multiview(
    img: np.ndarray,
    model: DetectorModel,
    grid: ViewGrid,
    threshold: float | None = None,
    min_cells: int = 5,
    antialias: float = 0.8,
    pyramid_provider=None,
    stats: DetectStats | None = None,
) -> list[Detection]:
    """Run detection across all simulated views and pool the results.

    Boxes come back in the original image frame (view corners mapped through
    the inverse view and clipped); each detection keeps the index of the view
    that produced it.  Results are pooled, not fused; apply `nms` on top.

    `pyramid_provider(view_index, tilt, phi, simulated)` may be supplied to
    reuse cached pyramids; by default every view is built in place.
    """
    h, w = img.shape
    out: list[Detection] = []
    for vi, (tilt, phi) in enumerate(grid.views):
        view = make_view(tilt, phi, w, h)
        simulated = simulate_view(img, view, antialias=antialias)
        if pyramid_provider is not None:
            pyramid = pyramid_provider(vi, tilt, phi, simulated)
        else:
            pyramid = build_pyramid(simulated, model.cell_size,
                                    model.levels_per_octave, min_cells)
        for d in detect(pyramid, model, threshold, stats=stats):
            box = backproject_box(d.box, view)
            if box is None:
                continue
            out.append(Detection(
                box=box,
                score=d.score,
                view_index=vi,
                component_index=d.component_index,
                level_index=d.level_index,
            ))
        pyramid = None  # release before the next view is built
    return out


# ---------------------------------------------------------------------------
# box arithmetic and fusion


def iou(a, b) -> float:
    """Intersection over union of two (x0, y0, x1, y1) boxes."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def nms(detections: list[Detection], iou_threshold: float = 0.5) -> list[Detection]:
    """Greedy non-maximum suppression over pooled detections.

    Detections are visited by descending score (ties: smaller view index,
    then lexicographically smaller box); each kept detection suppresses the
    remaining ones overlapping it with IoU strictly above the threshold.
    """
    order = sorted(detections, key=lambda d: (-d.score, d.view_index, d.box))
    kept: list[Detection] = []
    for cand in order:
        if all(iou(cand.box, k.box) <= iou_threshold for k in kept):
            kept.append(cand)
    return kept
