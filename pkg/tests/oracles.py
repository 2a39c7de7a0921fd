"""Slow, independent reference implementations used to check the library.

Everything here recomputes results from first principles (pixel counting,
flood fill, exhaustive re-matching, Riemann sums) and must stay ignorant
of how the library computes the same quantities.
"""

from __future__ import annotations

from collections import deque


def pixel_count_iou(a, b):
    """IoU of two integer-coordinate boxes by counting unit pixels."""
    ax1, ay1, ax2, ay2 = (int(v) for v in a)
    bx1, by1, bx2, by2 = (int(v) for v in b)
    cells_a = {(x, y) for x in range(ax1, ax2) for y in range(ay1, ay2)}
    cells_b = {(x, y) for x in range(bx1, bx2) for y in range(by1, by2)}
    union = cells_a | cells_b
    if not union:
        return 0.0
    return len(cells_a & cells_b) / len(union)


def flood_fill_components(grid, connectivity=8, min_area=1):
    """Connected components of a 2-d 0/1 grid via BFS flood fill.

    Returns (x_min, y_min, x_max, y_max) boxes with exclusive max edges,
    sorted by (y_min, x_min).
    """
    height = len(grid)
    width = len(grid[0]) if height else 0
    if connectivity == 4:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)
                 if (dr, dc) != (0, 0)]
    seen = [[False] * width for _ in range(height)]
    boxes = []
    for row in range(height):
        for col in range(width):
            if seen[row][col] or not grid[row][col]:
                continue
            queue = deque([(row, col)])
            seen[row][col] = True
            pixels = []
            while queue:
                r, c = queue.popleft()
                pixels.append((r, c))
                for dr, dc in steps:
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < height and 0 <= cc < width \
                            and not seen[rr][cc] and grid[rr][cc]:
                        seen[rr][cc] = True
                        queue.append((rr, cc))
            if len(pixels) < min_area:
                continue
            rows = [p[0] for p in pixels]
            cols = [p[1] for p in pixels]
            boxes.append((min(cols), min(rows), max(cols) + 1, max(rows) + 1))
    boxes.sort(key=lambda b: (b[1], b[0]))
    return boxes


def greedy_match_verdicts(detections, truths, iou_fn, iou_threshold,
                          confidence_threshold):
    """Re-derive TP/FP verdicts with an explicit, order-canonical greedy pass.

    detections: list of (confidence, (x1, y1, x2, y2)).
    truths: list of (x1, y1, x2, y2).
    Returns a list of (confidence, is_tp) for retained detections.
    """
    retained = [d for d in detections if d[0] >= confidence_threshold]
    retained.sort(key=lambda d: (-d[0], d[1][0], d[1][1], d[1][2], d[1][3]))
    free = list(range(len(truths)))
    verdicts = []
    for conf, box in retained:
        best, best_iou = None, 0.0
        for t in free:
            value = iou_fn(box, truths[t])
            if value >= iou_threshold and value > best_iou:
                best, best_iou = t, value
        if best is None:
            verdicts.append((conf, False))
        else:
            free.remove(best)
            verdicts.append((conf, True))
    return verdicts


def brute_force_curves(samples, iou_fn, iou_threshold):
    """FROC and PR operating points by re-matching from scratch per threshold.

    samples: list of (detections, truths) pairs in the formats accepted by
    greedy_match_verdicts. Returns (thresholds, froc_points, pr_points)
    where points are (x, y) tuples and thresholds are strictly decreasing,
    with a leading above-every-confidence sentinel.
    """
    n_images = len(samples)
    n_truths = sum(len(t) for _, t in samples)
    confidences = sorted({d[0] for dets, _ in samples for d in dets},
                         reverse=True)
    thresholds = [1.0 + 1e-6] + confidences
    froc, pr = [], []
    for t in thresholds:
        tp = fp = 0
        for dets, truths in samples:
            for _, is_tp in greedy_match_verdicts(dets, truths, iou_fn,
                                                  iou_threshold, t):
                if is_tp:
                    tp += 1
                else:
                    fp += 1
        sens = tp / n_truths if n_truths else 0.0
        froc.append((fp / n_images, sens))
        retained = tp + fp
        pr.append((sens, tp / retained if retained else 1.0))
    return thresholds, froc, pr


def trapezoid_auc(xy_points):
    """Trapezoid area under (x, y) points sorted by x."""
    pts = sorted(xy_points, key=lambda p: p[0])
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def riemann_step_area(points, cap, n_samples):
    """Midpoint Riemann integral of the step-completed piecewise-linear curve.

    points: (x, y) with nondecreasing x; the curve extends horizontally from
    the last point to ``cap``. Result is normalized by ``cap``.
    """

    def value_at(x):
        if x <= points[0][0]:
            return points[0][1]
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            if x0 <= x <= x1:
                if x1 == x0:
                    return y1
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return points[-1][1]

    dx = cap / n_samples
    total = sum(value_at((i + 0.5) * dx) for i in range(n_samples))
    return total * dx / cap
