import itertools
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from lineconsensus.consensus import Opinion
from lineconsensus.geometry import LineSegment, Point2


def seg(x1, y1, x2, y2):
    return LineSegment(Point2(float(x1), float(y1)), Point2(float(x2), float(y2)))


def vline(x, top=20.0, bottom=100.0):
    return seg(x, top, x, bottom)


def op(annotator, lines=(), case="c1", ts=0, split="test"):
    return Opinion(case, annotator, tuple(lines), ts, split)


coords = st.floats(min_value=0.0, max_value=100.0, allow_nan=False, allow_infinity=False)


@st.composite
def segments(draw):
    x1, y1, x2, y2 = draw(coords), draw(coords), draw(coords), draw(coords)
    if (x1, y1) == (x2, y2):
        y2 = 100.0 if y1 < 50 else 0.0
    return seg(x1, y1, x2, y2)


line_sets = st.lists(segments(), max_size=6)


def random_segment(rng, spread=100.0):
    while True:
        c = rng.uniform(0, spread, 4)
        s = seg(*c)
        if not s.is_degenerate:
            return s


def random_clustered_set(rng, max_size=6):
    """Line sets with B-line-like geometry so similarities are non-trivial."""
    n = int(rng.integers(0, max_size + 1))
    out = []
    for _ in range(n):
        cx = rng.uniform(5, 95)
        out.append(seg(cx + rng.normal(0, 2), rng.uniform(20, 40), cx + rng.normal(0, 2), 100))
    return out


def sampled_hausdorff(a, b, n=10_000):
    """Dense-sampling estimate of the segment Hausdorff distance."""
    t = np.linspace(0.0, 1.0, n)

    def pts(s):
        return np.column_stack(
            [s.top.x + t * (s.bottom.x - s.top.x), s.top.y + t * (s.bottom.y - s.top.y)]
        )

    pa, pb = pts(a), pts(b)

    def directed(p, s):
        # exact distance of each sampled point to the other segment
        ax, ay, bx, by = s.top.x, s.top.y, s.bottom.x, s.bottom.y
        dx, dy = bx - ax, by - ay
        den = dx * dx + dy * dy
        if den == 0:
            return np.hypot(p[:, 0] - ax, p[:, 1] - ay).max()
        tt = np.clip(((p[:, 0] - ax) * dx + (p[:, 1] - ay) * dy) / den, 0, 1)
        return np.hypot(p[:, 0] - (ax + tt * dx), p[:, 1] - (ay + tt * dy)).max()

    return max(directed(pa, b), directed(pb, a))


def brute_force_max_similarity(sim):
    """Best total similarity over all injections of the smaller side."""
    sim = np.asarray(sim)
    n, m = sim.shape
    if n == 0 or m == 0:
        return 0.0
    if n > m:
        sim = sim.T
        n, m = m, n
    best = -math.inf
    for cols in itertools.permutations(range(m), n):
        best = max(best, math.fsum(sim[i, j] for i, j in enumerate(cols)))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number, ok, detail):
    """Print and remember one PASS/FAIL line for an acceptance criterion."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
