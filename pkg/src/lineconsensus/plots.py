"""Minimal deterministic SVG charts for the evaluation outputs."""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT, PAD = 480, 320, 48


def _frame(title: str, body: list[str], xlabel: str, ylabel: str) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD / 2}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{PAD}" y2="{PAD / 2}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT / 2:.1f})">{ylabel}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def learning_curve_svg(bins, expert_mean=None, crowd_mean=None) -> str:
    """Binned mean score with SEM bars; optional expert (dotted) and crowd
    consensus (dashed) reference levels."""
    xs = [b.bin_index for b in bins]
    lows = [b.mean - b.sem for b in bins] + [v for v in (expert_mean, crowd_mean) if v is not None]
    highs = [b.mean + b.sem for b in bins] + [v for v in (expert_mean, crowd_mean) if v is not None]
    sx = _scale(min(xs, default=0) - 0.5, max(xs, default=0) + 0.5, PAD, WIDTH - PAD / 2)
    sy = _scale(max(0.0, min(lows, default=0) - 0.05), min(1.0, max(highs, default=1) + 0.05),
                HEIGHT - PAD, PAD / 2)
    body = []
    for b in bins:
        x = sx(b.bin_index)
        body.append(
            f'<line x1="{x:.2f}" y1="{sy(b.mean - b.sem):.2f}" x2="{x:.2f}" '
            f'y2="{sy(b.mean + b.sem):.2f}" stroke="gray"/>'
        )
    pts = " ".join(f"{sx(b.bin_index):.2f},{sy(b.mean):.2f}" for b in bins)
    body.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for level, dash in ((expert_mean, "2,3"), (crowd_mean, "8,4")):
        if level is not None:
            body.append(
                f'<line x1="{PAD}" y1="{sy(level):.2f}" x2="{WIDTH - PAD / 2}" y2="{sy(level):.2f}" '
                f'stroke="black" stroke-dasharray="{dash}"/>'
            )
    return _frame("Learning curve", body, "experience bin", "mean Dice-H")


def histogram_svg(values, ci=None, bins: int = 40) -> str:
    """Histogram of bootstrap replicates with the CI endpoints marked."""
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    sx = _scale(edges[0], edges[-1], PAD, WIDTH - PAD / 2)
    sy = _scale(0, max(int(counts.max()), 1), HEIGHT - PAD, PAD / 2)
    body = []
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        body.append(
            f'<rect x="{sx(lo):.2f}" y="{sy(c):.2f}" width="{max(sx(hi) - sx(lo) - 1, 0.5):.2f}" '
            f'height="{sy(0) - sy(c):.2f}" fill="steelblue"/>'
        )
    for v in ci or ():
        body.append(
            f'<line x1="{sx(v):.2f}" y1="{HEIGHT - PAD}" x2="{sx(v):.2f}" y2="{PAD / 2}" '
            'stroke="crimson" stroke-dasharray="4,3"/>'
        )
    return _frame("Bootstrap: crowd minus expert mean Dice-H", body, "difference", "replicates")
