"""Minimal static SVG charts with deterministic output."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart", "bar_chart"]

WIDTH, HEIGHT = 960, 540
_MARGIN = dict(left=80, right=200, top=50, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + 1e-9 * step, step)]


class _Frame:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - _MARGIN["left"] - _MARGIN["right"]
        self.ph = HEIGHT - _MARGIN["top"] - _MARGIN["bottom"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2 - _MARGIN["right"] / 2:.0f}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def sx(self, x):
        return _MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def sy(self, y):
        return _MARGIN["top"] + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * self.ph

    def _axes(self, xlabel, ylabel):
        l, t = _MARGIN["left"], _MARGIN["top"]
        b = t + self.ph
        self.parts.append(f'<rect x="{l}" y="{t}" width="{self.pw}" height="{self.ph}" fill="none" stroke="black"/>')
        for v in _nice_ticks(self.y0, self.y1):
            y = _f(self.sy(v))
            self.parts.append(f'<line x1="{l - 5}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/>')
            self.parts.append(f'<text x="{l - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{v:g}</text>')
        self.parts.append(
            f'<text x="20" y="{t + self.ph / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 20 {t + self.ph / 2:.0f})">{escape(ylabel)}</text>'
        )
        self.parts.append(f'<text x="{l + self.pw / 2:.0f}" y="{b + 45}" text-anchor="middle">{escape(xlabel)}</text>')
        self._bottom = b

    def xticks(self, values, labels=None):
        for i, v in enumerate(values):
            x = _f(self.sx(v))
            lab = labels[i] if labels is not None else f"{v:g}"
            self.parts.append(f'<line x1="{x}" y1="{self._bottom}" x2="{x}" y2="{self._bottom + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{x}" y="{self._bottom + 20}" text-anchor="middle">{escape(lab)}</text>')

    def reference(self, y, label):
        yy = _f(self.sy(y))
        self.parts.append(
            f'<line x1="{_MARGIN["left"]}" y1="{yy}" x2="{_MARGIN["left"] + self.pw}" y2="{yy}" '
            f'stroke="black" stroke-dasharray="8 5" class="reference" data-value="{y!r}"/>'
        )
        self.parts.append(f'<text x="{_MARGIN["left"] + self.pw - 4}" y="{float(yy) - 6:.2f}" text-anchor="end">{escape(label)}</text>')

    def legend(self, entries):
        x = WIDTH - _MARGIN["right"] + 15
        for i, (label, color, dash) in enumerate(entries):
            y = _MARGIN["top"] + 10 + 20 * i
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            self.parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 25}" y2="{y}" stroke="{color}" stroke-width="3"{extra}/>')
            self.parts.append(f'<text x="{x + 32}" y="{y}" dominant-baseline="middle">{escape(label)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_chart(series, title: str, xlabel: str, ylabel: str, reference: float | None = None,
               reference_label: str = "") -> str:
    """series: list of (label, x, y, dash) with dash None for solid lines."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series] + ([np.array([reference])] if reference is not None else []))
    ylo, yhi = float(ys.min()), float(ys.max())
    pad = 0.05 * (yhi - ylo or 1.0)
    fr = _Frame((float(xs.min()), float(xs.max())), (ylo - pad, yhi + pad), title, xlabel, ylabel)
    fr.xticks(_nice_ticks(fr.x0, fr.x1))
    legend = []
    for i, (label, x, y, dash) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(fr.sx(a))},{_f(fr.sy(b))}" for a, b in zip(x, y))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        fr.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2"{extra} points="{pts}"/>')
        legend.append((label, color, dash))
    if reference is not None:
        fr.reference(reference, reference_label)
    fr.legend(legend)
    return fr.render()


def bar_chart(categories, series, title: str, xlabel: str, ylabel: str) -> str:
    """Grouped bars; series: list of (label, heights) aligned with categories."""
    n_cat, n_ser = len(categories), len(series)
    top = max(float(np.max(h)) for _, h in series)
    fr = _Frame((0.0, float(n_cat)), (0.0, 1.05 * (top or 1.0)), title, xlabel, ylabel)
    step = max(1, n_cat // 12)
    fr.xticks([i + 0.5 for i in range(0, n_cat, step)], [str(categories[i]) for i in range(0, n_cat, step)])
    width = 0.8 / n_ser
    legend = []
    for j, (label, heights) in enumerate(series):
        color = PALETTE[j % len(PALETTE)]
        for i, h in enumerate(heights):
            x = fr.sx(i + 0.1 + j * width)
            w = fr.sx(i + 0.1 + (j + 1) * width) - x
            y = fr.sy(max(float(h), 0.0))
            fr.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(fr.sy(0.0) - y)}" fill="{color}"/>')
        legend.append((label, color, None))
    fr.legend(legend)
    return fr.render()
