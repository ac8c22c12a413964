"""Minimal SVG charts: faceted importance bars, biplot, confusion heat map.

Every plotted mark carries ``data-*`` attributes with its label and value
so charts can be compared structurally.
"""

from __future__ import annotations

from xml.sax.saxutils import quoteattr, escape

import numpy as np

from latbudget.files import fmt

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _svg(width, height, body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
            + "\n".join(body) + "\n</svg>\n")


def _n(x):
    return f"{x:.2f}"


def importance_facets(values, row_labels, col_labels, title="Connection weight importance"):
    """One bar panel per response level (row of ``values``)."""
    values = np.asarray(values, dtype=float)
    J, I = values.shape
    ncol = min(J, 2) if J <= 4 else 3
    nrow = -(-J // ncol)
    pw, ph, pad = max(220, 28 * I + 40), 180, 30
    width, height = ncol * (pw + pad) + pad, nrow * (ph + pad) + pad + 20
    lim = float(np.abs(values).max()) or 1.0
    body = [f'<text x="{pad}" y="18" font-size="13">{escape(title)}</text>']
    for j in range(J):
        ox = pad + (j % ncol) * (pw + pad)
        oy = 30 + (j // ncol) * (ph + pad)
        zero = oy + ph / 2
        body.append(f'<g class="facet" data-response={quoteattr(row_labels[j])}>')
        body.append(f'<rect x="{ox}" y="{oy}" width="{pw}" height="{ph}" fill="none" stroke="#ccc"/>')
        body.append(f'<text x="{ox + 4}" y="{oy + 12}">{escape(str(row_labels[j]))}</text>')
        body.append(f'<line x1="{ox}" y1="{_n(zero)}" x2="{ox + pw}" y2="{_n(zero)}" stroke="#999"/>')
        bw = (pw - 20) / I
        for i in range(I):
            v = values[j, i]
            h = abs(v) / lim * (ph / 2 - 18)
            x = ox + 10 + i * bw
            y = zero - h if v >= 0 else zero
            body.append(f'<rect class="bar" x="{_n(x + 2)}" y="{_n(y)}" width="{_n(bw - 4)}" '
                        f'height="{_n(h)}" fill="{PALETTE[0]}" '
                        f'data-label={quoteattr(col_labels[i])} data-value="{fmt(v)}"/>')
            body.append(f'<text x="{_n(x + bw / 2)}" y="{oy + ph - 4}" text-anchor="middle" '
                        f'font-size="9">{escape(str(col_labels[i]))}</text>')
        body.append("</g>")
    return _svg(width, height, body)


def biplot_svg(coords, assignments, attribution, explained=None, title="Biplot"):
    """Response levels as circles, explanatory levels as inverted triangles, coloured by cluster."""
    rp, cp = np.asarray(coords.row_points), np.asarray(coords.col_points)
    size, pad = 480, 40
    # column points live on the unit scale; stretch them to the row-point cloud
    rs = float(np.abs(rp).max()) or 1.0
    cs = float(np.abs(cp).max()) or 1.0
    scale_c = rs / cs
    lim = rs * 1.1

    def px(v):
        return pad + (v + lim) / (2 * lim) * (size - 2 * pad)

    def py(v):
        return size - pad - (v + lim) / (2 * lim) * (size - 2 * pad)

    ev = coords.explained if explained is None else explained
    body = [f'<text x="{pad}" y="20" font-size="13">{escape(title)}</text>',
            f'<line x1="{pad}" y1="{_n(py(0))}" x2="{size - pad}" y2="{_n(py(0))}" stroke="#ccc"/>',
            f'<line x1="{_n(px(0))}" y1="{pad}" x2="{_n(px(0))}" y2="{size - pad}" stroke="#ccc"/>',
            f'<text x="{size - pad}" y="{size - 8}" text-anchor="end">dim 1 ({100 * ev[0]:.1f}%)</text>',
            f'<text x="8" y="{pad - 6}">dim 2 ({100 * ev[1]:.1f}%)</text>']
    for lab, (x, y), k in zip(coords.row_labels, rp, assignments):
        c = PALETTE[(int(k) - 1) % len(PALETTE)]
        body.append(f'<circle class="response" cx="{_n(px(x))}" cy="{_n(py(y))}" r="5" fill="{c}" '
                    f'data-label={quoteattr(lab)} data-cluster="{int(k)}" '
                    f'data-x="{fmt(x)}" data-y="{fmt(y)}"/>')
        body.append(f'<text x="{_n(px(x) + 7)}" y="{_n(py(y) + 4)}">{escape(str(lab))}</text>')
    for lab, (x, y), k in zip(coords.col_labels, cp, attribution):
        c = PALETTE[(int(k) - 1) % len(PALETTE)]
        X, Y = px(x * scale_c), py(y * scale_c)
        pts = f"{_n(X - 6)},{_n(Y - 5)} {_n(X + 6)},{_n(Y - 5)} {_n(X)},{_n(Y + 6)}"
        body.append(f'<polygon class="explanatory" points="{pts}" fill="none" stroke="{c}" '
                    f'data-label={quoteattr(lab)} data-cluster="{int(k)}" '
                    f'data-x="{fmt(x)}" data-y="{fmt(y)}"/>')
        body.append(f'<text x="{_n(X + 7)}" y="{_n(Y + 4)}" fill="{c}">{escape(str(lab))}</text>')
    return _svg(size, size, body)


def confusion_heatmap(counts, labels, title="Confusion matrix (rows actual, columns predicted)"):
    counts = np.asarray(counts)
    J = len(labels)
    cell, pad = 40, 70
    size = pad + J * cell + 20
    top = float(counts.max()) or 1.0
    body = [f'<text x="10" y="18" font-size="13">{escape(title)}</text>']
    for a in range(J):
        body.append(f'<text x="{pad - 6}" y="{pad + a * cell + cell / 2 + 4}" '
                    f'text-anchor="end">{escape(str(labels[a]))}</text>')
        body.append(f'<text x="{pad + a * cell + cell / 2}" y="{pad - 6}" '
                    f'text-anchor="middle">{escape(str(labels[a]))}</text>')
        for p in range(J):
            v = int(counts[a, p])
            shade = int(255 - 200 * v / top)
            body.append(f'<rect class="cell" x="{pad + p * cell}" y="{pad + a * cell}" '
                        f'width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" '
                        f'data-actual={quoteattr(labels[a])} data-predicted={quoteattr(labels[p])} '
                        f'data-value="{v}"/>')
            body.append(f'<text x="{pad + p * cell + cell / 2}" y="{pad + a * cell + cell / 2 + 4}" '
                        f'text-anchor="middle">{v}</text>')
    return _svg(size, size, body)
