"""Self-contained SVG figures; no plotting dependency.

All coordinates are formatted with fixed precision so identical inputs
produce byte-identical files.  Four charts: class-distribution bars
(pre/post SMOTE), per-model ROC overlay, a confusion-matrix grid, and a
SHAP importance summary.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from distresskit.metrics import ConfusionMatrix

PALETTE = ["#1f6f8b", "#d1495b", "#66a182", "#edae49", "#574b60", "#8d96a3"]
_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _n(x: float) -> str:
    return f"{float(x):.2f}"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" font-size="16" {_FONT}>'
        f"{title}</text>",
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _bar(x: float, y: float, w: float, h: float, color: str) -> str:
    return (
        f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}" '
        f'fill="{color}"/>'
    )


def _text(x: float, y: float, s: str, size: int = 12, anchor: str = "middle") -> str:
    return (
        f'<text x="{_n(x)}" y="{_n(y)}" text-anchor="{anchor}" '
        f'font-size="{size}" {_FONT}>{s}</text>'
    )


def class_distribution_svg(
    before: tuple[int, int], after: tuple[int, int]
) -> str:
    """Grouped bars: (majority, minority) training counts before/after SMOTE."""
    width, height = 640, 420
    plot_left, plot_top, plot_bottom = 80, 60, 360
    max_count = max(1, *before, *after)
    scale = (plot_bottom - plot_top) / max_count
    groups = [("Before SMOTE", before), ("After SMOTE", after)]
    body: list[str] = []
    group_width = 240
    bar_width = 80
    for gi, (label, (n_major, n_minor)) in enumerate(groups):
        gx = plot_left + gi * (group_width + 60)
        for bi, (count, name, color) in enumerate(
            [(n_major, "majority (0)", PALETTE[0]), (n_minor, "minority (1)", PALETTE[1])]
        ):
            x = gx + bi * (bar_width + 20)
            h = count * scale
            body.append(_bar(x, plot_bottom - h, bar_width, h, color))
            body.append(_text(x + bar_width / 2, plot_bottom - h - 6, str(int(count))))
            body.append(_text(x + bar_width / 2, plot_bottom + 18, name, size=11))
        body.append(_text(gx + bar_width + 10, plot_bottom + 38, label, size=13))
    body.append(
        f'<line x1="{plot_left - 10}" y1="{plot_bottom}" x2="{width - 40}" '
        f'y2="{plot_bottom}" stroke="#333333" stroke-width="1"/>'
    )
    return _svg(width, height, body, "Training class distribution")


def roc_overlay_svg(
    curves: Sequence[tuple[str, np.ndarray, np.ndarray, float]]
) -> str:
    """One ROC staircase per model plus the chance diagonal."""
    width, height = 640, 520
    left, top, size = 90, 50, 400
    right, bottom = left + size, top + size

    def px(fpr: float) -> float:
        return left + fpr * size

    def py(tpr: float) -> float:
        return bottom - tpr * size

    body = [
        f'<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>',
        f'<line x1="{px(0)}" y1="{py(0)}" x2="{px(1)}" y2="{py(1)}" '
        f'stroke="#999999" stroke-width="1" stroke-dasharray="6,4"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        body.append(_text(px(tick), bottom + 18, f"{tick:.2f}", size=10))
        body.append(_text(left - 14, py(tick) + 4, f"{tick:.2f}", size=10))
    body.append(_text((left + right) / 2, bottom + 40, "False positive rate", size=12))
    body.append(
        f'<text x="26" y="{(top + bottom) / 2}" text-anchor="middle" font-size="12" '
        f'{_FONT} transform="rotate(-90 26 {(top + bottom) / 2})">'
        "True positive rate</text>"
    )
    for i, (name, fpr, tpr, auc) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_n(px(f))},{_n(py(t))}" for f, t in zip(fpr, tpr))
        body.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        ly = top + 18 + i * 18
        body.append(
            f'<line x1="{right - 210}" y1="{ly - 4}" x2="{right - 186}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        body.append(
            _text(right - 180, ly, f"{name} (AUC={auc:.3f})", size=11, anchor="start")
        )
    return _svg(width, height, body, "ROC curves (holdout)")


def confusion_matrix_svg(cm: ConfusionMatrix, model_name: str, threshold: float) -> str:
    """2x2 count grid: actual class by row, predicted class by column."""
    width, height = 520, 460
    left, top, cell = 140, 90, 140
    cells = [
        ("TN", cm.tn, 0, 0),
        ("FP", cm.fp, 0, 1),
        ("FN", cm.fn, 1, 0),
        ("TP", cm.tp, 1, 1),
    ]
    max_count = max(1, cm.tp, cm.fp, cm.tn, cm.fn)
    body: list[str] = []
    for tag, count, row, col in cells:
        x = left + col * cell
        y = top + row * cell
        opacity = 0.15 + 0.75 * (count / max_count)
        body.append(
            f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
            f'fill="{PALETTE[0]}" fill-opacity="{opacity:.3f}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        body.append(_text(x + cell / 2, y + cell / 2 - 6, tag, size=14))
        body.append(_text(x + cell / 2, y + cell / 2 + 16, str(int(count)), size=14))
    body.append(_text(left + cell, top - 30, "Predicted", size=13))
    body.append(_text(left + cell / 2, top - 10, "0", size=12))
    body.append(_text(left + cell * 1.5, top - 10, "1", size=12))
    body.append(
        f'<text x="54" y="{top + cell}" text-anchor="middle" font-size="13" {_FONT} '
        f'transform="rotate(-90 54 {top + cell})">Actual</text>'
    )
    body.append(_text(left - 16, top + cell / 2 + 4, "0", size=12))
    body.append(_text(left - 16, top + cell * 1.5 + 4, "1", size=12))
    body.append(
        _text(
            width / 2,
            top + 2 * cell + 40,
            f"model: {model_name}, threshold: {threshold:g}",
            size=12,
        )
    )
    return _svg(width, height, body, "Confusion matrix (best model)")


def shap_summary_svg(
    names: Sequence[str],
    importances: Sequence[float],
    output_space: str,
    max_rows: int = 15,
) -> str:
    """Horizontal mean-|phi| bars, most important feature on top."""
    shown = list(zip(names, importances))[:max_rows]
    width = 640
    row_h = 26
    top = 60
    height = top + row_h * max(1, len(shown)) + 60
    label_x = 180
    bar_left = label_x + 10
    bar_span = width - bar_left - 90
    max_imp = max([v for _, v in shown], default=0.0)
    scale = bar_span / max_imp if max_imp > 0 else 0.0
    body: list[str] = []
    for i, (name, imp) in enumerate(shown):
        y = top + i * row_h
        w = imp * scale
        body.append(_text(label_x, y + row_h / 2 + 4, str(name), size=11, anchor="end"))
        body.append(_bar(bar_left, y + 4, w, row_h - 8, PALETTE[2]))
        body.append(
            _text(bar_left + w + 6, y + row_h / 2 + 4, f"{imp:.4f}", size=10, anchor="start")
        )
    body.append(
        _text(
            width / 2,
            height - 24,
            f"mean |SHAP value| ({output_space} space)",
            size=12,
        )
    )
    return _svg(width, height, body, "Global feature importance")
