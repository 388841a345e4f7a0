"""Grayscale SVG heatmaps of stored estimates over the (p, delta) grid."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ContractViolation
from .sweep import cell_records, load_store, stored_pc

PLOT = 800
LEFT, RIGHT, TOP, BOTTOM = 90, 120, 50, 80
WIDTH = LEFT + PLOT + RIGHT
HEIGHT = TOP + PLOT + BOTTOM


class RaggedGrid(ContractViolation):
    pass


def _gray(v: float) -> str:
    # 0 -> white, 1 -> black
    level = round(255 * (1.0 - min(1.0, max(0.0, v))))
    return f"#{level:02x}{level:02x}{level:02x}"


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


def collect_grid(records: list[dict], quantity: str, n: int | None = None):
    recs = [r for r in cell_records(records) if r["quantity"] == quantity]
    if not recs:
        raise ContractViolation(f"no records for quantity {quantity!r}")
    scales = sorted({r["cell"]["n"] for r in recs})
    if n is None:
        if len(scales) > 1:
            raise ContractViolation(f"several scales {scales} stored; pick one with n")
        n = scales[0]
    grid: dict[tuple[float, float], float] = {}
    for r in recs:
        if r["cell"]["n"] == n:
            grid[(r["cell"]["p"], r["cell"]["delta"])] = r["estimate"]["point"]
    ps = sorted({p for p, _ in grid})
    ds = sorted({d for _, d in grid})
    missing = [(p, d) for p in ps for d in ds if (p, d) not in grid]
    if missing:
        raise RaggedGrid("missing cells: " + ", ".join(f"(p={p:g}, delta={d:g})" for p, d in missing))
    return ps, ds, grid, n


def render_svg(ps, ds, grid, title: str, pc: float | None = None) -> str:
    cw = PLOT / len(ps)
    ch = PLOT / len(ds)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{LEFT + PLOT / 2:.1f}" y="30" text-anchor="middle" font-family="sans-serif" '
        f'font-size="18">{escape(title)}</text>',
    ]
    for i, p in enumerate(ps):
        for j, d in enumerate(ds):
            v = grid[(p, d)]
            x = LEFT + i * cw
            y = TOP + PLOT - (j + 1) * ch  # delta grows upwards
            out.append(
                f'<rect x="{x:.3f}" y="{y:.3f}" width="{cw:.3f}" height="{ch:.3f}" '
                f'fill="{_gray(v)}" stroke="#808080" stroke-width="0.5"><title>'
                f"p={p:g} delta={d:g} value={v:.6g}</title></rect>"
            )
    out.append(
        f'<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="#000000"/>'
    )
    for i, p in enumerate(ps):
        x = LEFT + (i + 0.5) * cw
        out.append(
            f'<text x="{x:.3f}" y="{TOP + PLOT + 20}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12">{_num(p)}</text>'
        )
    for j, d in enumerate(ds):
        y = TOP + PLOT - (j + 0.5) * ch
        out.append(
            f'<text x="{LEFT - 8}" y="{y + 4:.3f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="12">{_num(d)}</text>'
        )
    out.append(
        f'<text x="{LEFT + PLOT / 2:.1f}" y="{TOP + PLOT + 55}" text-anchor="middle" '
        'font-family="sans-serif" font-size="16">p</text>'
    )
    out.append(
        f'<text x="25" y="{TOP + PLOT / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16" transform="rotate(-90 25 {TOP + PLOT / 2:.1f})">delta</text>'
    )
    if pc is not None and len(ps) > 1 and ps[0] <= pc <= ps[-1]:
        # linear interpolation between cell centres
        i = max(k for k in range(len(ps)) if ps[k] <= pc)
        frac = 0.0 if i == len(ps) - 1 else (pc - ps[i]) / (ps[i + 1] - ps[i])
        x = LEFT + (i + 0.5 + frac) * cw
        out.append(
            f'<line x1="{x:.3f}" y1="{TOP}" x2="{x:.3f}" y2="{TOP + PLOT}" stroke="#d62728" '
            'stroke-width="2" stroke-dasharray="6,4"/>'
        )
        out.append(
            f'<text x="{x:.3f}" y="{TOP - 6}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" fill="#d62728">p_c={pc:.4f}</text>'
        )
    # legend
    lx = LEFT + PLOT + 30
    for k in range(11):
        v = k / 10
        y = TOP + PLOT - (k + 1) * 30
        out.append(f'<rect x="{lx}" y="{y}" width="24" height="30" fill="{_gray(v)}" stroke="#808080"/>')
        out.append(
            f'<text x="{lx + 30}" y="{y + 19}" font-family="sans-serif" font-size="11">{v:.1f}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_heatmap(
    store: str | Path,
    quantity: str,
    out: str | Path,
    n: int | None = None,
    pc: float | None = None,
) -> Path:
    """Write the heatmap for one stored quantity; ``pc`` defaults to the last stored estimate."""
    records = load_store(store)
    ps, ds, grid, n = collect_grid(records, quantity, n)
    if pc is None:
        pc = stored_pc(records)
    svg = render_svg(ps, ds, grid, f"{quantity}, n={n}", pc)
    out = Path(out)
    out.write_text(svg, encoding="utf-8")
    return out
