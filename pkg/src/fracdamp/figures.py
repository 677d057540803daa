"""Figure emission: SVG plots plus standalone plot-script alternatives.

Figures are derived from result tables; each SVG embeds the config hash
in its metadata and uses a hash-salted id stream so identical inputs
give identical files.  Next to every SVG a plain matplotlib script is
written that regenerates the plot from the CSV alone.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .tables import ResultTable, SchemaError

__all__ = ["emit_figures", "plot_table"]

_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Regenerates {svg_name} from {csv_name}.  config_hash={config_hash}
import csv
from pathlib import Path

import matplotlib.pyplot as plt

rows = list(csv.reader(Path(__file__).with_name("{csv_name}").open()))
header, units, data = rows[0], rows[1], rows[2:]
xi, yi = header.index("{x}"), header.index("{y}")
xs = [float(r[xi]) for r in data]
ys = [float(r[yi]) for r in data]
fig, ax = plt.subplots()
ax.plot(xs, ys, "o-")
ax.set_xscale("{xscale}")
ax.set_yscale("{yscale}")
ax.set_xlabel("{x} [{xunit}]")
ax.set_ylabel("{y} [{yunit}]")
ax.set_title("{title}")
fig.savefig(Path(__file__).with_name("{svg_name}.regen.svg"))
"""

#: table name -> (x column, y column, log-x, log-y, reference-slope column)
_KNOWN_KINDS = {
    "decay_fit": ("time", "l2_norm", True, True, "reference_slope"),
    "lifespan": ("epsilon", "lifespan", True, True, "reference_slope"),
    "testfn_ladder": ("R", "rhs", True, True, "exponent"),
    "decay_lemma": ("radius", "abs_value", True, True, "slope_target"),
}


def plot_table(table: ResultTable, out_dir, kind=None) -> Path | None:
    """Plot one table; returns the SVG path or None for an empty table."""
    if not table.rows:
        return None
    kind = kind or table.name
    spec = _KNOWN_KINDS.get(kind)
    names = [c for c, _ in table.columns]
    if spec is None:
        numeric = [
            c for c in names
            if all(isinstance(v, float) for v in table.column(c))
        ]
        if len(numeric) < 2:
            return None
        xcol, ycol, logx, logy, refcol = numeric[0], numeric[1], False, False, None
    else:
        xcol, ycol, logx, logy, refcol = spec
        if xcol not in names or ycol not in names:
            raise SchemaError(
                f"table {table.name!r} lacks columns {xcol!r}/{ycol!r}"
            )

    xs = np.asarray(table.column(xcol), dtype=float)
    ys = np.asarray(table.column(ycol), dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys) & ((ys > 0) | ~logy)
    xs, ys = xs[keep], ys[keep]
    if xs.size == 0:
        return None

    plt.rcParams["svg.hashsalt"] = table.config_hash or table.name
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(xs, ys, "o-", lw=1.2, label=ycol)
    if refcol and refcol in names:
        slope = float(table.column(refcol)[0])
        if logx and logy and xs.size >= 2:
            anchor = ys[0] * (xs / xs[0]) ** slope
            ax.plot(xs, anchor, "--", lw=1.0, label=f"slope {slope:.3g}")
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    units = dict(table.columns)
    ax.set_xlabel(f"{xcol} [{units.get(xcol, '-')}]")
    ax.set_ylabel(f"{ycol} [{units.get(ycol, '-')}]")
    ax.set_title(table.name)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    svg = out_dir / f"{table.name}.svg"
    fig.savefig(
        svg,
        metadata={"Date": None, "Description": f"config_hash={table.config_hash}"},
    )
    plt.close(fig)

    script = out_dir / f"plot_{table.name}.py"
    script.write_text(_PLOT_SCRIPT.format(
        svg_name=svg.name, csv_name=f"{table.name}.csv",
        config_hash=table.config_hash, x=xcol, y=ycol,
        xscale="log" if logx else "linear",
        yscale="log" if logy else "linear",
        xunit=units.get(xcol, "-"), yunit=units.get(ycol, "-"),
        title=table.name,
    ))
    return svg


def emit_figures(tables, out_dir) -> list:
    """Emit SVG + plot script for each table; empty tables are skipped."""
    written = []
    for table in tables:
        path = plot_table(table, out_dir)
        if path is not None:
            written.append(path)
    return written
