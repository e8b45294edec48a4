"""Render overlay figures from self-describing betatrace CSV files.

This package is a pure file-to-file transformation: the only numerics it
adds are the closed-form semicircle curve (2/pi) sqrt((1-x^2)_+) for the
density overlay.  Kernel prediction curves are consumed from tables the
producing CLI emitted (its `kernel --diag` output), never re-implemented,
so the two components cannot silently disagree.

Figure kinds:

* density-overlay:      density CSV (bin_center, value) + semicircle curve
* correlation-overlay:  correlate CSV (estimate, stderr, ..., f_id) with
                        +-2 stderr bars, against a kernel table (t, value)
* trend:                trend CSV (N, ratio[, ratio...]) with a line at 1

Every input must carry the producer's "# config:" header; the header of
the first input is embedded in the figure metadata so a figure can be
traced back to the run that produced it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("density-overlay", "correlation-overlay", "trend")

CONFIG_PREFIX = "# config: "
SCHEMA_PREFIX = "# schema: "


class RenderError(RuntimeError):
    """Input file missing, malformed, or inconsistent with the figure kind."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[str, ...]
    kind: str
    out: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise RenderError("at least one input CSV is required")


@dataclass(frozen=True)
class Table:
    config: dict
    config_line: str
    schema: str
    cells: list[list[str]]

    def column(self, idx: int) -> np.ndarray:
        try:
            return np.array([float(row[idx]) for row in self.cells])
        except (ValueError, IndexError) as exc:
            raise RenderError(f"column {idx} is not numeric: {exc}") from exc


def read_table(path: str | Path) -> Table:
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input not found: {path}")
    config = None
    config_line = ""
    schema = ""
    cells = []
    for line in path.read_text().splitlines():
        if line.startswith(CONFIG_PREFIX):
            config_line = line[len(CONFIG_PREFIX):]
            try:
                config = json.loads(config_line)
            except json.JSONDecodeError as exc:
                raise RenderError(f"{path}: config header is not JSON: {exc}") from exc
        elif line.startswith(SCHEMA_PREFIX):
            schema = line[len(SCHEMA_PREFIX):]
        elif line.startswith("#") or not line.strip():
            continue
        else:
            cells.append(line.split(","))
    if config is None:
        raise RenderError(f"{path}: missing self-describing '# config:' header")
    if not cells:
        raise RenderError(f"{path}: no data rows")
    widths = {len(row) for row in cells}
    if len(widths) != 1:
        raise RenderError(f"{path}: ragged rows (widths {sorted(widths)})")
    return Table(config=config, config_line=config_line, schema=schema, cells=cells)


def semicircle(x: np.ndarray) -> np.ndarray:
    return (2.0 / np.pi) * np.sqrt(np.clip(1.0 - x * x, 0.0, None))


def _bump_center(f_id: str) -> float:
    m = re.search(r"c=([-+0-9.eE]+)", f_id)
    if not m:
        raise RenderError(f"cannot read a bump center from f_id {f_id!r}")
    return float(m.group(1))


def _density_overlay(ax, tables):
    if len(tables) != 1:
        raise RenderError("density-overlay takes exactly one density CSV")
    t = tables[0]
    if not t.schema.startswith("bin_center"):
        raise RenderError(f"density-overlay needs a density CSV, got schema {t.schema!r}")
    centers = t.column(0)
    values = t.column(1)
    width = centers[1] - centers[0] if centers.size > 1 else 0.05
    ax.bar(centers, values, width=width, color="#9ecae9", edgecolor="#3182bd",
           linewidth=0.4, label="empirical")
    grid = np.linspace(-1.0, 1.0, 400)
    ax.plot(grid, semicircle(grid), "k-", lw=1.5, label="semicircle")
    cfg = t.config
    ax.set_xlabel("x")
    ax.set_ylabel("density / N")
    ax.set_title(f"level density: N={cfg.get('n')}, beta={cfg.get('beta')}, "
                 f"{cfg.get('constraint', 'none')}")
    ax.legend(frameon=False)


def _correlation_overlay(ax, tables):
    if len(tables) != 2:
        raise RenderError("correlation-overlay takes an estimate CSV and a "
                          "kernel table CSV")
    est_t, kern_t = tables
    if not est_t.schema.startswith("estimate"):
        raise RenderError(f"first input must be a correlate CSV, got {est_t.schema!r}")
    if not kern_t.schema.startswith("t,"):
        raise RenderError(f"second input must be a kernel table, got {kern_t.schema!r}")
    centers = np.array([_bump_center(row[6]) for row in est_t.cells])
    est = est_t.column(0)
    err = 2.0 * est_t.column(1)
    ax.errorbar(centers, est, yerr=err, fmt="o", ms=4, capsize=3,
                color="#d6604d", label="estimate +- 2 s.e.")
    ax.plot(kern_t.column(0), kern_t.column(1), "k-", lw=1.2, label="prediction")
    cfg = est_t.config
    ax.set_xlabel("bump center t")
    ax.set_ylabel("correlation integral")
    ax.set_title(f"{cfg.get('regime')} window: N={cfg.get('n')}, "
                 f"beta={cfg.get('beta')}")
    ax.legend(frameon=False)


def _trend(ax, tables):
    if len(tables) != 1:
        raise RenderError("trend takes exactly one trend CSV")
    t = tables[0]
    if not t.schema.startswith("N,"):
        raise RenderError(f"trend needs a (N, ratio...) CSV, got schema {t.schema!r}")
    n = t.column(0)
    labels = t.schema.split(",")[1:]
    for i, lab in enumerate(labels, start=1):
        ax.plot(n, t.column(i), "o-", label=lab)
    ax.axhline(1.0, color="k", lw=1.0, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("ratio")
    ax.set_title(f"{t.config.get('check', 'trend')} ratios")
    ax.legend(frameon=False)


_RENDERERS = {
    "density-overlay": _density_overlay,
    "correlation-overlay": _correlation_overlay,
    "trend": _trend,
}


def render(spec: FigureSpec) -> Path:
    """Render the figure and return the output path.

    The output is written atomically (temp file, then rename), so a failed
    render leaves no partial file behind.  The first input's config header
    is embedded in the image metadata under the key "source_config".
    """
    tables = [read_table(p) for p in spec.inputs]
    out = Path(spec.out)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    try:
        _RENDERERS[spec.kind](ax, tables)
        fig.tight_layout()
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = out.with_name(out.name + ".tmp" + out.suffix)
        if out.suffix.lower() == ".svg":
            metadata = {"Description": "source_config: " + tables[0].config_line}
        else:
            metadata = {"source_config": tables[0].config_line}
        fig.savefig(tmp, metadata=metadata)
        tmp.replace(out)
    finally:
        plt.close(fig)
    return out
