"""Render switchback CSV scans into figures.

Two kinds are supported, keyed to the CSV schemas the switchback CLI writes:

- distance: columns (t, d_eternal, d_switched); solid curve for the base
  family, dashed for the switched one, optional vertical marker at the
  crossing time.
- rates: columns (t, gamma1, gamma2, gamma3, pole); three curves with the
  line broken (not interpolated) across pole rows, whose rate cells are
  empty in the CSV.

The renderer never alters numbers: cells are kept as the exact strings read
from the file; plotting converts copies to float and ``dump_text`` re-emits
the stored strings, so a dump is byte-identical to the input's numeric block.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("distance", "rates")
SCHEMAS = {
    "distance": ["t", "d_eternal", "d_switched"],
    "rates": ["t", "gamma1", "gamma2", "gamma3", "pole"],
}


class SchemaMismatch(ValueError):
    """CSV header does not match the schema for the requested kind."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: Path
    kind: str
    output_image: Path
    tstar: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Table:
    """Parsed CSV: column names plus rows of raw cell strings."""

    header: list[str]
    rows: list[list[str]]

    def column(self, name: str) -> np.ndarray:
        """Column as floats; empty cells (pole rows) become NaN."""
        idx = self.header.index(name)
        return np.array(
            [float(r[idx]) if r[idx] != "" else np.nan for r in self.rows]
        )


def load_table(path: Path, kind: str) -> Table:
    """Read a CSV, skip comment lines, and validate the schema for ``kind``."""
    lines = Path(path).read_text().splitlines()
    data = [line for line in lines if not line.startswith("#")]
    if not data:
        raise SchemaMismatch(f"{path}: empty file, expected columns "
                             f"{SCHEMAS[kind]}")
    header = data[0].split(",")
    for name in SCHEMAS[kind]:
        if name not in header:
            raise SchemaMismatch(f"{path}: missing column {name!r} for kind "
                                 f"{kind!r} (found {header})")
    rows = [line.split(",") for line in data[1:]]
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SchemaMismatch(f"{path}: row {i + 2} has {len(row)} cells, "
                                 f"header has {width}")
    return Table(header, rows)


def dump_text(table: Table) -> str:
    """Numeric block exactly as read: header line plus raw data rows."""
    lines = [",".join(table.header)]
    lines.extend(",".join(row) for row in table.rows)
    return "\n".join(lines) + "\n"


def _render_distance(ax, table: Table) -> None:
    t = table.column("t")
    ax.plot(t, table.column("d_eternal"), color="0.45", linestyle="-",
            label="base family")
    ax.plot(t, table.column("d_switched"), color="crimson", linestyle="--",
            label="switched")
    ax.set_ylabel("trace distance")
    ax.set_ylim(bottom=0.0)


def _render_rates(ax, table: Table) -> None:
    t = table.column("t")
    pole = table.column("pole")
    for name, style in (("gamma1", "-"), ("gamma2", "--"), ("gamma3", "-.")):
        values = table.column(name)
        # NaN on pole rows breaks the line instead of bridging the divergence
        values = np.where(pole == 1.0, np.nan, values)
        ax.plot(t, values, linestyle=style, label=name)
    ax.set_ylabel("rate")


def render(spec: FigureSpec):
    """Render one figure; returns the matplotlib Figure after saving it."""
    table = load_table(spec.input_csv, spec.kind)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    if spec.kind == "distance":
        _render_distance(ax, table)
    else:
        _render_rates(ax, table)
    if spec.tstar is not None:
        ax.axvline(spec.tstar, color="0.3", linestyle=":", linewidth=1.0,
                   label="crossing time")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    fig.tight_layout()
    spec.output_image.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output_image, dpi=150)
    return fig
