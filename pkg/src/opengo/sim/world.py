"""Terrain grids loaded from plain-text map files.

A map file is a rectangle of cell letters, one row per line::

    FFFFRR
    FFFFRR
    UUUUUU

Letters: F flat, R rough, U stairs up, D stairs down, O obstacle,
N narrow.  Each cell is 0.5 m on a side; world coordinates are meters
with (0, 0) at the top-left corner of the first cell, x growing along a
row and y growing down the rows.
"""

from __future__ import annotations

import math
from pathlib import Path

from opengo.errors import MapFormatError, OutOfMap
from opengo.sim.model import CELL_SIZE_M, TerrainClass


class TerrainGrid:
    def __init__(self, rows: list[str]) -> None:
        if not rows:
            raise MapFormatError("map has no rows")
        width = len(rows[0])
        if width == 0:
            raise MapFormatError("map has an empty row")
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MapFormatError(f"row {i} has length {len(row)}, expected {width}")
            for letter in row:
                try:
                    TerrainClass.from_letter(letter)
                except ValueError as exc:
                    raise MapFormatError(str(exc)) from None
        self._rows = rows
        self.n_rows = len(rows)
        self.n_cols = width

    @classmethod
    def from_text(cls, text: str) -> "TerrainGrid":
        rows = [line for line in text.splitlines() if line.strip()]
        return cls(rows)

    @classmethod
    def from_file(cls, path: str | Path) -> "TerrainGrid":
        return cls.from_text(Path(path).read_text())

    @property
    def width_m(self) -> float:
        return self.n_cols * CELL_SIZE_M

    @property
    def height_m(self) -> float:
        return self.n_rows * CELL_SIZE_M

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width_m and 0.0 <= y < self.height_m

    def class_at(self, x: float, y: float) -> TerrainClass:
        """Terrain class of the cell containing (x, y).

        Raises :class:`OutOfMap` for any position outside the grid
        rectangle, boundary included on the far edges.
        """
        if not self.contains(x, y):
            raise OutOfMap(f"position ({x:.3f}, {y:.3f}) outside {self.width_m}x{self.height_m} m grid")
        col = int(math.floor(x / CELL_SIZE_M))
        row = int(math.floor(y / CELL_SIZE_M))
        return TerrainClass.from_letter(self._rows[row][col])

    def to_text(self) -> str:
        return "\n".join(self._rows) + "\n"
