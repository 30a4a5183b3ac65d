"""Raster grids, ASCII grid I/O, grayscale depth rendering, synthetic terrain.

The on-disk format is the plain-text ASCII grid: a six-line header

    ncols <int>
    nrows <int>
    xllcorner <float>
    yllcorner <float>
    cellsize <float>
    NODATA_value <float>

followed by ``nrows`` whitespace-separated rows ordered north to south.
Floats are written with shortest round-trip formatting, so a save/load
cycle reproduces values bit-exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

DEFAULT_NODATA = -9999.0

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class GridFormatError(ValueError):
    """Raised when an ASCII grid file cannot be parsed."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DemGrid:
    """Digital elevation model: a 2D array of elevations in meters.

    Cells equal to ``nodata`` are outside the domain and are treated as
    impermeable walls by the inundation solver.
    """

    elevations: np.ndarray
    cell_size: float = 1.0
    nodata: float = DEFAULT_NODATA
    xllcorner: float = 0.0
    yllcorner: float = 0.0

    def __post_init__(self) -> None:
        elev = np.asarray(self.elevations, dtype=np.float64)
        if elev.ndim != 2 or elev.shape[0] < 1 or elev.shape[1] < 1:
            raise ValueError(f"elevations must be a 2D array with at least one cell, got shape {elev.shape}")
        if not (self.cell_size > 0 and np.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive and finite, got {self.cell_size}")
        if not np.isfinite(self.nodata):
            raise ValueError(f"nodata sentinel must be finite, got {self.nodata}")
        active = elev != self.nodata
        if not np.isfinite(elev[active]).all():
            raise ValueError("elevations contain non-finite values outside nodata cells")
        object.__setattr__(self, "elevations", _freeze(elev))

    @property
    def rows(self) -> int:
        return self.elevations.shape[0]

    @property
    def cols(self) -> int:
        return self.elevations.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.elevations.shape

    @property
    def active_mask(self) -> np.ndarray:
        """Boolean mask of in-domain cells."""
        return self.elevations != self.nodata


@dataclass(frozen=True)
class FloodMap:
    """Water depth in meters per cell; depths are finite and non-negative."""

    depths: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self) -> None:
        depths = np.asarray(self.depths, dtype=np.float64)
        if depths.ndim != 2 or depths.shape[0] < 1 or depths.shape[1] < 1:
            raise ValueError(f"depths must be a 2D array with at least one cell, got shape {depths.shape}")
        if not (self.cell_size > 0 and np.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive and finite, got {self.cell_size}")
        if not np.isfinite(depths).all():
            raise ValueError("depths contain non-finite values")
        if (depths < 0).any():
            worst = float(depths.min())
            raise ValueError(f"depths must be non-negative, found {worst}")
        object.__setattr__(self, "depths", _freeze(depths))

    @property
    def rows(self) -> int:
        return self.depths.shape[0]

    @property
    def cols(self) -> int:
        return self.depths.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.depths.shape


@dataclass(frozen=True)
class RasterRender:
    """8-bit grayscale image of a flood map (255 = dry, darker = deeper)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.dtype != np.uint8 or pixels.ndim != 2:
            raise ValueError(f"pixels must be a 2D uint8 array, got dtype {pixels.dtype}, ndim {pixels.ndim}")
        pixels = pixels.copy()
        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


def _fmt(value: float) -> str:
    v = float(value)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def save_ascii_grid(grid: DemGrid | FloodMap, path: str | os.PathLike) -> None:
    """Write a grid to an ASCII grid file. FloodMaps are written with the default nodata sentinel."""
    if isinstance(grid, DemGrid):
        values, nodata = grid.elevations, grid.nodata
        xll, yll = grid.xllcorner, grid.yllcorner
    elif isinstance(grid, FloodMap):
        values, nodata = grid.depths, DEFAULT_NODATA
        xll, yll = 0.0, 0.0
    else:
        raise TypeError(f"expected DemGrid or FloodMap, got {type(grid).__name__}")
    rows, cols = values.shape
    lines = [
        f"ncols {cols}",
        f"nrows {rows}",
        f"xllcorner {_fmt(xll)}",
        f"yllcorner {_fmt(yll)}",
        f"cellsize {_fmt(grid.cell_size)}",
        f"NODATA_value {_fmt(nodata)}",
    ]
    for r in range(rows):
        lines.append(" ".join(_fmt(v) for v in values[r]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_header(lines: list[str], path: str) -> dict[str, float]:
    header: dict[str, float] = {}
    if len(lines) < 6:
        raise GridFormatError(f"{path}: truncated header, expected 6 lines, found {len(lines)}")
    for i, key in enumerate(_HEADER_KEYS):
        parts = lines[i].split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise GridFormatError(f"{path}: line {i + 1}: expected '{_HEADER_KEYS[i]} <value>', got {lines[i]!r}")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise GridFormatError(f"{path}: line {i + 1}: non-numeric value {parts[1]!r} for {key}") from None
    for key in ("ncols", "nrows"):
        if header[key] < 1 or header[key] != int(header[key]):
            raise GridFormatError(f"{path}: header {key} must be a positive integer, got {header[key]}")
    return header


def _parse_body(lines: list[str], header: dict[str, float], path: str) -> np.ndarray:
    rows, cols = int(header["nrows"]), int(header["ncols"])
    body = [(i + 7, ln) for i, ln in enumerate(lines[6:]) if ln.strip()]
    if len(body) != rows:
        raise GridFormatError(f"{path}: expected {rows} data rows, found {len(body)}")
    values = np.empty((rows, cols), dtype=np.float64)
    for r, (lineno, line) in enumerate(body):
        tokens = line.split()
        if len(tokens) != cols:
            raise GridFormatError(f"{path}: line {lineno}: row {r + 1} has {len(tokens)} values, expected {cols}")
        for c, tok in enumerate(tokens):
            try:
                values[r, c] = float(tok)
            except ValueError:
                raise GridFormatError(f"{path}: line {lineno}: non-numeric token {tok!r}") from None
    return values


def load_ascii_grid(path: str | os.PathLike) -> DemGrid:
    """Parse an ASCII grid file into a DemGrid; raises GridFormatError with a line number on bad input."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    spath = os.fspath(path)
    header = _parse_header(lines, spath)
    values = _parse_body(lines, header, spath)
    return DemGrid(
        elevations=values,
        cell_size=header["cellsize"],
        nodata=header["nodata_value"],
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
    )


def load_flood_map(path: str | os.PathLike) -> FloodMap:
    """Parse an ASCII grid file of water depths. Nodata cells are rejected: depth grids must be total."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    spath = os.fspath(path)
    header = _parse_header(lines, spath)
    values = _parse_body(lines, header, spath)
    hit = values == header["nodata_value"]
    if hit.any():
        r, c = np.argwhere(hit)[0]
        raise GridFormatError(f"{spath}: depth grid contains nodata cell at row {r + 1}, column {c + 1}")
    return FloodMap(depths=values, cell_size=header["cellsize"])


def render_depth(flood: FloodMap) -> RasterRender:
    """Map depths to 8-bit grayscale: pixel = 255 - clamp(round(depth_cm), 0, 255).

    Dry cells render white (255); one gray level per centimeter down to
    black at 2.55 m and beyond.
    """
    depth_cm = flood.depths * 100.0
    pixels = 255 - np.clip(np.rint(depth_cm), 0, 255).astype(np.uint8)
    return RasterRender(pixels=pixels)


def save_pgm(render: RasterRender, path: str | os.PathLike) -> None:
    """Write a binary PGM (P5, maxval 255) image."""
    rows, cols = render.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(render.pixels.tobytes())


def synth_dem(kind: str, rows: int, cols: int, seed: int = 0, *, cell_size: float = 20.0,
              z: float = 0.0, relief: float = 5.0, noise: float = 0.0,
              channel_depth: float = 2.0, channel_width: int = 0) -> DemGrid:
    """Generate a synthetic DEM for tests and demos.

    kind is one of:
      flat     constant elevation z
      slope    plane falling from z+relief (west edge) to z (east edge)
      bowl     paraboloid, minimum z at the grid center, z+relief at the corners
      channel  slope with a strip of rows lowered by channel_depth

    Gaussian noise with standard deviation ``noise`` is added last; the same
    seed always yields the same terrain.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid must have at least one cell, got {rows}x{cols}")
    rr, cc = np.meshgrid(np.arange(rows, dtype=np.float64), np.arange(cols, dtype=np.float64), indexing="ij")
    if kind == "flat":
        elev = np.full((rows, cols), z, dtype=np.float64)
    elif kind == "slope":
        run = max(cols - 1, 1)
        elev = z + relief * (1.0 - cc / run)
    elif kind == "bowl":
        rc, cenc = (rows - 1) / 2.0, (cols - 1) / 2.0
        rnorm = (rr - rc) / max(rc, 0.5)
        cnorm = (cc - cenc) / max(cenc, 0.5)
        elev = z + relief * (rnorm**2 + cnorm**2) / 2.0
    elif kind == "channel":
        run = max(cols - 1, 1)
        elev = z + relief * (1.0 - cc / run)
        width = channel_width if channel_width > 0 else max(rows // 8, 1)
        lo = (rows - width) // 2
        elev[lo:lo + width, :] -= channel_depth
    else:
        raise ValueError(f"unknown terrain kind {kind!r}; expected flat, slope, bowl, or channel")
    if noise > 0:
        rng = np.random.default_rng(seed)
        elev = elev + rng.normal(0.0, noise, size=(rows, cols))
    return DemGrid(elevations=elev, cell_size=cell_size)
