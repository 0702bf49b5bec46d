"""Escape-time grids of the iterated Julia sets and their graymap/CSV encoders."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, PreconditionError
from .seqcore import SURVIVED, checkpoint, escape_codes


@dataclass(frozen=True)
class Region:
    center: complex = 0j
    width: float = 6.0
    height: float = 6.0

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0
                and np.isfinite(self.height) and self.height > 0):
            raise PreconditionError("region", "width and height must be finite and > 0")
        if not np.isfinite(complex(self.center)):
            raise PreconditionError("region", "center must be finite")

    @property
    def conjugation_symmetric(self):
        return complex(self.center).imag == 0.0


@dataclass(frozen=True)
class EscapeGrid:
    region: Region
    resolution: tuple[int, int]
    start_stage: int
    K: int
    cells: np.ndarray  # (ny, nx) int32, row 0 at the top

    def pixel_centers(self):
        return pixel_centers(self.region, self.resolution)

    @property
    def pixel_diagonal(self):
        nx, ny = self.resolution
        return float(np.hypot(self.region.width / nx, self.region.height / ny))

    def survived(self):
        return self.cells == SURVIVED

    def cell_of(self, z):
        """(iy, ix) of the cells containing ``z``; clipped to the grid."""
        z = np.asarray(z, dtype=complex)
        nx, ny = self.resolution
        c = complex(self.region.center)
        fx = (z.real - (c.real - self.region.width / 2)) / (self.region.width / nx)
        fy = ((c.imag + self.region.height / 2) - z.imag) / (self.region.height / ny)
        ix = np.clip(np.floor(fx).astype(np.int64), 0, nx - 1)
        iy = np.clip(np.floor(fy).astype(np.int64), 0, ny - 1)
        return iy, ix


def pixel_centers(region, resolution):
    """Complex pixel centers, shape (ny, nx).  Mirror-symmetric about ``region.center``."""
    nx, ny = resolution
    c = complex(region.center)
    x = c.real + (region.width / nx) * (np.arange(nx) - (nx - 1) / 2)
    y = c.imag + (region.height / ny) * ((ny - 1) / 2 - np.arange(ny))
    return x[None, :] + 1j * y[:, None]


def render_grid(spec, region=None, resolution=(512, 512), m=0, K=6, threads=1):
    """Escape code of every pixel center iterated from stage ``m`` up to checkpoint ``M_K``."""
    region = region or Region()
    nx, ny = (int(v) for v in resolution)
    if nx < 1 or ny < 1:
        raise PreconditionError("resolution", "nx and ny must be >= 1")
    if K < 1:
        raise PreconditionError("K", "must be >= 1")
    K = spec.clip_horizon(K)
    if not 0 <= m < checkpoint(spec, K):
        raise PreconditionError("m", f"must satisfy 0 <= m < M_K = {checkpoint(spec, K)}")
    z = pixel_centers(region, (nx, ny))
    cells = np.empty((ny, nx), dtype=np.int32)
    bands = np.array_split(np.arange(ny), max(1, min(int(threads), ny)))

    def work(rows):
        if rows.size:
            cells[rows] = escape_codes(spec, z[rows], K, start_stage=m)

    if len(bands) == 1:
        work(bands[0])
    else:
        with ThreadPoolExecutor(len(bands)) as pool:
            list(pool.map(work, bands))
    cells.setflags(write=False)
    return EscapeGrid(region, (nx, ny), m, K, cells)


def gray_levels(grid):
    """8-bit levels: SURVIVED -> 0, code k -> round(255 k / K)."""
    k = grid.cells.astype(np.int64)
    level = (255 * k + grid.K // 2) // grid.K
    return np.where(k == SURVIVED, 0, np.clip(level, 0, 255)).astype(np.uint8)


def encode_pgm(grid):
    nx, ny = grid.resolution
    return f"P5 {nx} {ny} 255\n".encode("ascii") + gray_levels(grid).tobytes(order="C")


def _write_bytes(path, data):
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def write_cells_csv(path, grid):
    z = grid.pixel_centers()
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ix", "iy", "re", "im", "code"])
            ny, nx = grid.cells.shape
            for iy in range(ny):
                for ix in range(nx):
                    p = z[iy, ix]
                    w.writerow([ix, iy, repr(float(p.real)), repr(float(p.imag)),
                                int(grid.cells[iy, ix])])
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def encode_outputs(grid, image_path, csv_path=None):
    """Write the graymap and, when ``csv_path`` is given, the per-cell CSV."""
    _write_bytes(os.fspath(image_path), encode_pgm(grid))
    if csv_path is not None:
        write_cells_csv(os.fspath(csv_path), grid)
