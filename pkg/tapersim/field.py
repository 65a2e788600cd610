"""Transverse grids, complex scalar fields and their file formats.

Lengths are micrometers throughout; wavelengths are nanometers and are
converted where they are used. Arrays are stored row-major with shape
(ny, nx), so values[j, i] sits at (x0 + i*dx, y0 + j*dy).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

MIN_SAMPLES = 8
EXTENT_PER_MFD = 4.0

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Grid2D:
    """Uniform transverse grid."""
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float

    def __post_init__(self):
        if self.nx < MIN_SAMPLES or self.ny < MIN_SAMPLES:
            raise ValueError(f"grid needs at least {MIN_SAMPLES} samples per axis, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacing must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def extent_x(self) -> float:
        return self.nx * self.dx

    @property
    def extent_y(self) -> float:
        return self.ny * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def nearest_index(self, x: float, y: float) -> Tuple[int, int]:
        """(row, col) of the sample closest to (x, y), clipped to the grid."""
        i = int(np.clip(np.rint((x - self.x0) / self.dx), 0, self.nx - 1))
        j = int(np.clip(np.rint((y - self.y0) / self.dy), 0, self.ny - 1))
        return j, i


def _frozen_array(values: np.ndarray, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Complex scalar field on a grid. `wavelength` is in nm."""
    grid: Grid2D
    values: np.ndarray
    wavelength: float

    def __post_init__(self):
        values = _frozen_array(self.values, np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", values)

    def scaled(self, factor: complex) -> "ScalarField":
        return ScalarField(self.grid, self.values * factor, self.wavelength)

    def intensity(self) -> "IntensityProfile":
        return IntensityProfile(self.grid, np.abs(self.values) ** 2)


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    """Nonnegative real intensity on a grid (arbitrary units)."""
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, np.float64)
        if values.shape != self.grid.shape:
            raise ValueError(f"intensity shape {values.shape} does not match grid {self.grid.shape}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("intensity must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    def scaled(self, factor: float) -> "IntensityProfile":
        return IntensityProfile(self.grid, self.values * factor)

    def centroid(self) -> Tuple[float, float]:
        total = float(np.sum(self.values))
        if total <= 0:
            raise ValueError("centroid of an all-zero intensity is undefined")
        X, Y = self.grid.mesh()
        return float(np.sum(X * self.values) / total), float(np.sum(Y * self.values) / total)


def make_grid(extent_x: float, extent_y: float, nx: int, ny: int) -> Grid2D:
    """Grid of nx*ny samples centered on the origin (first sample at -extent/2)."""
    if not (extent_x > 0 and extent_y > 0):
        raise ValueError(f"grid extents must be positive, got {extent_x} x {extent_y}")
    if nx < MIN_SAMPLES or ny < MIN_SAMPLES:
        raise ValueError(f"grid needs at least {MIN_SAMPLES} samples per axis, got {nx}x{ny}")
    return Grid2D(nx=int(nx), ny=int(ny), dx=extent_x / nx, dy=extent_y / ny,
                  x0=-extent_x / 2, y0=-extent_y / 2)


def power(field: ScalarField) -> float:
    """Midpoint-rule integral of |E|^2 over the grid."""
    return float(np.sum(np.abs(field.values) ** 2) * field.grid.cell_area)


def gaussian_field(grid: Grid2D, wx: float, wy: float, center: Tuple[float, float] = (0.0, 0.0),
                   wavelength: float = 800.0) -> ScalarField:
    """Unit-power Gaussian whose intensity falls to 1/e^2 at (wx, wy) from `center`."""
    if not (wx > 0 and wy > 0):
        raise ValueError(f"Gaussian waists must be positive, got wx={wx}, wy={wy}")
    cx, cy = center
    X, Y = grid.mesh()
    values = np.exp(-((X - cx) ** 2 / wx ** 2 + (Y - cy) ** 2 / wy ** 2)).astype(np.complex128)
    raw = ScalarField(grid, values, wavelength)
    norm = power(raw)
    if norm <= 0:
        raise ValueError("Gaussian lies entirely outside the grid")
    return raw.scaled(1.0 / np.sqrt(norm))


def resample(field: ScalarField, target: Grid2D) -> ScalarField:
    """Bilinear resampling onto `target`; samples outside the source extent are zero."""
    if target == field.grid:
        return ScalarField(target, field.values, field.wavelength)
    src = field.grid
    X, Y = target.mesh()
    points = np.column_stack([Y.ravel(), X.ravel()])
    parts = []
    for component in (field.values.real, field.values.imag):
        interp = RegularGridInterpolator((src.y, src.x), component, method="linear",
                                         bounds_error=False, fill_value=0.0)
        parts.append(interp(points).reshape(target.shape))
    return ScalarField(target, parts[0] + 1j * parts[1], field.wavelength)


def check_extent(grid: Grid2D, mfd_h: float, mfd_v: float) -> bool:
    """True when the grid spans at least 4x the mode's MFD on both axes."""
    ok = grid.extent_x >= EXTENT_PER_MFD * mfd_h and grid.extent_y >= EXTENT_PER_MFD * mfd_v
    if not ok:
        logging.warning(f"Grid {grid.extent_x:.1f}x{grid.extent_y:.1f} um is smaller than "
                        f"{EXTENT_PER_MFD:g}x the mode ({mfd_h:.2f}x{mfd_v:.2f} um)")
    return ok


# --- CSV / PGM formats ---

def _coordinate_columns(grid: Grid2D) -> Tuple[np.ndarray, np.ndarray]:
    X, Y = grid.mesh()
    return X.ravel(), Y.ravel()


def save_field(field: ScalarField, path: PathLike) -> None:
    """Write `x_um,y_um,re,im` rows in row-major order."""
    x, y = _coordinate_columns(field.grid)
    data = np.column_stack([x, y, field.values.real.ravel(), field.values.imag.ravel()])
    np.savetxt(path, data, delimiter=",", header="x_um,y_um,re,im", comments="", fmt="%.12g")


def save_intensity(profile: IntensityProfile, path: PathLike) -> None:
    """Write `x_um,y_um,intensity` rows in row-major order."""
    x, y = _coordinate_columns(profile.grid)
    data = np.column_stack([x, y, profile.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="x_um,y_um,intensity", comments="", fmt="%.12g")


def _read_csv(path: PathLike, expected_header: Tuple[str, ...]) -> np.ndarray:
    with open(path, "r", encoding="ascii") as f:
        header = tuple(h.strip() for h in f.readline().strip().split(","))
    if header != expected_header:
        raise ValueError(f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(expected_header):
        raise ValueError(f"{path}: expected {len(expected_header)} columns, got {data.shape[1]}")
    return data


def _grid_from_columns(x: np.ndarray, y: np.ndarray) -> Grid2D:
    xs = np.unique(x)
    ys = np.unique(y)
    if xs.size * ys.size != x.size:
        raise ValueError(f"samples do not form a full grid ({xs.size}x{ys.size} vs {x.size} rows)")
    steps_x = np.diff(xs)
    steps_y = np.diff(ys)
    if steps_x.size == 0 or steps_y.size == 0:
        raise ValueError("grid needs more than one sample per axis")
    if not (np.allclose(steps_x, steps_x[0], rtol=1e-6) and np.allclose(steps_y, steps_y[0], rtol=1e-6)):
        raise ValueError("sample coordinates are not uniformly spaced")
    return Grid2D(nx=xs.size, ny=ys.size, dx=float(steps_x.mean()), dy=float(steps_y.mean()),
                  x0=float(xs[0]), y0=float(ys[0]))


def _place(grid: Grid2D, x: np.ndarray, y: np.ndarray, column: np.ndarray) -> np.ndarray:
    i = np.rint((x - grid.x0) / grid.dx).astype(int)
    j = np.rint((y - grid.y0) / grid.dy).astype(int)
    out = np.zeros(grid.shape, dtype=column.dtype)
    out[j, i] = column
    return out


def load_field(path: PathLike, wavelength: float) -> ScalarField:
    data = _read_csv(path, ("x_um", "y_um", "re", "im"))
    grid = _grid_from_columns(data[:, 0], data[:, 1])
    values = _place(grid, data[:, 0], data[:, 1], data[:, 2] + 1j * data[:, 3])
    return ScalarField(grid, values, wavelength)


def read_intensity_csv(path: PathLike) -> Tuple[Grid2D, np.ndarray]:
    """Raw (grid, values) from an `x_um,y_um,intensity` file; values may be negative."""
    data = _read_csv(path, ("x_um", "y_um", "intensity"))
    grid = _grid_from_columns(data[:, 0], data[:, 1])
    return grid, _place(grid, data[:, 0], data[:, 1], data[:, 2])


def _pgm_tokens(raw: bytes, count: int) -> Tuple[list, int]:
    """First `count` whitespace-separated header tokens and the offset after them."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(raw[start:pos])
    # exactly one whitespace byte separates header and raster
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """8/16-bit binary graymap ("P5") as a float array of shape (height, width)."""
    raw = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(raw, 4)
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid PGM dimensions {width}x{height}, maxval {maxval}")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    body = raw[offset:offset + expected]
    if len(body) != expected:
        raise ValueError(f"{path}: PGM raster has {len(body)} bytes, expected {expected}")
    return np.frombuffer(body, dtype=dtype).reshape(height, width).astype(np.float64)


def save_pgm(values: np.ndarray, path: PathLike, maxval: int = 255) -> None:
    """Write a nonnegative array as a binary PGM scaled so its maximum maps to `maxval`."""
    values = np.asarray(values, dtype=np.float64)
    peak = values.max()
    scaled = np.zeros_like(values) if peak <= 0 else np.rint(values / peak * maxval)
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    height, width = values.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(np.clip(scaled, 0, maxval).astype(dtype).tobytes())
