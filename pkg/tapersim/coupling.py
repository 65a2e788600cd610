"""Mode-size metrics and fiber coupling efficiency."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from tapersim.core.errors import ModeNotContainedError
from tapersim.field import (Grid2D, IntensityProfile, ScalarField, gaussian_field, make_grid,
                            power, read_intensity_csv, read_pgm, resample)

AXES = ("H", "V")
E2 = np.exp(-2.0)
ROUNDOFF = 1e-9
BACKGROUND_MARGIN = 0.05

CSV_HEADER = "wavelength_nm,mfd_h_um,mfd_v_um,area_um2,fiber_mfd_um,eta"


@dataclass(frozen=True)
class MfdReport:
    mfd_h: float
    mfd_v: float
    area: float
    centroid: Tuple[float, float]

    @classmethod
    def from_widths(cls, mfd_h: float, mfd_v: float, centroid: Tuple[float, float]) -> "MfdReport":
        """Area of the ellipse through both 1/e^2 widths."""
        return cls(mfd_h=mfd_h, mfd_v=mfd_v, area=np.pi * mfd_h * mfd_v / 4.0, centroid=centroid)


@dataclass(frozen=True)
class FiberSpec:
    """Single-mode fiber; MFD scales as (wavelength / reference) ** scaling_exponent."""
    mfd_at_reference: float = 5.5
    reference_wavelength: float = 800.0
    scaling_exponent: float = 1.0
    min_wavelength: float = 600.0
    max_wavelength: float = 1000.0

    def __post_init__(self):
        if not self.mfd_at_reference > 0:
            raise ValueError(f"fiber MFD must be positive, got {self.mfd_at_reference}")
        if not self.reference_wavelength > 0:
            raise ValueError(f"reference wavelength must be positive, got {self.reference_wavelength}")

    def mfd_at(self, wavelength: float) -> float:
        if not self.min_wavelength <= wavelength <= self.max_wavelength:
            raise ValueError(f"fiber model valid for {self.min_wavelength:g}-{self.max_wavelength:g} nm, "
                             f"got {wavelength:g} nm")
        return self.mfd_at_reference * (wavelength / self.reference_wavelength) ** self.scaling_exponent


@dataclass(frozen=True)
class CouplingReport:
    eta: float
    mfd: MfdReport
    fiber_mfd: float
    wavelength: float

    def csv_row(self) -> str:
        return (f"{self.wavelength:.6g},{self.mfd.mfd_h:.6f},{self.mfd.mfd_v:.6f},"
                f"{self.mfd.area:.6f},{self.fiber_mfd:.6f},{self.eta:.6f}")


def _check_axis(axis: str) -> str:
    axis = axis.upper()
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return axis


def peak_index(intensity: IntensityProfile) -> Tuple[int, int]:
    """(row, col) of the maximum; ties go to the sample nearest the centroid."""
    values = intensity.values
    top = values.max()
    if top <= 0:
        raise ModeNotContainedError("intensity is identically zero")
    candidates = np.argwhere(values == top)
    if len(candidates) == 1:
        return int(candidates[0][0]), int(candidates[0][1])
    cx, cy = intensity.centroid()
    grid = intensity.grid
    dist = (grid.x[candidates[:, 1]] - cx) ** 2 + (grid.y[candidates[:, 0]] - cy) ** 2
    j, i = candidates[int(np.argmin(dist))]
    return int(j), int(i)


def _cut(intensity: IntensityProfile, axis: str) -> Tuple[np.ndarray, np.ndarray, float]:
    j, i = peak_index(intensity)
    grid = intensity.grid
    if axis == "H":
        return intensity.values[j, :], grid.x, grid.dx
    return intensity.values[:, i], grid.y, grid.dy


def mfd_1e2(intensity: IntensityProfile, axis: str) -> float:
    """Full 1/e^2 width of the cut through the peak along H (x) or V (y)."""
    axis = _check_axis(axis)
    cut, coords, step = _cut(intensity, axis)
    threshold = cut.max() * E2
    above = np.nonzero(cut >= threshold)[0]
    first, last = above[0], above[-1]
    if first == 0 or last == cut.size - 1:
        raise ModeNotContainedError(f"1/e^2 crossing along {axis} lies outside the grid")
    left = coords[first - 1] + (threshold - cut[first - 1]) / (cut[first] - cut[first - 1]) * step
    right = coords[last] + (cut[last] - threshold) / (cut[last] - cut[last + 1]) * step
    return float(right - left)


def d4sigma(intensity: IntensityProfile, axis: str) -> float:
    """Second-moment (D4sigma) width of the marginal along an axis; diagnostic only."""
    axis = _check_axis(axis)
    values = intensity.values
    total = values.sum()
    if total <= 0:
        raise ModeNotContainedError("intensity is identically zero")
    if axis == "H":
        marginal, coords = values.sum(axis=0), intensity.grid.x
    else:
        marginal, coords = values.sum(axis=1), intensity.grid.y
    mean = np.sum(marginal * coords) / total
    return float(4.0 * np.sqrt(np.sum(marginal * (coords - mean) ** 2) / total))


def mfd_report(intensity: IntensityProfile) -> MfdReport:
    return MfdReport.from_widths(mfd_1e2(intensity, "H"), mfd_1e2(intensity, "V"), intensity.centroid())


def common_grid(a: Grid2D, b: Grid2D) -> Grid2D:
    """The finer of two grids; ties break on the grid parameters so the choice ignores argument order."""
    if a == b:
        return a
    return min(a, b, key=lambda g: (g.cell_area, g.nx, g.ny, g.dx, g.dy, g.x0, g.y0))


def overlap_efficiency(a: ScalarField, b: ScalarField) -> float:
    """|int a* b dA|^2 / (int |a|^2 dA int |b|^2 dA), evaluated on the common grid of a and b."""
    if b.grid != a.grid:
        grid = common_grid(a.grid, b.grid)
        a, b = resample(a, grid), resample(b, grid)
    pa, pb = power(a), power(b)
    if pa <= 0 or pb <= 0:
        raise ValueError("overlap of a zero-power field is undefined")
    inner = np.sum(np.conj(a.values) * b.values) * a.grid.cell_area
    eta = float(abs(inner) ** 2 / (pa * pb))
    if eta > 1.0:
        if eta - 1.0 > ROUNDOFF:
            logging.warning(f"overlap {eta:.12f} exceeds 1 by more than round-off")
        eta = 1.0
    return eta


def fiber_mode(spec: FiberSpec, wavelength: float, grid: Grid2D,
               center: Tuple[float, float] = (0.0, 0.0)) -> ScalarField:
    """Unit-power circular Gaussian with the fiber's MFD at `wavelength`."""
    waist = spec.mfd_at(wavelength) / 2.0
    return gaussian_field(grid, waist, waist, center, wavelength)


def coupling_report(field: ScalarField, spec: FiberSpec) -> CouplingReport:
    """Mode size and butt-coupling efficiency to a fiber aligned on the mode centroid."""
    intensity = field.intensity()
    report = mfd_report(intensity)
    fiber = fiber_mode(spec, field.wavelength, field.grid, report.centroid)
    eta = overlap_efficiency(fiber, field)
    logging.debug(f"[coupling] {field.wavelength:g} nm: MFD {report.mfd_h:.3f} x {report.mfd_v:.3f} um "
                  f"(D4sigma {d4sigma(intensity, 'H'):.3f} x {d4sigma(intensity, 'V'):.3f}), eta {eta:.4f}")
    return CouplingReport(eta=eta, mfd=report, fiber_mfd=spec.mfd_at(field.wavelength),
                          wavelength=field.wavelength)


def coupled_power(field: ScalarField, spec: FiberSpec, center: Tuple[float, float]) -> float:
    """Power the field launches into the fiber mode centred at `center`."""
    fiber = fiber_mode(spec, field.wavelength, field.grid, center)
    return overlap_efficiency(fiber, field) * power(field)


def subtract_background(values: np.ndarray) -> np.ndarray:
    """Subtract the median of the outer 5% frame and clamp at zero."""
    ny, nx = values.shape
    my = max(1, int(round(BACKGROUND_MARGIN * ny)))
    mx = max(1, int(round(BACKGROUND_MARGIN * nx)))
    frame = np.ones(values.shape, dtype=bool)
    frame[my:ny - my, mx:nx - mx] = False
    return np.clip(values - np.median(values[frame]), 0.0, None)


def load_intensity_image(path: Union[str, Path], pixel_pitch: Optional[float] = None) -> IntensityProfile:
    """Near-field image from CSV (`x_um,y_um,intensity`) or binary PGM with the given pitch (um)."""
    path = Path(path)
    if pixel_pitch is not None and not pixel_pitch > 0:
        raise ValueError(f"pixel pitch must be positive, got {pixel_pitch}")
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic == b"P5":
        if pixel_pitch is None:
            raise ValueError(f"{path}: PGM images need a pixel pitch")
        raw = read_pgm(path)
        ny, nx = raw.shape
        grid = make_grid(nx * pixel_pitch, ny * pixel_pitch, nx, ny)
    else:
        grid, raw = read_intensity_csv(path)
    return IntensityProfile(grid, subtract_background(raw))
