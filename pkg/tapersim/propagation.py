"""Paraxial split-step Fourier beam propagation through a taper.

Each step of length dz applies half a diffraction step in the spectral
domain, the phase of (n(x, y, z) - n_ref) at the step midpoint, the second
half of the diffraction step, and an absorbing frame at the grid margin.
Transmission is modal: the squared projection of the facet field onto the
facet's own fundamental mode.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from tapersim.core.errors import GridMismatchError, ModeNotContainedError, PhysicsError
from tapersim.core.logging import timed
from tapersim.coupling import mfd_1e2
from tapersim.field import Grid2D, ScalarField, power
from tapersim.inscription import InscriptionParams, MaterialModel, TaperIndexMap
from tapersim.modes import GuidedMode, SolverConfig, solve_fundamental, wavenumber

MIN_STEPS = 100
DIAGNOSTICS_HEADER = "z_mm,power,mfd_h_um,mfd_v_um"


@dataclass(frozen=True)
class PropagationConfig:
    """dz and absorber width in um; absorber_strength is the edge loss rate in 1/um."""
    dz: float = 5.0
    absorber_width: float = 8.0
    absorber_strength: float = 0.02
    n_ref: Optional[float] = None  # None: the cladding index
    diagnostics_every: int = 10
    diagnostics: bool = False  # experiments write per-step CSVs

    def __post_init__(self):
        if not self.dz > 0:
            raise ValueError(f"dz must be positive, got {self.dz}")
        if self.absorber_width < 0 or self.absorber_strength < 0:
            raise ValueError("absorber width and strength must be nonnegative")
        if self.diagnostics_every < 1:
            raise ValueError(f"diagnostics_every must be >= 1, got {self.diagnostics_every}")


@dataclass(frozen=True, eq=False)
class PropagationResult:
    output: ScalarField
    transmission: float
    radiated: float
    facet_mode: GuidedMode
    steps: int


class ScanEntry(NamedTuple):
    length: float
    transmission: float
    error: Optional[str] = None


def absorber_mask(grid: Grid2D, width: float, strength: float, dz: float) -> np.ndarray:
    """Per-step attenuation, quadratic in the depth into the outer `width` um."""
    if width <= 0 or strength <= 0:
        return np.ones(grid.shape)
    if 2 * width >= min(grid.extent_x, grid.extent_y):
        raise ValueError(f"absorber width {width} um does not fit the grid margin")
    X, Y = grid.mesh()
    x_lo, x_hi = grid.x[0], grid.x[-1]
    y_lo, y_hi = grid.y[0], grid.y[-1]
    depth_x = np.clip(width - np.minimum(X - x_lo, x_hi - X), 0.0, None) / width
    depth_y = np.clip(width - np.minimum(Y - y_lo, y_hi - Y), 0.0, None) / width
    return np.exp(-strength * (depth_x ** 2 + depth_y ** 2) * dz)


class BeamPropagator:
    """Split-step propagator bound to one grid, wavelength and step."""

    def __init__(self, grid: Grid2D, wavelength: float, n_ref: float, dz: float,
                 absorber_width: float = 0.0, absorber_strength: float = 0.0):
        self.grid = grid
        self.wavelength = wavelength
        self.n_ref = n_ref
        self.dz = dz
        self.k0 = wavenumber(wavelength)
        kx = 2.0 * np.pi * np.fft.fftfreq(grid.nx, grid.dx)
        ky = 2.0 * np.pi * np.fft.fftfreq(grid.ny, grid.dy)
        KX, KY = np.meshgrid(kx, ky, indexing="xy")
        self._half_diffraction = np.exp(-1j * (KX ** 2 + KY ** 2) / (2.0 * self.k0 * n_ref) * (dz / 2.0))
        self._absorber = absorber_mask(grid, absorber_width, absorber_strength, dz)

    def step(self, values: np.ndarray, index: np.ndarray) -> np.ndarray:
        values = np.fft.ifft2(np.fft.fft2(values) * self._half_diffraction)
        values = values * np.exp(1j * self.k0 * (index - self.n_ref) * self.dz)
        values = np.fft.ifft2(np.fft.fft2(values) * self._half_diffraction)
        return values * self._absorber

    def run(self, field: ScalarField, index_at: Callable[[float], np.ndarray], steps: int,
            on_step: Optional[Callable[[int, float, np.ndarray], None]] = None) -> ScalarField:
        """March `steps` steps; index_at(z_um) gives the full index at the step midpoint."""
        if field.grid != self.grid:
            raise GridMismatchError("input field and propagator use different grids")
        values = np.array(field.values)
        for k in range(steps):
            values = self.step(values, index_at((k + 0.5) * self.dz))
            if on_step is not None:
                on_step(k + 1, (k + 1) * self.dz, values)
        return ScalarField(self.grid, values, field.wavelength)


def step_count(length_um: float, dz: float) -> int:
    return max(1, int(math.ceil(length_um / dz - 1e-9)))


def modal_transmission(output: ScalarField, mode: ScalarField, input_power: float) -> float:
    """|<E_out, mode>|^2 / (P_in * P_mode)."""
    inner = np.sum(np.conj(mode.values) * output.values) * output.grid.cell_area
    return float(min(abs(inner) ** 2 / (input_power * power(mode)), 1.0))


class _Diagnostics:
    def __init__(self, grid: Grid2D, wavelength: float, every: int):
        self.grid = grid
        self.wavelength = wavelength
        self.every = every
        self.rows: List[List[float]] = []

    def record(self, k: int, z_um: float, values: np.ndarray) -> None:
        if k % self.every:
            return
        field = ScalarField(self.grid, values, self.wavelength)
        intensity = field.intensity()
        try:
            widths = [mfd_1e2(intensity, "H"), mfd_1e2(intensity, "V")]
        except ModeNotContainedError:
            widths = [float("nan"), float("nan")]
        self.rows.append([z_um * 1e-3, power(field)] + widths)

    def write(self, path: Union[str, Path]) -> None:
        np.savetxt(path, np.array(self.rows).reshape(-1, 4), delimiter=",",
                   header=DIAGNOSTICS_HEADER, comments="", fmt="%.9g")


def propagate(taper: TaperIndexMap, input_mode: GuidedMode, config: PropagationConfig = PropagationConfig(),
              solver: SolverConfig = SolverConfig(),
              diagnostics: Optional[Union[str, Path]] = None) -> PropagationResult:
    """Propagate the start mode through the taper and project onto the facet mode."""
    grid = taper.grid
    if input_mode.field.grid != grid:
        raise GridMismatchError("input mode was not solved on the taper's grid")
    length_um = taper.z_extent * 1e3
    steps = step_count(length_um, config.dz)
    taper_um = taper.params.taper_length * 1e3 if taper.params.reps > 0 else length_um
    if taper_um / config.dz < MIN_STEPS - 1e-9:
        raise ValueError(f"dz = {config.dz} um gives fewer than {MIN_STEPS} steps over "
                         f"{taper_um:g} um of taper")
    n_ref = config.n_ref if config.n_ref is not None else taper.model.n_clad
    propagator = BeamPropagator(grid, input_mode.wavelength, n_ref, length_um / steps,
                                config.absorber_width, config.absorber_strength)

    def index_at(z_um: float) -> np.ndarray:
        return taper.profile_at(min(z_um * 1e-3, taper.z_extent)).index()

    recorder = _Diagnostics(grid, input_mode.wavelength, config.diagnostics_every) if diagnostics else None
    output = propagator.run(input_mode.field, index_at, steps, recorder.record if recorder else None)
    if recorder:
        recorder.write(diagnostics)

    facet_mode = solve_fundamental(taper.facet, input_mode.wavelength, solver)
    transmission = modal_transmission(output, facet_mode.field, power(input_mode.field))
    logging.debug(f"[propagation] {taper.z_extent:g} mm, {steps} steps: transmission {transmission:.5f}")
    return PropagationResult(output=output, transmission=transmission,
                             radiated=max(0.0, 1.0 - transmission),
                             facet_mode=facet_mode, steps=steps)


@timed
def adiabatic_scan(params: InscriptionParams, model: MaterialModel, lengths: Sequence[float],
                   grid: Grid2D, wavelength: float = 800.0,
                   config: PropagationConfig = PropagationConfig(), solver: SolverConfig = SolverConfig(),
                   workers: int = 1) -> List[ScanEntry]:
    """Transmission versus taper length with identical start and facet profiles.

    The step is refined for short tapers so every run keeps at least MIN_STEPS
    steps. Failures are reported per entry instead of aborting the scan.
    """
    lengths = list(lengths)
    if not lengths:
        raise ValueError("adiabatic scan needs at least one taper length")
    if any(not length > 0 for length in lengths):
        raise ValueError(f"taper lengths must be positive, got {lengths}")

    start = TaperIndexMap(params.replace(taper_length=lengths[0]), model, grid, lengths[0]).regular
    input_mode = solve_fundamental(start, wavelength, solver)

    def run_one(length: float) -> ScanEntry:
        taper = TaperIndexMap(params.replace(taper_length=length), model, grid, length)
        dz = min(config.dz, length * 1e3 / MIN_STEPS)
        result = propagate(taper, input_mode, replace(config, dz=dz), solver)
        logging.info(f"[adiabatic-scan] {length:g} mm: transmission {result.transmission:.4f}",
                     extra={"sweep_value": length})
        return ScanEntry(length, result.transmission)

    entries: List[Optional[ScanEntry]] = [None] * len(lengths)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = {executor.submit(run_one, length): idx for idx, length in enumerate(lengths)}
        for future in as_completed(futures):
            idx = futures[future]
            try:
                entries[idx] = future.result()
            except (PhysicsError, ValueError) as e:
                logging.error(f"[adiabatic-scan] {lengths[idx]:g} mm failed: {e}")
                entries[idx] = ScanEntry(lengths[idx], float("nan"), str(e))
    return entries
