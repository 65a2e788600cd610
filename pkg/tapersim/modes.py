"""Fundamental scalar mode of an index profile.

Solves (d2/dx2 + d2/dy2 + k0^2 n(x,y)^2) E = beta^2 E with a 5-point finite
difference Laplacian, zero-Dirichlet walls, and shifted inverse power
iteration. The shift sits at the top of the spectrum, k0^2 (n_clad + max dn)^2,
so the iteration converges to the largest beta^2.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from numpy.linalg import norm
from scipy import sparse
import scipy.sparse.linalg as spalg

from tapersim.core.errors import ConvergenceError, CutoffError, GridMismatchError
from tapersim.field import ScalarField, power, save_field
from tapersim.inscription import IndexProfile

BOUNDARIES = ("dirichlet",)


def wavenumber(wavelength_nm: float) -> float:
    """Vacuum wavenumber k0 in 1/um."""
    if not wavelength_nm > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength_nm} nm")
    return 2.0 * np.pi / (wavelength_nm * 1e-3)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 2000
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"solver tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unsupported boundary {self.boundary!r}")


@dataclass(frozen=True, eq=False)
class GuidedMode:
    """Unit-power fundamental mode; the field is real with a positive peak."""
    field: ScalarField
    n_eff: float
    wavelength: float
    residual: float

    @property
    def beta_sq(self) -> float:
        return (wavenumber(self.wavelength) * self.n_eff) ** 2


def _second_difference(n: int, step: float) -> sparse.csr_matrix:
    return sparse.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1],
                        shape=(n, n), format="csr") / step ** 2


def helmholtz_operator(profile: IndexProfile, wavelength: float) -> sparse.csr_matrix:
    """Discrete L + k0^2 n^2 acting on row-major (x fastest) field vectors."""
    grid = profile.grid
    k0 = wavenumber(wavelength)
    laplacian = (sparse.kron(sparse.identity(grid.ny), _second_difference(grid.nx, grid.dx))
                 + sparse.kron(_second_difference(grid.ny, grid.dy), sparse.identity(grid.nx)))
    potential = sparse.diags((k0 * profile.index()).ravel() ** 2)
    return (laplacian + potential).tocsr()


def _residual(operator: sparse.spmatrix, vector: np.ndarray, eigenvalue: float) -> float:
    return float(norm(operator @ vector - eigenvalue * vector) / norm(vector))


def solve_fundamental(profile: IndexProfile, wavelength: float,
                      config: SolverConfig = SolverConfig()) -> GuidedMode:
    """Largest-beta^2 eigenpair of the profile at `wavelength` (nm)."""
    peak = profile.peak
    if peak <= 0:
        raise CutoffError("profile has no index contrast; no guided mode")
    k0 = wavenumber(wavelength)
    operator = helmholtz_operator(profile, wavelength)
    shift = (k0 * (profile.n_clad + peak)) ** 2
    size = operator.shape[0]
    lu = spalg.splu((operator - shift * sparse.identity(size)).tocsc())

    # the profile itself is nodeless and symmetric, a good fundamental guess
    vector = profile.dn.ravel() / norm(profile.dn.ravel())
    residual = np.inf
    eigenvalue = shift
    for iteration in range(1, config.max_iterations + 1):
        vector = lu.solve(vector)
        vector /= norm(vector)
        eigenvalue = float(vector @ (operator @ vector))
        residual = _residual(operator, vector, eigenvalue)
        if residual <= config.tolerance:
            break
    else:
        raise ConvergenceError(f"mode solve at {wavelength:g} nm did not converge in "
                               f"{config.max_iterations} iterations (residual {residual:.3g})",
                               residual=residual, iterations=config.max_iterations)
    logging.debug(f"[modes] {wavelength:g} nm converged in {iteration} iterations, residual {residual:.2e}")

    if eigenvalue <= (k0 * profile.n_clad) ** 2:
        raise CutoffError(f"no guided mode at {wavelength:g} nm: beta^2 {eigenvalue:.6g} "
                          f"<= (k0 n_clad)^2 {(k0 * profile.n_clad) ** 2:.6g}")

    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    values = vector.reshape(profile.grid.shape).astype(np.complex128)
    field = ScalarField(profile.grid, values, wavelength)
    field = field.scaled(1.0 / np.sqrt(power(field)))
    return GuidedMode(field=field, n_eff=float(np.sqrt(eigenvalue) / k0),
                      wavelength=wavelength, residual=residual)


def mode_residual(mode: GuidedMode, profile: IndexProfile) -> float:
    """||(L + k0^2 n^2) E - beta^2 E|| / ||E|| on the given profile."""
    if mode.field.grid != profile.grid:
        raise GridMismatchError("mode and profile are defined on different grids")
    operator = helmholtz_operator(profile, mode.wavelength)
    vector = mode.field.values.ravel()
    return _residual(operator, vector, mode.beta_sq)


def save_mode(mode: GuidedMode, path: Union[str, Path]) -> Path:
    """Field CSV at `path` plus a `.mode` sidecar line; returns the sidecar path."""
    path = Path(path)
    save_field(mode.field, path)
    sidecar = path.with_suffix(".mode")
    sidecar.write_text(f"n_eff={mode.n_eff:.12g},wavelength_nm={mode.wavelength:.12g},"
                       f"residual={mode.residual:.6g}\n", encoding="ascii")
    return sidecar
