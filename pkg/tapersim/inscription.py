"""Fabrication parameters -> refractive-index profiles.

A first inscription pass at relative power p (multiples of the modification
threshold) writes an elliptical-Gaussian index change whose contrast and
size both grow with p. Reruns over the written line, below the first-pass
threshold, raise the contrast inside the already modified region without
changing its shape. A taper is N reruns whose power follows a linear ramp
along z that starts just under the rerun threshold and ends at Pa at the
facet.
"""
import dataclasses
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Tuple, Type, TypeVar, Union

import numpy as np
import yaml

from tapersim.core.errors import ConfigError
from tapersim.field import Grid2D

RAMP_SHAPES = ("linear",)
P0_MAX = 4.0  # regular pass stays below the damage / multimode regime
DN_MAX_LIMIT = 5e-3
PROFILE_BOUND = 10.0  # max(dn) <= PROFILE_BOUND * dn_max
E2 = np.exp(-2.0)
FOOTPRINT_RTOL = 1e-12  # uniform rescaling must not move samples across the contour

T = TypeVar("T")


@dataclass(frozen=True)
class InscriptionParams:
    """Fabrication knobs. Powers are relative to the first-pass threshold; lengths in mm."""
    p0: float = 1.5
    pa_over_p0: float = 0.667
    reps: int = 8
    taper_length: float = 3.0
    ramp: str = "linear"

    def __post_init__(self):
        if not 1.0 < self.p0 <= P0_MAX:
            raise ValueError(f"p0 must lie in (1, {P0_MAX}], got {self.p0}")
        if not 0.0 < self.pa_over_p0 <= 1.0:
            raise ValueError(f"pa_over_p0 must lie in (0, 1], got {self.pa_over_p0}")
        if int(self.reps) != self.reps or self.reps < 0:
            raise ValueError(f"reps must be a nonnegative integer, got {self.reps}")
        if self.reps > 0 and not self.taper_length > 0:
            raise ValueError(f"taper_length must be positive when reps > 0, got {self.taper_length}")
        if self.ramp not in RAMP_SHAPES:
            raise ValueError(f"unknown ramp shape {self.ramp!r}; supported: {', '.join(RAMP_SHAPES)}")

    @property
    def pa(self) -> float:
        return self.p0 * self.pa_over_p0

    def replace(self, **changes) -> "InscriptionParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MaterialModel:
    """Calibrated glass response.

    Half-widths are 1/e^2 radii of the index change in um; slopes are um per
    unit of relative power above threshold.
    """
    dn_max: float = 3e-3
    wx0: float = 2.5
    wy0: float = 5.0
    volume_slope_x: float = 1.0
    volume_slope_y: float = 2.0
    rerun_threshold_factor: float = 0.95
    saturation_dose: float = 0.05
    n_clad: float = 1.45
    contrast_rise: float = 0.5
    rerun_ceiling: float = 3.0
    footprint_floor: float = 0.01
    ramp_start_margin: float = 0.999

    def __post_init__(self):
        checks = [
            (0.0 < self.dn_max <= DN_MAX_LIMIT, f"dn_max must lie in (0, {DN_MAX_LIMIT}]"),
            (self.wx0 > 0 and self.wy0 > 0, "half-widths wx0, wy0 must be positive"),
            (self.volume_slope_x >= 0 and self.volume_slope_y >= 0, "volume slopes must be nonnegative"),
            (0.0 < self.rerun_threshold_factor < 1.0, "rerun_threshold_factor must lie in (0, 1)"),
            (self.saturation_dose > 0, "saturation_dose must be positive"),
            (self.n_clad >= 1.0, "n_clad must be at least 1"),
            (self.contrast_rise > 0, "contrast_rise must be positive"),
            (0.0 < self.rerun_ceiling <= PROFILE_BOUND, f"rerun_ceiling must lie in (0, {PROFILE_BOUND}]"),
            (0.0 < self.footprint_floor < 1.0, "footprint_floor must lie in (0, 1)"),
            (0.0 < self.ramp_start_margin < 1.0, "ramp_start_margin must lie in (0, 1)"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)

    def contrast(self, p: float) -> float:
        """Peak index change of a first pass at relative power p."""
        if p <= 1.0:
            return 0.0
        return self.dn_max * (1.0 - np.exp(-(p - 1.0) / self.contrast_rise))

    def half_widths(self, p: float) -> Tuple[float, float]:
        over = max(p - 1.0, 0.0)
        return self.wx0 + self.volume_slope_x * over, self.wy0 + self.volume_slope_y * over

    @property
    def rerun_threshold(self) -> float:
        return self.rerun_threshold_factor

    @property
    def ramp_start(self) -> float:
        return self.rerun_threshold * self.ramp_start_margin

    def rerun_dose(self, p: float) -> float:
        """Dose delivered by one rerun: relative overdrive above the rerun threshold."""
        return max(p / self.rerun_threshold - 1.0, 0.0)

    def rerun_saturation(self, p: float) -> float:
        """Peak contrast that repeated reruns at power p converge to.

        The rerun's focal volume grows with its overdrive just like a first pass,
        spreading the deposited change thinner, so higher rerun powers saturate lower.
        """
        wx, wy = self.half_widths(p / self.rerun_threshold)
        return self.rerun_ceiling * self.dn_max * (self.wx0 * self.wy0) / (wx * wy)

    def replace(self, **changes) -> "MaterialModel":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class IndexProfile:
    """Index change dn(x, y) above the cladding index."""
    grid: Grid2D
    dn: np.ndarray
    n_clad: float

    def __post_init__(self):
        dn = np.array(self.dn, dtype=np.float64, copy=True)
        if dn.shape != self.grid.shape:
            raise ValueError(f"profile shape {dn.shape} does not match grid {self.grid.shape}")
        if np.any(dn < 0) or not np.all(np.isfinite(dn)):
            raise ValueError("index change must be finite and nonnegative")
        dn.setflags(write=False)
        object.__setattr__(self, "dn", dn)

    @property
    def peak(self) -> float:
        return float(self.dn.max())

    def index(self) -> np.ndarray:
        return self.n_clad + self.dn

    def footprint(self) -> np.ndarray:
        """Mask of samples at or above 1/e^2 of the peak, compared on the normalized profile."""
        peak = self.peak
        if peak <= 0:
            return np.zeros(self.grid.shape, dtype=bool)
        return self.dn / peak >= E2 * (1.0 - FOOTPRINT_RTOL)

    def footprint_area(self) -> float:
        return float(np.count_nonzero(self.footprint()) * self.grid.cell_area)


def single_pass_profile(p: float, model: MaterialModel, grid: Grid2D) -> IndexProfile:
    """Index change written by one pass at relative power p, centered on the origin."""
    if p < 0:
        raise ValueError(f"relative power must be nonnegative, got {p}")
    amplitude = model.contrast(p)
    if amplitude <= 0:
        return IndexProfile(grid, np.zeros(grid.shape), model.n_clad)
    wx, wy = model.half_widths(p)
    X, Y = grid.mesh()
    dn = amplitude * np.exp(-2.0 * (X ** 2 / wx ** 2 + Y ** 2 / wy ** 2))
    return IndexProfile(grid, dn, model.n_clad)


def accumulate_rerun(base: IndexProfile, p: float, model: MaterialModel) -> IndexProfile:
    """One rerun at relative power p over an existing line.

    Inside the modified region every sample moves toward its local saturation
    level dn_local = dn_old * C / peak, i.e.
    dn_new = dn_local * (1 - (1 - dn_old/dn_local) * exp(-dose/saturation_dose)).
    The local level is proportional to the current profile, so the shape and
    the 1/e^2 footprint are preserved. Samples never decrease. A base profile
    already above PROFILE_BOUND * dn_max is rejected.
    """
    if p < 0:
        raise ValueError(f"relative power must be nonnegative, got {p}")
    peak = base.peak
    if peak > PROFILE_BOUND * model.dn_max:
        raise ValueError(f"profile peak {peak:.3g} exceeds {PROFILE_BOUND:g} x dn_max = "
                         f"{PROFILE_BOUND * model.dn_max:.3g}")
    dose = model.rerun_dose(p)
    if dose <= 0 or peak <= 0:
        return base
    ceiling = model.rerun_saturation(p)
    target = ceiling - (ceiling - peak) * np.exp(-dose / model.saturation_dose)
    if target <= peak:
        return base
    region = base.dn > model.footprint_floor * peak
    dn = np.where(region, base.dn * (target / peak), base.dn)
    return IndexProfile(base.grid, dn, base.n_clad)


@dataclass(frozen=True, eq=False)
class TaperIndexMap:
    """Index profile along z (mm). The taper ends at the facet, z = z_extent."""
    params: InscriptionParams
    model: MaterialModel
    grid: Grid2D
    z_extent: float = field(default=None)

    def __post_init__(self):
        if self.z_extent is None:
            object.__setattr__(self, "z_extent", self.params.taper_length)
        if not self.z_extent > 0:
            raise ValueError(f"z_extent must be positive, got {self.z_extent}")
        if self.params.reps > 0 and self.params.taper_length > self.z_extent + 1e-12:
            raise ValueError(f"taper_length {self.params.taper_length} mm exceeds z_extent {self.z_extent} mm")

    @cached_property
    def regular(self) -> IndexProfile:
        return single_pass_profile(self.params.p0, self.model, self.grid)

    @property
    def taper_start(self) -> float:
        return self.z_extent - self.params.taper_length

    def ramp_power(self, z: float) -> float:
        """Rerun power at z; below the rerun threshold outside the taper."""
        local = z - self.taper_start
        p_start = self.model.ramp_start
        if self.params.reps == 0 or local < 0:
            return 0.0
        return p_start + (self.params.pa - p_start) * (local / self.params.taper_length)

    def profile_at(self, z: float) -> IndexProfile:
        return taper_profile_at(self, z)

    @property
    def facet(self) -> IndexProfile:
        return self.profile_at(self.z_extent)


def taper_profile_at(taper: TaperIndexMap, z: float) -> IndexProfile:
    """Regular profile followed by `reps` reruns at the ramp power of z."""
    if not -1e-12 <= z <= taper.z_extent + 1e-12:
        raise ValueError(f"z = {z} mm outside [0, {taper.z_extent}] mm")
    profile = taper.regular
    p = taper.ramp_power(min(max(z, 0.0), taper.z_extent))
    if taper.model.rerun_dose(p) <= 0:
        return profile
    for _ in range(taper.params.reps):
        profile = accumulate_rerun(profile, p, taper.model)
    return profile


# --- key-value files ---

def _plain(obj: Any) -> Dict[str, Any]:
    # numpy scalars are floats but PyYAML only represents the builtin type
    return {k: float(v) if isinstance(v, float) else v for k, v in dataclasses.asdict(obj).items()}


def _dump(obj: Any, path: Union[str, Path]) -> str:
    text = yaml.safe_dump(_plain(obj), sort_keys=False)
    Path(path).write_text(text, encoding="utf-8")
    return text


def _load(path: Union[str, Path], cls: Type[T]) -> T:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{cls.__name__} file not found: {path}")
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected key-value lines")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def save_material(model: MaterialModel, path: Union[str, Path]) -> str:
    """Write the model as `key: value` lines; returns the written text."""
    return _dump(model, path)


def load_material(path: Union[str, Path]) -> MaterialModel:
    return _load(path, MaterialModel)


def save_params(params: InscriptionParams, path: Union[str, Path]) -> str:
    return _dump(params, path)


def load_params(path: Union[str, Path]) -> InscriptionParams:
    return _load(path, InscriptionParams)


def model_digest(model: MaterialModel) -> str:
    """Stable hash of the model's serialized form."""
    text = yaml.safe_dump(_plain(model), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
