"""YAML configuration loader with validation."""
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from tapersim.core.errors import ConfigError
from tapersim.coupling import FiberSpec
from tapersim.field import Grid2D, make_grid
from tapersim.inscription import InscriptionParams
from tapersim.modes import SolverConfig
from tapersim.propagation import PropagationConfig

CALIBRATE = "calibrate"


@dataclass
class GridConfig:
    """Transverse window in um and its sample counts."""
    extent_x: float = 80.0
    extent_y: float = 80.0
    nx: int = 160
    ny: int = 160

    def build(self) -> Grid2D:
        return make_grid(self.extent_x, self.extent_y, self.nx, self.ny)


@dataclass
class CalibrationConfig:
    eta_regular: float = 0.52
    eta_taper: float = 0.77
    mfd_ratio: float = 2.0
    wavelength: float = 800.0
    reps: int = 8
    pa_over_p0: float = 0.667
    max_evaluations: int = 300
    restarts: int = 3
    residual_tolerance: float = 1e-3


@dataclass
class SweepConfig:
    power_ratios: List[float] = field(default_factory=lambda: [0.667, 0.75, 0.833, 0.917, 1.0])
    power_reps: int = 16
    wavelengths: List[float] = field(default_factory=lambda: [632.8, 700.0, 750.0, 800.0, 850.0, 900.0, 950.0])
    wavelength_reps: int = 16
    reps: List[int] = field(default_factory=lambda: [0, 1, 2, 4, 8, 16])
    scan_lengths: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 3.0])
    scan_reps: int = 8
    transmission_threshold: float = 0.99


@dataclass
class Config:
    """tapersim experiment configuration."""
    material: str = CALIBRATE
    grid: GridConfig = field(default_factory=GridConfig)
    fiber: FiberSpec = field(default_factory=FiberSpec)
    inscription: InscriptionParams = field(default_factory=InscriptionParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    sweeps: SweepConfig = field(default_factory=SweepConfig)
    wavelength: float = 800.0
    output_dir: str = "out"
    workers: int = 4
    json_logs: bool = False
    verbosity: int = 0
    source: Optional[Path] = None

    def material_path(self) -> Optional[Path]:
        """Model file path, resolved against the config file's directory; None when calibrating."""
        if self.material == CALIBRATE:
            return None
        path = Path(self.material)
        if not path.is_absolute() and self.source is not None:
            path = self.source.parent / path
        return path

    def digest(self) -> str:
        """SHA-256 of the config file bytes, or of the defaults when no file was given."""
        payload = self.source.read_bytes() if self.source is not None else b"defaults"
        return hashlib.sha256(payload).hexdigest()

    def validate(self) -> None:
        """Check sweep ranges and referenced files. Raises ConfigError."""
        sweeps = self.sweeps
        if not sweeps.power_ratios or any(not 0 < r <= 1 for r in sweeps.power_ratios):
            raise ConfigError(f"sweeps.power_ratios must be a nonempty list in (0, 1], got {sweeps.power_ratios}")
        if not sweeps.wavelengths or any(w <= 0 for w in sweeps.wavelengths):
            raise ConfigError(f"sweeps.wavelengths must be a nonempty list of positive values, got {sweeps.wavelengths}")
        if not sweeps.reps or any(int(n) != n or n < 0 for n in sweeps.reps):
            raise ConfigError(f"sweeps.reps must be a nonempty list of nonnegative integers, got {sweeps.reps}")
        if not sweeps.scan_lengths or any(length <= 0 for length in sweeps.scan_lengths):
            raise ConfigError(f"sweeps.scan_lengths must be a nonempty list of positive lengths, "
                              f"got {sweeps.scan_lengths}")
        for name in ("power_reps", "wavelength_reps", "scan_reps"):
            if getattr(sweeps, name) < 1:
                raise ConfigError(f"sweeps.{name} must be >= 1")
        if not 0 < sweeps.transmission_threshold <= 1:
            raise ConfigError("sweeps.transmission_threshold must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        path = self.material_path()
        if path is not None and not path.exists():
            raise ConfigError(f"material file not found: {path}")


def load_config(path: Optional[str] = None) -> Config:
    """Load config from YAML file or return defaults.

    Args:
        path: Path to YAML config file. If None, returns default config.

    Returns:
        Config instance

    Raises:
        FileNotFoundError: If specified path doesn't exist
        ConfigError: If YAML is invalid or a value is out of range
    """
    if path is None:
        return Config()

    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    try:
        with open(config_path) as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    config = _parse_config(data)
    config.source = config_path
    return config


def _section(data: Dict[str, Any], name: str, cls):
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {unknown}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"section '{name}': {e}") from e


def _parse_config(data: Dict[str, Any]) -> Config:
    """Parse config dict into Config dataclass."""
    sections = {
        "grid": GridConfig,
        "fiber": FiberSpec,
        "inscription": InscriptionParams,
        "solver": SolverConfig,
        "propagation": PropagationConfig,
        "calibration": CalibrationConfig,
        "sweeps": SweepConfig,
    }
    scalars = {"material", "wavelength", "output_dir", "workers", "json_logs", "verbosity"}
    unknown = sorted(set(data) - set(sections) - scalars)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")

    parsed = {name: _section(data, name, cls) for name, cls in sections.items()}
    return Config(
        material=str(data.get("material", CALIBRATE)),
        wavelength=float(data.get("wavelength", 800.0)),
        output_dir=str(data.get("output_dir", "out")),
        workers=int(data.get("workers", 4)),
        json_logs=bool(data.get("json_logs", False)),
        verbosity=int(data.get("verbosity", 0)),
        **parsed,
    )
