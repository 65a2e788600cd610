from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TypeVar
import logging

from tapersim.core.config import CALIBRATE, Config
from tapersim.core.errors import ConfigError, PhysicsError
from tapersim.coupling import CouplingReport, coupling_report
from tapersim.field import Grid2D, check_extent
from tapersim.inscription import InscriptionParams, MaterialModel, TaperIndexMap
from tapersim.modes import GuidedMode, solve_fundamental

SWEEP_HEADER = ("sweep", "kind", "value", "reps", "pa_over_p0", "wavelength_nm", "mfd_h_um", "mfd_v_um",
                "area_ratio", "eta", "transmission", "throughput")

P = TypeVar("P")
R = TypeVar("R")


def _fmt(value: Optional[float], spec: str = ".6f") -> str:
    return "" if value is None else format(value, spec)


@dataclass(frozen=True)
class SweepRow:
    """One line of a sweep table; transmission and throughput only where a propagation ran."""
    sweep: str
    kind: str
    value: Optional[float]
    reps: int
    pa_over_p0: float
    wavelength: float
    mfd_h: float
    mfd_v: float
    area_ratio: float
    eta: float
    transmission: Optional[float] = None
    throughput: Optional[float] = None

    def __post_init__(self):
        if not (self.mfd_h > 0 and self.mfd_v > 0 and self.area_ratio > 0):
            raise ValueError(f"{self.sweep}: MFDs and area ratio must be positive")
        for name in ("eta", "transmission", "throughput"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{self.sweep}: {name} = {value} outside [0, 1]")

    def csv_line(self) -> str:
        return ",".join([
            self.sweep, self.kind, _fmt(self.value, ".6g"), str(self.reps), f"{self.pa_over_p0:.6g}",
            f"{self.wavelength:.6g}", f"{self.mfd_h:.6f}", f"{self.mfd_v:.6f}", f"{self.area_ratio:.6f}",
            f"{self.eta:.6f}", _fmt(self.transmission), _fmt(self.throughput),
        ])


@dataclass(frozen=True, eq=False)
class FacetPoint:
    params: InscriptionParams
    mode: GuidedMode
    report: CouplingReport


@dataclass
class RunContext:
    """State shared by the experiments of one run."""
    output_dir: Path
    model: Optional[MaterialModel] = None
    outputs: Dict[str, Path] = field(default_factory=dict)


class Experiment(ABC):
    name: str = ""
    filename: str = ""

    def __init__(self, config: Config, context: RunContext, report: Dict[str, Dict[str, List[str]]]):
        self.config = config
        self.context = context
        self.report = report

    def _record_result(self, item: str, success: bool, message: str = ""):
        if self.name not in self.report:
            self.report[self.name] = {"written": [], "failed": []}
        if success:
            self.report[self.name]["written"].append(item)
        else:
            msg = f"{item} ({message})" if message else item
            self.report[self.name]["failed"].append(msg)

    @property
    def prerequisites(self) -> List[str]:
        return [CALIBRATE] if self.config.material == CALIBRATE else []

    @property
    def model(self) -> MaterialModel:
        if self.context.model is None:
            raise ConfigError(f"{self.name} needs a material model; set 'material' or run calibrate first")
        return self.context.model

    @cached_property
    def grid(self) -> Grid2D:
        return self.config.grid.build()

    @property
    def output_path(self) -> Path:
        return self.context.output_dir / self.filename

    def facet_point(self, params: InscriptionParams, wavelength: float) -> FacetPoint:
        """Fundamental mode and coupling figures at the facet of the given taper."""
        taper = TaperIndexMap(params, self.model, self.grid)
        mode = solve_fundamental(taper.facet, wavelength, self.config.solver)
        return self.point_from_mode(params, mode)

    def point_from_mode(self, params: InscriptionParams, mode: GuidedMode) -> FacetPoint:
        report = coupling_report(mode.field, self.config.fiber)
        check_extent(self.grid, report.mfd.mfd_h, report.mfd.mfd_v)
        return FacetPoint(params=params, mode=mode, report=report)

    def sweep_row(self, point: FacetPoint, baseline: FacetPoint, kind: str, value: Optional[float],
                  transmission: Optional[float] = None, throughput: Optional[float] = None) -> SweepRow:
        report = point.report
        return SweepRow(sweep=self.name, kind=kind, value=value, reps=point.params.reps,
                        pa_over_p0=point.params.pa_over_p0, wavelength=report.wavelength,
                        mfd_h=report.mfd.mfd_h, mfd_v=report.mfd.mfd_v,
                        area_ratio=report.mfd.area / baseline.report.mfd.area, eta=report.eta,
                        transmission=transmission, throughput=throughput)

    def map_points(self, func: Callable[[P], R], points: Sequence[P], labels: Sequence[str]) -> List[R]:
        """Run func over the points on the worker pool; results keep the input order.

        A failed point is logged and recorded; the first failure in sweep order
        is re-raised once every point has finished.
        """
        results: List[Optional[R]] = [None] * len(points)
        errors: Dict[int, Exception] = {}
        with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
            futures = {executor.submit(func, point): idx for idx, point in enumerate(points)}
            for future in as_completed(futures):
                idx = futures[future]
                try:
                    results[idx] = future.result()
                    logging.debug(f"[{self.name}] {labels[idx]} done",
                                  extra={"experiment": self.name, "sweep_value": labels[idx]})
                except (PhysicsError, ValueError) as e:
                    logging.error(f"[{self.name}] {labels[idx]} failed: {e}",
                                  extra={"experiment": self.name, "sweep_value": labels[idx]})
                    self._record_result(labels[idx], False, str(e))
                    errors[idx] = e
        if errors:
            raise errors[min(errors)]
        return results

    def write_lines(self, header: str, lines: Sequence[str]) -> Path:
        path = self.output_path
        path.write_text("\n".join([header, *lines]) + "\n", encoding="ascii")
        self.context.outputs[self.name] = path
        self._record_result(f"{path.name}: {len(lines)} rows", True)
        logging.info(f"[{self.name}] wrote {len(lines)} rows to {path}", extra={"experiment": self.name})
        return path

    def write_rows(self, rows: Sequence[SweepRow]) -> Path:
        return self.write_lines(",".join(SWEEP_HEADER), [row.csv_line() for row in rows])

    @abstractmethod
    def run(self) -> Path:
        pass
