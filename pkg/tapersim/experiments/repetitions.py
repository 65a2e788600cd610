from pathlib import Path
from typing import List, Tuple

from tapersim.core.logging import timed
from tapersim.coupling import coupled_power
from tapersim.experiments.base import Experiment, FacetPoint
from tapersim.field import power
from tapersim.inscription import InscriptionParams, TaperIndexMap
from tapersim.propagation import propagate


class RepetitionSweep(Experiment):
    """Coupling efficiency and modal transmission versus the number of reruns.

    Every point propagates the regular waveguide mode through its taper; the
    facet mode found there also gives the row's MFDs and eta. Throughput is the
    share of the input power that the propagated field launches into the fiber.
    """
    name = "sweep-reps"
    filename = "sweep_reps.csv"

    def reps_list(self) -> List[int]:
        reps = sorted({int(n) for n in self.config.sweeps.reps})
        return reps if reps[0] == 0 else [0] + reps

    def diagnostics_path(self, reps: int) -> Path:
        return self.context.output_dir / f"propagation_reps{reps}.csv"

    def _propagate(self, params: InscriptionParams, input_mode) -> Tuple[FacetPoint, float, float]:
        propagation = self.config.propagation
        taper = TaperIndexMap(params, self.model, self.grid)
        diagnostics = self.diagnostics_path(params.reps) if propagation.diagnostics else None
        result = propagate(taper, input_mode, propagation, self.config.solver, diagnostics)
        point = self.point_from_mode(params, result.facet_mode)
        coupled = coupled_power(result.output, self.config.fiber, point.report.mfd.centroid)
        return point, result.transmission, min(coupled / power(input_mode.field), 1.0)

    @timed
    def run(self) -> Path:
        wavelength = self.config.wavelength
        base = self.config.inscription
        regular = self.facet_point(base.replace(reps=0), wavelength)

        reps = self.reps_list()
        points = [base.replace(reps=n) for n in reps]
        results = self.map_points(lambda params: self._propagate(params, regular.mode), points,
                                  [f"N={n}" for n in reps])

        baseline = results[0][0]
        rows = [self.sweep_row(point, baseline, "regular" if n == 0 else "tapered", n, transmission, throughput)
                for (point, transmission, throughput), n in zip(results, reps)]
        return self.write_rows(rows)
