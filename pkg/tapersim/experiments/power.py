from pathlib import Path

from tapersim.core.logging import timed
from tapersim.experiments.base import Experiment


class PowerSweep(Experiment):
    """Facet MFDs versus the upper ramp limit Pa/P0 at a fixed number of reruns."""
    name = "sweep-power"
    filename = "sweep_power.csv"

    @timed
    def run(self) -> Path:
        sweeps = self.config.sweeps
        wavelength = self.config.wavelength
        base = self.config.inscription
        points = [base.replace(reps=0)] + [base.replace(reps=sweeps.power_reps, pa_over_p0=ratio)
                                           for ratio in sweeps.power_ratios]
        labels = ["baseline"] + [f"Pa/P0={ratio:g}" for ratio in sweeps.power_ratios]
        results = self.map_points(lambda params: self.facet_point(params, wavelength), points, labels)

        baseline = results[0]
        rows = [self.sweep_row(baseline, baseline, "regular", None)]
        rows += [self.sweep_row(point, baseline, "tapered", ratio)
                 for point, ratio in zip(results[1:], sweeps.power_ratios)]
        return self.write_rows(rows)
