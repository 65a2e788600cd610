from pathlib import Path

from tapersim.core.logging import timed
from tapersim.experiments.base import Experiment


class WavelengthSweep(Experiment):
    """Regular and tapered facet modes per wavelength; area ratio is tapered over regular."""
    name = "sweep-wavelength"
    filename = "sweep_wavelength.csv"

    @timed
    def run(self) -> Path:
        sweeps = self.config.sweeps
        base = self.config.inscription
        regular = base.replace(reps=0)
        tapered = base.replace(reps=sweeps.wavelength_reps)
        jobs = [(params, wl) for wl in sweeps.wavelengths for params in (regular, tapered)]
        labels = [f"{wl:g} nm {'regular' if params.reps == 0 else 'tapered'}" for params, wl in jobs]
        results = self.map_points(lambda job: self.facet_point(*job), jobs, labels)

        rows = []
        for k, wl in enumerate(sweeps.wavelengths):
            reg, tap = results[2 * k], results[2 * k + 1]
            rows.append(self.sweep_row(reg, reg, "regular", wl))
            rows.append(self.sweep_row(tap, reg, "tapered", wl))
        return self.write_rows(rows)
