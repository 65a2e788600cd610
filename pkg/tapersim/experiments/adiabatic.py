import logging
from pathlib import Path
from typing import Optional, Sequence

from tapersim.core.logging import timed
from tapersim.experiments.base import Experiment
from tapersim.propagation import ScanEntry, adiabatic_scan

SCAN_HEADER = "length_mm,transmission,shortest_adiabatic,error"


def shortest_adiabatic(entries: Sequence[ScanEntry], threshold: float) -> Optional[float]:
    """Shortest taper length whose transmission reaches the threshold, or None."""
    passing = [e.length for e in entries if e.error is None and e.transmission >= threshold]
    return min(passing) if passing else None


class AdiabaticScan(Experiment):
    """Transmission versus taper length; flags the shortest length that is still adiabatic."""
    name = "adiabatic-scan"
    filename = "adiabatic_scan.csv"

    @timed
    def run(self) -> Path:
        sweeps = self.config.sweeps
        lengths = sorted(set(sweeps.scan_lengths))
        params = self.config.inscription.replace(reps=sweeps.scan_reps)
        entries = adiabatic_scan(params, self.model, lengths, self.grid, self.config.wavelength,
                                 self.config.propagation, self.config.solver, self.config.workers)

        flagged = shortest_adiabatic(entries, sweeps.transmission_threshold)
        if flagged is None:
            logging.warning(f"[{self.name}] no length reaches transmission "
                            f"{sweeps.transmission_threshold:g}", extra={"experiment": self.name})
        lines = []
        for entry in entries:
            if entry.error is not None:
                self._record_result(f"{entry.length:g} mm", False, entry.error)
                transmission = ""
            else:
                transmission = f"{entry.transmission:.6f}"
            lines.append(f"{entry.length:.6g},{transmission},{int(entry.length == flagged)},"
                         f"{(entry.error or '').replace(',', ';')}")
        return self.write_lines(SCAN_HEADER, lines)
