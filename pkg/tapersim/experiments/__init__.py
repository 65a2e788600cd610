from tapersim.experiments.adiabatic import AdiabaticScan
from tapersim.experiments.base import Experiment, RunContext, SweepRow
from tapersim.experiments.calibrate import CalibrateExperiment
from tapersim.experiments.power import PowerSweep
from tapersim.experiments.repetitions import RepetitionSweep
from tapersim.experiments.wavelength import WavelengthSweep

EXPERIMENTS = {cls.name: cls for cls in (CalibrateExperiment, PowerSweep, WavelengthSweep,
                                         RepetitionSweep, AdiabaticScan)}

__all__ = ["AdiabaticScan", "CalibrateExperiment", "EXPERIMENTS", "Experiment", "PowerSweep",
           "RepetitionSweep", "RunContext", "SweepRow", "WavelengthSweep"]
