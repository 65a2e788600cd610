import logging
from pathlib import Path
from typing import List

from tapersim.calibration import (CalibrationResult, CalibrationTargets, calibrate_model, residual_of,
                                  simulate_targets, write_report)
from tapersim.core.errors import CalibrationError
from tapersim.core.logging import timed
from tapersim.experiments.base import Experiment
from tapersim.inscription import load_material, save_material

MODEL_FILENAME = "material.yaml"


class CalibrateExperiment(Experiment):
    """Fit the material model, or echo the achieved targets of a supplied one."""
    name = "calibrate"
    filename = "calibration.csv"

    @property
    def prerequisites(self) -> List[str]:
        return []

    def targets(self) -> CalibrationTargets:
        c = self.config.calibration
        params = self.config.inscription.replace(reps=c.reps, pa_over_p0=c.pa_over_p0)
        return CalibrationTargets(eta_regular=c.eta_regular, eta_taper=c.eta_taper, mfd_ratio=c.mfd_ratio,
                                  wavelength=c.wavelength, params=params)

    def _save(self, result: CalibrationResult) -> Path:
        model_path = self.context.output_dir / MODEL_FILENAME
        save_material(result.model, model_path)
        self._record_result(model_path.name, True)
        return model_path

    def _echo(self) -> CalibrationResult:
        targets = self.targets()
        model = self.context.model or load_material(self.config.material_path())
        achieved = simulate_targets(model, targets, self.grid, self.config.fiber, self.config.solver,
                                    self.config.workers)
        residual = residual_of(achieved, targets.goals())
        logging.info(f"[{self.name}] supplied model reaches residual {residual:.4g}; not refitting",
                     extra={"experiment": self.name})
        return CalibrationResult(model=model, residual=residual, achieved=achieved, goals=targets.goals(),
                                 converged=residual <= self.config.calibration.residual_tolerance,
                                 evaluations=1)

    @timed
    def run(self) -> Path:
        if self.config.material_path() is not None:
            result = self._echo()
            self.context.model = result.model
        else:
            c = self.config.calibration
            try:
                result = calibrate_model(self.targets(), self.grid, self.config.fiber, self.config.solver,
                                         max_evaluations=c.max_evaluations, restarts=c.restarts,
                                         residual_tolerance=c.residual_tolerance, workers=self.config.workers)
            except CalibrationError as e:
                # keep the best-so-far model and its report for inspection
                self._save(e.result)
                write_report(e.result, self.output_path)
                self._record_result(self.filename, False, str(e))
                raise
            self._save(result)
            self.context.model = result.model

        write_report(result, self.output_path)
        self.context.outputs[self.name] = self.output_path
        self._record_result(self.filename, True)
        for target, goal, achieved, rel_error in result.rows():
            logging.info(f"[{self.name}] {target}: goal {goal:.4g}, achieved {achieved:.4g} "
                         f"({rel_error:+.2%})", extra={"experiment": self.name})
        return self.output_path
