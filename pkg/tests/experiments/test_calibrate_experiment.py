from unittest.mock import patch

import pytest

from tapersim.calibration import CalibrationResult
from tapersim.core.errors import CalibrationError
from tapersim.experiments import CalibrateExperiment, RunContext
from tapersim.experiments.calibrate import MODEL_FILENAME
from tapersim.inscription import MaterialModel, load_material, save_material

GOALS = {"eta_regular": 0.52, "eta_taper": 0.77, "mfd_ratio": 2.0}


def test_calibrate_has_no_prerequisites(small_config, context):
    assert CalibrateExperiment(small_config, context, {}).prerequisites == []


def test_targets_follow_config(small_config, context):
    small_config.calibration.reps = 4
    targets = CalibrateExperiment(small_config, context, {}).targets()
    assert targets.goals() == GOALS
    assert targets.params.reps == 4
    assert targets.params.p0 == small_config.inscription.p0


def test_supplied_model_is_echoed_not_refit(small_config, tmp_path):
    model = MaterialModel(dn_max=2.5e-3)
    save_material(model, tmp_path / "supplied.yaml")
    small_config.material = str(tmp_path / "supplied.yaml")
    context = RunContext(output_dir=tmp_path)
    report = {}
    with patch("tapersim.experiments.calibrate.simulate_targets", return_value=dict(GOALS)) as simulate, \
            patch("tapersim.experiments.calibrate.calibrate_model") as fit:
        path = CalibrateExperiment(small_config, context, report).run()
    simulate.assert_called_once()
    fit.assert_not_called()
    assert context.model == model
    assert not (tmp_path / MODEL_FILENAME).exists()
    lines = path.read_text().splitlines()
    assert lines[0] == "target,goal,achieved,rel_error"
    assert all(line.endswith(",0.000000") for line in lines[1:])
    assert report["calibrate"]["written"] == ["calibration.csv"]


def test_fitted_model_is_saved(small_config, tmp_path):
    fitted = MaterialModel(dn_max=3.5e-3)
    result = CalibrationResult(model=fitted, residual=0.0, achieved=dict(GOALS), goals=dict(GOALS),
                               converged=True, evaluations=42)
    context = RunContext(output_dir=tmp_path)
    with patch("tapersim.experiments.calibrate.calibrate_model", return_value=result):
        CalibrateExperiment(small_config, context, {}).run()
    assert context.model == fitted
    assert load_material(tmp_path / MODEL_FILENAME) == fitted
    assert context.outputs["calibrate"] == tmp_path / "calibration.csv"


def test_failed_fit_keeps_best_model(small_config, tmp_path):
    best = MaterialModel(wx0=3.0)
    achieved = {"eta_regular": 0.4, "eta_taper": 0.6, "mfd_ratio": 2.5}
    result = CalibrationResult(model=best, residual=0.2, achieved=achieved, goals=dict(GOALS),
                               converged=False, evaluations=300)
    context = RunContext(output_dir=tmp_path)
    report = {}
    error = CalibrationError("calibration residual 0.2 above tolerance 0.001", result=result)
    with patch("tapersim.experiments.calibrate.calibrate_model", side_effect=error):
        with pytest.raises(CalibrationError):
            CalibrateExperiment(small_config, context, report).run()
    assert context.model is None
    assert load_material(tmp_path / MODEL_FILENAME) == best
    assert (tmp_path / "calibration.csv").exists()
    assert report["calibrate"]["written"] == [MODEL_FILENAME]
    assert report["calibrate"]["failed"][0].startswith("calibration.csv (calibration residual")
