from unittest.mock import patch

import pytest

from tapersim.cli import EXIT_OK, EXIT_PHYSICS, EXIT_USAGE, main, parse_args
from tapersim.core.errors import ConfigError, ConvergenceError


def test_parse_args_defaults():
    args = parse_args(["sweep-power"])
    assert args.command == "sweep-power"
    assert args.config is None
    assert args.verbose == 0
    assert args.workers is None


def test_parse_args_rejects_unknown_command():
    with pytest.raises(SystemExit) as excinfo:
        parse_args(["sweep-temperature"])
    assert excinfo.value.code == 2


def test_missing_config_is_usage_error(tmp_path):
    assert main(["sweep-power", "--config", str(tmp_path / "absent.yaml")]) == EXIT_USAGE


def test_success_applies_overrides(tmp_path):
    config_path = tmp_path / "config.yaml"
    config_path.write_text("workers: 2\noutput_dir: elsewhere\n")
    with patch("tapersim.cli.ExperimentRunner") as runner_cls:
        code = main(["run-all", "-c", str(config_path), "-o", str(tmp_path / "out"), "--workers", "3", "-v"])
    assert code == EXIT_OK
    config = runner_cls.call_args.args[0]
    assert config.output_dir == str(tmp_path / "out")
    assert config.workers == 3
    assert config.verbosity == 1
    runner_cls.return_value.run.assert_called_once_with(
        ["calibrate", "sweep-power", "sweep-wavelength", "sweep-reps", "adiabatic-scan"])
    runner_cls.return_value.print_report.assert_called_once()


@pytest.mark.parametrize("error, code", [
    (ConfigError("sweeps.scan_lengths must be a nonempty list"), EXIT_USAGE),
    (ValueError("taper resolved by fewer than 100 steps"), EXIT_USAGE),
    (FileNotFoundError("material.yaml"), EXIT_USAGE),
    (ConvergenceError("mode solver did not converge", residual=1e-3), EXIT_PHYSICS),
])
def test_failures_map_to_exit_codes(error, code):
    with patch("tapersim.cli.ExperimentRunner") as runner_cls:
        runner_cls.return_value.run.side_effect = error
        assert main(["sweep-reps"]) == code
    runner_cls.return_value.print_report.assert_called_once()
