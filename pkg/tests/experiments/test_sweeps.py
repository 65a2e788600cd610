import dataclasses

import pytest

from tapersim.core.errors import ConfigError, CutoffError
from tapersim.experiments import (AdiabaticScan, PowerSweep, RepetitionSweep, RunContext, SweepRow,
                                  WavelengthSweep)
from tapersim.experiments.adiabatic import SCAN_HEADER, shortest_adiabatic
from tapersim.experiments.base import SWEEP_HEADER
from tapersim.inscription import MaterialModel
from tapersim.propagation import ScanEntry


def read_rows(path):
    header, *lines = path.read_text().splitlines()
    keys = header.split(",")
    return [dict(zip(keys, line.split(","))) for line in lines]


def test_power_sweep_single_ratio(small_config, context):
    report = {}
    path = PowerSweep(small_config, context, report).run()
    assert path.name == "sweep_power.csv"
    assert path.read_text().splitlines()[0] == ",".join(SWEEP_HEADER)
    rows = read_rows(path)
    assert [row["kind"] for row in rows] == ["regular", "tapered"]
    assert rows[0]["value"] == ""
    assert float(rows[0]["area_ratio"]) == pytest.approx(1.0)
    assert float(rows[1]["value"]) == pytest.approx(0.667)
    assert rows[1]["reps"] == "16"
    assert float(rows[1]["mfd_h_um"]) < float(rows[0]["mfd_h_um"])
    assert float(rows[1]["area_ratio"]) < 1.0
    assert rows[0]["transmission"] == "" and rows[0]["throughput"] == ""
    assert context.outputs["sweep-power"] == path
    assert report["sweep-power"]["failed"] == []


def test_power_sweep_is_deterministic(small_config, tmp_path):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        out.mkdir()
        context = RunContext(output_dir=out, model=MaterialModel())
        outputs.append(PowerSweep(small_config, context, {}).run().read_bytes())
    assert outputs[0] == outputs[1]


def test_wavelength_and_power_sweeps_agree(small_config, context):
    assert small_config.inscription.pa_over_p0 == pytest.approx(0.667)
    power = read_rows(PowerSweep(small_config, context, {}).run())
    wavelength = read_rows(WavelengthSweep(small_config, context, {}).run())
    assert [row["kind"] for row in wavelength] == ["regular", "tapered"]
    for key in ("mfd_h_um", "mfd_v_um", "area_ratio", "eta"):
        assert wavelength[0][key] == power[0][key]
        assert wavelength[1][key] == power[1][key]


def test_sweep_needs_model(small_config, tmp_path):
    with pytest.raises(ConfigError):
        PowerSweep(small_config, RunContext(output_dir=tmp_path), {}).run()


def test_map_points_reports_first_failure_in_order(small_config, context):
    report = {}
    sweep = PowerSweep(small_config, context, report)

    def solve(x):
        if x > 1:
            raise CutoffError(f"point {x} cut off")
        return x * 10

    assert sweep.map_points(solve, [0, 1], ["a", "b"]) == [0, 10]
    with pytest.raises(CutoffError, match="point 2"):
        sweep.map_points(solve, [0, 2, 3], ["a", "b", "c"])
    assert len(report["sweep-power"]["failed"]) == 2


def test_repetition_sweep(small_config, context):
    small_config.sweeps.reps = [4]
    small_config.inscription = small_config.inscription.replace(taper_length=0.5)
    small_config.propagation = dataclasses.replace(small_config.propagation, diagnostics=True)
    sweep = RepetitionSweep(small_config, context, {})
    assert sweep.reps_list() == [0, 4]
    rows = read_rows(sweep.run())
    assert [row["reps"] for row in rows] == ["0", "4"]
    assert rows[0]["kind"] == "regular"
    assert float(rows[0]["transmission"]) == pytest.approx(1.0, abs=1e-3)
    for row in rows:
        assert 0.0 <= float(row["transmission"]) <= 1.0
        assert 0.0 < float(row["throughput"]) <= 1.0
    # the regular mode reaches the facet unchanged, so it couples like the facet mode
    assert float(rows[0]["throughput"]) == pytest.approx(float(rows[0]["eta"]), abs=2e-3)
    assert (context.output_dir / "propagation_reps0.csv").exists()
    assert (context.output_dir / "propagation_reps4.csv").exists()


def test_shortest_adiabatic():
    entries = [ScanEntry(0.25, 0.9), ScanEntry(0.5, 0.995), ScanEntry(1.0, 0.999),
               ScanEntry(2.0, float("nan"), "cut off")]
    assert shortest_adiabatic(entries, 0.99) == 0.5
    assert shortest_adiabatic(entries, 0.9999) is None
    assert shortest_adiabatic([], 0.99) is None


def test_adiabatic_scan_experiment(small_config, context):
    small_config.sweeps.scan_lengths = [0.5, 0.5]
    small_config.sweeps.transmission_threshold = 1e-3
    path = AdiabaticScan(small_config, context, {}).run()
    lines = path.read_text().splitlines()
    assert lines[0] == SCAN_HEADER
    assert len(lines) == 2
    length, transmission, flagged, error = lines[1].split(",")
    assert float(length) == 0.5
    assert 0.0 < float(transmission) <= 1.0
    assert flagged == "1"
    assert error == ""


def test_sweep_row_rejects_unphysical_values():
    with pytest.raises(ValueError):
        SweepRow("sweep-power", "tapered", 0.75, 16, 0.75, 800.0, 5.0, 6.0, 0.5, 1.2)
    with pytest.raises(ValueError):
        SweepRow("sweep-power", "tapered", 0.75, 16, 0.75, 800.0, 0.0, 6.0, 0.5, 0.5)


def test_sweep_row_csv_line():
    row = SweepRow("sweep-reps", "tapered", 8, 8, 0.667, 800.0, 5.5, 7.25, 0.5, 0.75, 0.98, 0.735)
    assert row.csv_line() == ("sweep-reps,tapered,8,8,0.667,800,5.500000,7.250000,0.500000,0.750000,"
                              "0.980000,0.735000")
