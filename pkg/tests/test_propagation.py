import numpy as np
import pytest

from tapersim.core.errors import GridMismatchError
from tapersim.coupling import mfd_1e2
from tapersim.field import gaussian_field, make_grid, power
from tapersim.inscription import InscriptionParams, TaperIndexMap
from tapersim.modes import solve_fundamental
from tapersim.propagation import (BeamPropagator, PropagationConfig, ScanEntry, absorber_mask, adiabatic_scan,
                                  modal_transmission, propagate, step_count)

N_REF = 1.45
WAVELENGTH = 800.0


def test_free_space_gaussian_follows_beam_expansion():
    grid = make_grid(120.0, 120.0, 256, 256)
    w0 = 5.0
    field = gaussian_field(grid, w0, w0, wavelength=WAVELENGTH)
    rayleigh = np.pi * w0 ** 2 * N_REF / (WAVELENGTH * 1e-3)
    distance = 2.0 * rayleigh
    steps = 100
    propagator = BeamPropagator(grid, WAVELENGTH, N_REF, distance / steps)
    uniform = np.full(grid.shape, N_REF)
    out = propagator.run(field, lambda z: uniform, steps)
    expected = w0 * np.sqrt(1.0 + (distance * WAVELENGTH * 1e-3 / (np.pi * w0 ** 2 * N_REF)) ** 2)
    assert mfd_1e2(out.intensity(), "H") / 2 == pytest.approx(expected, rel=0.01)
    assert mfd_1e2(out.intensity(), "V") / 2 == pytest.approx(expected, rel=0.01)


def test_free_space_conserves_power():
    grid = make_grid(60.0, 60.0, 128, 128)
    field = gaussian_field(grid, 3.0, 4.0, center=(2.0, -1.0))
    propagator = BeamPropagator(grid, WAVELENGTH, N_REF, 5.0)
    uniform = np.full(grid.shape, N_REF)
    out = propagator.run(field, lambda z: uniform, 200)
    assert power(out) == pytest.approx(power(field), rel=1e-6)


def test_absorber_mask_confined_to_margin():
    grid = make_grid(40.0, 40.0, 80, 80)
    mask = absorber_mask(grid, 5.0, 0.05, 2.0)
    assert mask[40, 40] == 1.0
    assert mask[0, 0] < 1.0
    assert np.all((mask > 0) & (mask <= 1))
    assert np.all(absorber_mask(grid, 0.0, 0.05, 2.0) == 1.0)
    with pytest.raises(ValueError):
        absorber_mask(grid, 25.0, 0.05, 2.0)


def test_absorber_removes_power_at_edge():
    grid = make_grid(40.0, 40.0, 80, 80)
    field = gaussian_field(grid, 2.0, 2.0, center=(18.0, 0.0))
    propagator = BeamPropagator(grid, WAVELENGTH, N_REF, 5.0, absorber_width=6.0, absorber_strength=0.05)
    uniform = np.full(grid.shape, N_REF)
    assert power(propagator.run(field, lambda z: uniform, 20)) < 0.9 * power(field)


def test_eigenmode_of_straight_guide_is_transmitted(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=0), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    result = propagate(taper, mode)
    assert result.steps == 600
    assert result.transmission >= 0.999
    assert result.transmission + result.radiated <= 1.0 + 1e-6


def test_taper_transmission_in_unit_interval(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=4, taper_length=1.0), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    result = propagate(taper, mode)
    assert 0.0 <= result.transmission <= 1.0
    assert result.facet_mode.n_eff > mode.n_eff


def test_propagate_rejects_coarse_step(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=8, taper_length=0.3), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    with pytest.raises(ValueError):
        propagate(taper, mode, PropagationConfig(dz=5.0))


def test_propagate_rejects_foreign_grid(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=0), model, grid)
    other = make_grid(50.0, 50.0, 100, 100)
    mode = solve_fundamental(TaperIndexMap(InscriptionParams(reps=0), model, other).regular, WAVELENGTH)
    with pytest.raises(GridMismatchError):
        propagate(taper, mode)


def test_propagate_writes_diagnostics(tmp_path, grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=2, taper_length=0.5), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    path = tmp_path / "diagnostics.csv"
    propagate(taper, mode, PropagationConfig(dz=5.0, diagnostics_every=10), diagnostics=path)
    lines = path.read_text().splitlines()
    assert lines[0] == "z_mm,power,mfd_h_um,mfd_v_um"
    assert len(lines) == 1 + 10
    assert float(lines[-1].split(",")[0]) == pytest.approx(0.5)


def test_modal_transmission_of_mode_itself(grid):
    field = gaussian_field(grid, 3.0, 3.0)
    assert modal_transmission(field, field, power(field)) == pytest.approx(1.0, abs=1e-12)


def test_step_count():
    assert step_count(3000.0, 5.0) == 600
    assert step_count(3001.0, 5.0) == 601
    assert step_count(1.0, 5.0) == 1


def test_adiabatic_scan_short_taper_loses_more(grid, model):
    entries = adiabatic_scan(InscriptionParams(reps=8), model, [0.05, 3.0], grid, WAVELENGTH, workers=2)
    assert [e.length for e in entries] == [0.05, 3.0]
    assert all(e.error is None for e in entries)
    assert entries[0].transmission < entries[1].transmission


def test_adiabatic_scan_matches_single_propagation(grid, model):
    params = InscriptionParams(reps=8)
    entries = adiabatic_scan(params, model, [3.0], grid, WAVELENGTH)
    taper = TaperIndexMap(params, model, grid)
    direct = propagate(taper, solve_fundamental(taper.regular, WAVELENGTH))
    assert entries == [ScanEntry(3.0, direct.transmission)]


def test_adiabatic_scan_rejects_empty_lengths(grid, model):
    with pytest.raises(ValueError):
        adiabatic_scan(InscriptionParams(), model, [], grid)
    with pytest.raises(ValueError):
        adiabatic_scan(InscriptionParams(), model, [1.0, -0.5], grid)


def test_backward_propagation_is_reciprocal(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=4, taper_length=1.0), model, grid)
    regular = solve_fundamental(taper.regular, WAVELENGTH)
    facet = solve_fundamental(taper.facet, WAVELENGTH)
    forward = propagate(taper, regular).transmission

    config = PropagationConfig()
    propagator = BeamPropagator(grid, WAVELENGTH, model.n_clad, 5.0, config.absorber_width,
                                config.absorber_strength)

    def reversed_index(z_um):
        return taper.profile_at(max(0.0, taper.z_extent - z_um * 1e-3)).index()

    back = propagator.run(facet.field, reversed_index, 200)
    backward = modal_transmission(back, regular.field, power(facet.field))
    assert backward == pytest.approx(forward, rel=0.01)


def test_transmission_converges_in_step_size(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=8, taper_length=1.0), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    coarse = propagate(taper, mode, PropagationConfig(dz=5.0))
    fine = propagate(taper, mode, PropagationConfig(dz=2.5))
    assert fine.steps == 2 * coarse.steps
    assert abs(fine.transmission - coarse.transmission) < 1e-4


def test_absorber_leaves_guided_power_alone(grid, model):
    taper = TaperIndexMap(InscriptionParams(reps=8, taper_length=1.0), model, grid)
    mode = solve_fundamental(taper.regular, WAVELENGTH)
    absorbed = propagate(taper, mode, PropagationConfig())
    open_edges = propagate(taper, mode, PropagationConfig(absorber_width=0.0))
    assert abs(absorbed.transmission - open_edges.transmission) < 1e-3
