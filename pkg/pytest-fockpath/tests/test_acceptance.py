import math

import numpy as np
import pytest

from fockpath.evolution import apply
from fockpath.experiments import RyffConfig, build_ryff, predicted_nu1, run_ryff, sweep_c, sweep_grid
from fockpath.measurement import fidelity


def _half_open_grid(step: float):
    return [v for v in sweep_grid(0, 180, step) if v < 180 - 1e-9]


def test_steering_law_on_grid(angle_step):
    grid = _half_open_grid(angle_step)
    worst_fidelity = 1.0
    worst_angle = 0.0

    for a in grid:
        for row in sweep_c(RyffConfig(a_angle=a), grid):
            gamma = row.c_deg - a
            expected = math.radians((a + 90 - gamma) % 180)
            delta = abs(math.radians(row.nu1_angle_deg) - expected)
            worst_angle = max(worst_angle, min(delta, math.pi - delta))
            worst_fidelity = min(worst_fidelity, row.fidelity_eq7)
            assert row.p_coinc == pytest.approx(0.125, abs=1e-12)

    assert worst_fidelity >= 1 - 1e-9
    assert worst_angle < 1e-6


def test_distinct_tags_on_grid(angle_step):
    grid = _half_open_grid(angle_step)

    for a in grid[:: max(1, len(grid) // 12)]:
        for row in sweep_c(RyffConfig(a_angle=a, tags='distinct'), grid):
            gamma = math.radians(row.c_deg - a)
            expected = math.sin(gamma) ** 4 + math.cos(gamma) ** 4
            assert row.purity == pytest.approx(expected, abs=1e-9)
            assert row.fidelity_eq7 == pytest.approx(expected, abs=1e-9)
            assert row.p_coinc == pytest.approx(0.125, abs=1e-12)


@pytest.mark.parametrize('a', [0, 17, 90, 133])
def test_distinct_tags_at_45_degrees_is_maximally_mixed(a):
    report = run_ryff(RyffConfig(a_angle=a, c_angle=a + 45, tags='distinct'))

    assert np.max(np.abs(report.conditional - np.eye(2) / 2)) < 1e-9


@pytest.mark.parametrize('bs_convention', ['symmetric', 'real'])
@pytest.mark.parametrize('tags', ['identical', 'distinct'])
def test_norm_is_preserved_element_by_element(bs_convention, tags):
    config = RyffConfig(a_angle=12, c_angle=81, bs_convention=bs_convention, tags=tags, analyze_nu1=True)
    state, circuit, _ = build_ryff(config)

    for element in circuit.elements:
        state = apply(state, element.unitary(circuit.registry))
        assert abs(state.norm_squared - 1) < 1e-9


def test_ryff_config_fixture_agrees_with_prediction(ryff_config, ryff_report):
    target = predicted_nu1(ryff_config.a_angle, ryff_config.c_angle)

    assert fidelity(ryff_report.conditional, target) == pytest.approx(ryff_report.fidelity_eq7, abs=1e-12)
