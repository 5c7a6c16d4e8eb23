import math

import numpy as np
import pytest

from fockpath.elements import BeamSplitter
from fockpath.evolution import apply
from fockpath.fock import (
    Mode,
    ModeRegistry,
    OccupationVector,
    PureState,
    epr_pair_state,
    expand_creation_product,
    inner_product,
    reduced_density_matrix,
    relabel_tags,
    single_photon_state,
    superpose,
    tensor,
    vacuum,
)
from fockpath.utils import ConfigurationError, InvariantViolation, SpecError, reduce_angle


@pytest.fixture
def registry():
    return ModeRegistry.build(['l', 'm', 'q'])


def test_registry_order():
    registry = ModeRegistry.build(['l', 'm'], tags=(0, 1))

    assert [str(m) for m in registry] == ['l:H', 'l:V', 'l:H#1', 'l:V#1', 'm:H', 'm:V', 'm:H#1', 'm:V#1']
    assert registry.paths == ('l', 'm')
    assert registry.tags == (0, 1)
    assert registry.index('m', 'V', 1) == 7


def test_registry_errors(registry):
    with pytest.raises(ConfigurationError):
        registry.index('x', 'H')

    with pytest.raises(ConfigurationError):
        ModeRegistry([Mode('l', 'H'), Mode('l', 'H')])

    with pytest.raises(ConfigurationError):
        Mode('l', 'D')

    with pytest.raises(ConfigurationError, match='Unknown path'):
        registry.require_paths('l', 'zz')


def test_occupation_vector():
    occ = OccupationVector.from_indices([5, 3, 3])

    assert occ.counts == ((3, 2), (5, 1))
    assert occ.n_total == 3
    assert occ.indices() == (3, 3, 5)
    assert occ.factorial_product() == 2
    assert occ.as_dense(6) == [0, 0, 0, 2, 0, 1]
    assert OccupationVector.from_dense([0, 0, 0, 2, 0, 1]) == occ

    with pytest.raises(ConfigurationError):
        OccupationVector(((3, 1), (1, 1)))


def test_single_photon(registry):
    state = single_photon_state(registry, 'l', 0.0)
    assert dict(state.terms) == {OccupationVector(((0, 1),)): 1}

    diagonal = single_photon_state(registry, 'q', math.pi / 4)
    assert len(diagonal) == 2
    for amp in diagonal.terms.values():
        assert amp == pytest.approx(1 / math.sqrt(2))

    with pytest.raises(ConfigurationError):
        single_photon_state(registry, 'x', 0.0)
    with pytest.raises(ConfigurationError):
        single_photon_state(registry, 'l', 0.0, tag=1)


def test_bosonic_factor():
    res = expand_creation_product([{0: 1}, {0: 1}])

    assert res == {OccupationVector(((0, 2),)): pytest.approx(math.sqrt(2))}


def test_epr_pair_is_rotation_invariant(registry):
    s0 = epr_pair_state(registry, 'l', 'm', 0.0)
    s1 = epr_pair_state(registry, 'l', 'm', 0.7)

    assert len(s0) == 2
    assert abs(inner_product(s0, s1)) == pytest.approx(1, abs=1e-12)

    with pytest.raises(ConfigurationError):
        epr_pair_state(registry, 'l', 'l', 0.0)


def test_tensor(registry):
    state = tensor(epr_pair_state(registry, 'l', 'm', 0.0), single_photon_state(registry, 'q', math.pi / 4))

    assert state.n_total == 3
    assert len(state) == 4
    assert state.norm_squared == pytest.approx(1)

    with pytest.raises(ConfigurationError, match='overlap'):
        tensor(single_photon_state(registry, 'l', 0.0), single_photon_state(registry, 'l', 1.0))


def test_state_invariants(registry):
    one = OccupationVector(((0, 1),))
    two = OccupationVector(((0, 1), (2, 1)))

    with pytest.raises(InvariantViolation, match='Mixed photon numbers'):
        PureState(registry, {one: 0.6, two: 0.8})

    with pytest.raises(InvariantViolation, match='not normalized'):
        PureState(registry, {one: 0.5})

    pruned = PureState(registry, {one: 1.0, OccupationVector(((1, 1),)): 1e-16})
    assert len(pruned) == 1


def test_superpose_and_vacuum(registry):
    h = single_photon_state(registry, 'l', 0.0)
    v = single_photon_state(registry, 'l', math.pi / 2)

    diagonal = superpose([h, v], [1, 1])
    assert inner_product(diagonal, single_photon_state(registry, 'l', math.pi / 4)) == pytest.approx(1)

    with pytest.raises(ConfigurationError):
        superpose([h, h], [1, -1])

    assert vacuum(registry).n_total == 0


def test_relabel_tags():
    registry = ModeRegistry.build(['l'], tags=(0,))
    state = relabel_tags(single_photon_state(registry, 'l', 0.0), {0: 3})

    assert state.registry.tags == (3,)
    assert str(state.registry[0]) == 'l:H#3'


def test_reduced_density_matrix(registry):
    rho = reduced_density_matrix(epr_pair_state(registry, 'l', 'm', 0.0), ['l'])

    np.testing.assert_allclose(rho.polarization_qubit(), np.eye(2) / 2, atol=1e-12)
    assert rho.purity() == pytest.approx(0.5)

    pure = reduced_density_matrix(single_photon_state(registry, 'l', math.pi / 3), ['l'])
    assert pure.purity() == pytest.approx(1)


def test_reduced_density_matrix_without_photons(registry):
    rho = reduced_density_matrix(single_photon_state(registry, 'l', 0.0), ['q'])

    assert rho.zero_photon
    assert rho.matrix.tolist() == [[1]]
    with pytest.raises(ConfigurationError):
        rho.polarization_qubit()


def _mixed_sector_state(registry):
    pair = tensor(epr_pair_state(registry, 'l', 'm', math.radians(20)), single_photon_state(registry, 'q', 1.1))
    return apply(pair, BeamSplitter(('m', 'q'), ('m', 'q'), 0.3).unitary(registry))


@pytest.mark.parametrize(
    'keep',
    [['l'], ['m'], ['l', 'm'], ['l', 'q'], ['m', 'q'], ['l', 'm', 'q']],
)
def test_purity_bounds(registry, keep):
    for state in [
        epr_pair_state(registry, 'l', 'm', 0.4),
        tensor(epr_pair_state(registry, 'l', 'm', 0.0), single_photon_state(registry, 'q', 0.2)),
        _mixed_sector_state(registry),
    ]:
        rho = reduced_density_matrix(state, keep)
        assert 1 / rho.dim - 1e-12 <= rho.purity() <= 1 + 1e-9


def test_reduced_density_matrix_mixed_sectors(registry):
    rho = reduced_density_matrix(_mixed_sector_state(registry), ['l', 'm'])

    assert rho.dim > 2
    assert rho.purity() < 1 - 1e-3
    assert reduced_density_matrix(_mixed_sector_state(registry), ['l', 'm', 'q']).purity() == pytest.approx(1)


def test_reduced_density_matrix_rejects_swappable_tags():
    registry = ModeRegistry.build(['a', 'b', 'c', 'd'], tags=(0, 1))
    pair = tensor(single_photon_state(registry, 'a', 0.0, tag=0), single_photon_state(registry, 'b', 0.0, tag=1))
    out = apply(pair, BeamSplitter(('a', 'b'), ('c', 'd')).unitary(registry))

    with pytest.raises(ConfigurationError, match='interchangeable positions'):
        reduced_density_matrix(out, ['c', 'd'])

    one_side = reduced_density_matrix(out, ['c'])
    assert one_side.trace == pytest.approx(1)
    assert one_side.purity() < 1


def test_reduce_angle():
    assert reduce_angle(math.pi) == 0.0
    assert reduce_angle(-0.0) == 0.0
    assert reduce_angle(-math.pi / 4) == pytest.approx(3 * math.pi / 4)
    assert reduce_angle(2 * math.pi + 0.1) == pytest.approx(0.1)


def test_spec_error_text():
    assert str(SpecError('expected number', 'angles.a')) == 'angles.a: expected number'
    assert str(SpecError("Expecting ',' delimiter", line=3, column=7)) == "line 3, column 7: Expecting ',' delimiter"
