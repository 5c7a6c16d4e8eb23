import itertools
import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from fockpath.elements import ModeUnitary, bs_matrix
from fockpath.evolution import (
    TransitionQuery,
    amplitude_oracle,
    apply,
    permanent,
    permanent_naive,
    permanent_ryser,
)
from fockpath.experiments import RyffConfig, build_ryff
from fockpath.fock import ModeRegistry, OccupationVector, PureState, superpose
from fockpath.utils import POLARIZATIONS, ConfigurationError, InvariantViolation, polarization_vector


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n_paths = int(rng.integers(1, 5))
    n_photons = int(rng.integers(2, 4))
    registry = ModeRegistry.build([f'p{i}' for i in range(n_paths)])
    unitary = ModeUnitary.from_matrix(registry, unitary_group.rvs(len(registry), random_state=seed))
    occupation = OccupationVector.from_indices(rng.integers(0, len(registry), n_photons).tolist())
    return registry, unitary, occupation


@pytest.mark.parametrize('seed', range(120))
def test_evolution_matches_oracle(seed):
    registry, unitary, occupation = _random_case(seed)
    evolved = apply(PureState(registry, {occupation: 1}), unitary)

    assert evolved.norm_squared == pytest.approx(1, abs=1e-9)
    for indices in itertools.combinations_with_replacement(range(len(registry)), occupation.n_total):
        output = OccupationVector.from_indices(indices)
        expected = amplitude_oracle(TransitionQuery(unitary, occupation, output))
        assert abs(evolved.amplitude(output) - expected) < 1e-10


@pytest.mark.parametrize('seed', range(5))
def test_superposed_input_is_linear(seed):
    registry, unitary, occupation = _random_case(seed)
    other = OccupationVector.from_indices([0] * occupation.n_total)
    if other == occupation:
        other = OccupationVector.from_indices([len(registry) - 1] * occupation.n_total)
    if other == occupation:
        pytest.skip('single-mode registry')

    s1 = PureState(registry, {occupation: 1})
    s2 = PureState(registry, {other: 1})
    mixed = superpose([s1, s2], [0.6, 0.8j])
    evolved = apply(mixed, unitary)
    e1 = apply(s1, unitary)
    e2 = apply(s2, unitary)

    for k, v in evolved.items():
        assert abs(v - (0.6 * e1.amplitude(k) + 0.8j * e2.amplitude(k))) < 1e-12


def _assert_same_terms(actual, expected, tol=1e-9):
    assert len(actual) == len(expected)
    for k, v in expected.items():
        assert abs(actual.amplitude(k) - v) < tol


@pytest.mark.parametrize('seed', range(40))
def test_inverse_restores_state(seed):
    registry, unitary, occupation = _random_case(seed)
    prepare = ModeUnitary.from_matrix(registry, unitary_group.rvs(len(registry), random_state=seed + 1000))
    state = apply(PureState(registry, {occupation: 1}), prepare)

    _assert_same_terms(apply(apply(state, unitary), unitary.dagger()), state)


@pytest.mark.parametrize('bs_convention', ['symmetric', 'real'])
@pytest.mark.parametrize('tags', ['identical', 'distinct'])
def test_ryff_circuit_inverse_restores_state(tags, bs_convention):
    state, circuit, _ = build_ryff(RyffConfig(a_angle=20, c_angle=65, tags=tags, bs_convention=bs_convention))
    unitary = circuit.compile()

    _assert_same_terms(apply(apply(state, unitary), unitary.dagger()), state)


@pytest.mark.parametrize('tags', ['identical', 'distinct'])
def test_ryff_evolution_matches_oracle(tags):
    state, circuit, _ = build_ryff(RyffConfig(a_angle=20, c_angle=65, tags=tags))
    unitary = circuit.compile()
    evolved = apply(state, unitary)

    total = 0.0
    for output, amp in evolved.items():
        expected = sum(c * amplitude_oracle(TransitionQuery(unitary, k, output)) for k, c in state.items())
        assert abs(amp - expected) < 1e-10
        total += abs(expected) ** 2
    assert total == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize('a, c', [(0, 45), (20, 65), (10, 40), (75, 170)])
def test_ryff_coincidence_branches(a, c):
    state, circuit, _ = build_ryff(RyffConfig(a_angle=a, c_angle=c))
    evolved = apply(state, circuit.compile())
    registry = evolved.registry

    # photon l amplitudes, keyed by what reached detectors 2 and 3
    branches = {}
    for occupation, amp in evolved.items():
        indices = occupation.indices()
        if sorted(registry[i].path for i in indices) != ['2', '3', 'l']:
            continue
        l_index = next(i for i in indices if registry[i].path == 'l')
        detected = OccupationVector.from_indices(i for i in indices if i != l_index)
        branches.setdefault(detected, np.zeros(2, dtype=complex))[POLARIZATIONS.index(registry[l_index].pol)] += amp

    along = polarization_vector(math.radians(a)).real
    across = polarization_vector(math.radians(a + 90)).real
    gamma = math.radians(c - a)
    along_weight = sum(abs(along @ v) ** 2 for v in branches.values())
    across_weight = sum(abs(across @ v) ** 2 for v in branches.values())

    assert math.sqrt(along_weight) == pytest.approx(abs(math.sin(gamma)) / (2 * math.sqrt(2)), abs=1e-10)
    assert math.sqrt(across_weight) == pytest.approx(abs(math.cos(gamma)) / (2 * math.sqrt(2)), abs=1e-10)
    assert along_weight + across_weight == pytest.approx(1 / 8, abs=1e-12)


@pytest.mark.parametrize('n', [0, 1, 2, 3, 4])
def test_permanent_implementations_agree(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        matrix = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert abs(permanent_naive(matrix) - permanent_ryser(matrix)) < 1e-10


def test_permanent_values():
    assert permanent(np.ones((3, 3))) == pytest.approx(6)
    assert permanent(np.eye(5)) == pytest.approx(1)
    assert permanent(np.zeros((0, 0))) == 1
    # two identical photons on a balanced beam splitter never leave through different ports
    assert abs(permanent(bs_matrix(0.5))) < 1e-15


def test_permanent_limits():
    with pytest.raises(ConfigurationError):
        permanent(np.ones((2, 3)))
    with pytest.raises(ConfigurationError):
        permanent(np.ones((11, 11)))
    with pytest.raises(ConfigurationError):
        permanent_naive(np.ones((5, 5)))


def test_oracle_bosonic_normalization():
    registry = ModeRegistry.build(['a', 'b'])
    matrix = np.eye(4, dtype=complex)
    matrix[np.ix_([0, 2], [0, 2])] = bs_matrix(0.5)
    unitary = ModeUnitary.from_matrix(registry, matrix)

    both = OccupationVector(((0, 1), (2, 1)))
    bunched = OccupationVector(((0, 2),))
    amp = amplitude_oracle(TransitionQuery(unitary, both, bunched))

    assert abs(amp) == pytest.approx(1 / math.sqrt(2))
    assert amplitude_oracle(TransitionQuery(unitary, OccupationVector(), OccupationVector())) == 1

    with pytest.raises(ConfigurationError):
        TransitionQuery(unitary, both, OccupationVector(((0, 1),)))


def test_registry_mismatch_and_norm_drift():
    registry = ModeRegistry.build(['a'])
    state = PureState(registry, {OccupationVector(((0, 1),)): 1})

    with pytest.raises(ConfigurationError):
        apply(state, ModeUnitary.identity(ModeRegistry.build(['b'])))

    with pytest.raises(InvariantViolation, match='Norm drifted'):
        apply(state, ModeUnitary(registry, np.diag([2.0, 1.0])))
