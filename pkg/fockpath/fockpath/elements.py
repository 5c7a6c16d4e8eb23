"""
Optical elements compiled into unitaries on a mode registry, and circuits built from them.

Every element acts identically on each tag block; beam splitters also act identically on each polarization.
"""

import functools
import logging
import math
import typing as t
from dataclasses import dataclass, field

import numpy as np

from .fock import ModeRegistry
from .utils import (
    BS_CONVENTIONS,
    POLARIZATIONS,
    PRUNE_THRESHOLD,
    SYMMETRIC,
    ConfigurationError,
    InvariantViolation,
    finite_float,
    is_unitary,
    polarization_vector,
    rad2deg,
    rotation_matrix,
)


class ModeUnitary:
    """
    Complex matrix on the full registry, indexed by canonical mode order. Column ``i`` is the image of
    the creation operator of mode ``i``.
    """

    def __init__(self, registry: ModeRegistry, matrix: np.ndarray) -> None:
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (len(registry), len(registry)):
            raise ConfigurationError(f'Matrix shape {matrix.shape} does not match {len(registry)} registry modes')
        matrix.setflags(write=False)

        self.registry = registry
        self.matrix = matrix

    @classmethod
    def identity(cls, registry: ModeRegistry) -> 'ModeUnitary':
        return cls(registry, np.eye(len(registry)))

    @classmethod
    def from_matrix(cls, registry: ModeRegistry, matrix: np.ndarray) -> 'ModeUnitary':
        """
        Raises:
            InvariantViolation: the matrix is not unitary within ``UNITARY_TOLERANCE``
        """
        res = cls(registry, matrix)
        res.check_unitary()
        return res

    def check_unitary(self) -> None:
        if not is_unitary(self.matrix):
            raise InvariantViolation('Mode matrix is not unitary')

    def dagger(self) -> 'ModeUnitary':
        return ModeUnitary(self.registry, self.matrix.conj().T)

    def __matmul__(self, other: 'ModeUnitary') -> 'ModeUnitary':
        if self.registry != other.registry:
            raise ConfigurationError('Cannot compose unitaries defined on different registries')
        return ModeUnitary(self.registry, self.matrix @ other.matrix)

    @functools.cached_property
    def columns(self) -> t.Tuple[t.Dict[int, complex], ...]:
        """Non-negligible entries of each column, row index -> value."""
        res = []
        for col in range(self.matrix.shape[1]):
            rows = np.nonzero(np.abs(self.matrix[:, col]) >= PRUNE_THRESHOLD)[0]
            res.append({int(r): complex(self.matrix[r, col]) for r in rows})
        return tuple(res)


######################
# Element primitives #
######################
def bs_matrix(transmissivity: float, convention: str = SYMMETRIC) -> np.ndarray:
    """
    2x2 beam-splitter matrix, columns are the input ports.

    - symmetric: ``[[sqrt(T), i sqrt(1-T)], [i sqrt(1-T), sqrt(T)]]``
    - real: ``[[sqrt(T), sqrt(1-T)], [sqrt(1-T), -sqrt(T)]]``

    Raises:
        ConfigurationError: `transmissivity` outside [0, 1] or unknown convention
    """
    transmissivity = finite_float(transmissivity, 'transmissivity')
    if not 0 <= transmissivity <= 1:
        raise ConfigurationError(f'transmissivity should be in [0, 1], got {transmissivity}')

    tt = math.sqrt(transmissivity)
    rr = math.sqrt(1 - transmissivity)
    if convention == SYMMETRIC:
        return np.array([[tt, 1j * rr], [1j * rr, tt]], dtype=complex)
    elif convention == 'real':
        return np.array([[tt, rr], [rr, -tt]], dtype=complex)

    raise ConfigurationError(f'Unknown beam-splitter convention {convention!r}. Valid options: {BS_CONVENTIONS}')


def rotator_matrix(angle: float) -> np.ndarray:
    """Rotation by `angle` radians on the (H, V) components of one path."""
    return rotation_matrix(angle)


def phase_matrix(phase: float) -> np.ndarray:
    return np.array([[np.exp(1j * phase)]], dtype=complex)


def _pbs_block(axis_angle: float) -> np.ndarray:
    """
    6x6 block over (in, transmit, reflect) x (H, V).

    in -> transmit along the axis, in -> reflect across it; the idle transmit/reflect inputs are routed back so
    that the block is a real symmetric orthogonal matrix.
    """
    vec = polarization_vector(axis_angle).real
    along = np.outer(vec, vec)
    across = np.eye(2) - along
    zero = np.zeros((2, 2))
    return np.block([
        [zero, along, across],
        [along, across, zero],
        [across, zero, along],
    ]).astype(complex)


def _embed(registry: ModeRegistry, paths: t.Sequence[str], block: np.ndarray) -> np.ndarray:
    """
    Identity on the registry except for `block`, which acts on ``paths x (H, V)`` of every tag.
    """
    registry.require_paths(*paths)
    matrix = np.eye(len(registry), dtype=complex)
    for tag in registry.tags:
        idx = [registry.index(path, pol, tag) for path in paths for pol in POLARIZATIONS]
        matrix[np.ix_(idx, idx)] = block
    return matrix


def pbs_unitary(
    axis_angle: float,
    in_path: str,
    transmit_path: str,
    reflect_path: str,
    registry: ModeRegistry,
) -> ModeUnitary:
    """
    Lossless two-output polarizing beam splitter.

    The component along `axis_angle` on `in_path` goes to `transmit_path`, the orthogonal one to `reflect_path`,
    both keeping their polarization.

    Raises:
        ConfigurationError: the three paths are not distinct or unknown
    """
    paths = (in_path, transmit_path, reflect_path)
    if len(set(paths)) != 3:
        raise ConfigurationError(f'Polarizing beam splitter paths should be distinct, got {paths}')

    return ModeUnitary(registry, _embed(registry, paths, _pbs_block(axis_angle)))


def bs_unitary(
    inputs: t.Tuple[str, str],
    outputs: t.Tuple[str, str],
    transmissivity: float,
    convention: str,
    registry: ModeRegistry,
) -> ModeUnitary:
    """
    Beam splitter mixing `inputs` into `outputs`, identically for every polarization and tag.

    When `outputs` are new paths, the idle output-path inputs are routed back onto the input paths with the
    adjoint matrix, which keeps the embedded matrix unitary.
    """
    bs = bs_matrix(transmissivity, convention)
    if len(set(inputs)) != 2 or len(set(outputs)) != 2:
        raise ConfigurationError(f'Beam splitter ports should be two distinct paths, got {inputs} -> {outputs}')

    eye = np.eye(2)
    if set(inputs) == set(outputs):
        paths = tuple(inputs)
        port = np.zeros((2, 2), dtype=complex)
        for k, out in enumerate(outputs):
            port[paths.index(out)] = bs[k]
    elif set(inputs) & set(outputs):
        raise ConfigurationError(f'Beam splitter outputs {outputs} partially overlap its inputs {inputs}')
    else:
        paths = (*inputs, *outputs)
        zero = np.zeros((2, 2))
        port = np.block([[zero, bs.conj().T], [bs, zero]])

    return ModeUnitary(registry, _embed(registry, paths, np.kron(port, eye)))


########################
# Element descriptions #
########################
@dataclass(frozen=True)
class BeamSplitter:
    inputs: t.Tuple[str, str]
    outputs: t.Tuple[str, str]
    transmissivity: float = 0.5
    convention: str = SYMMETRIC

    @property
    def input_paths(self) -> t.Tuple[str, ...]:
        return tuple(self.inputs)

    @property
    def output_paths(self) -> t.Tuple[str, ...]:
        return tuple(self.outputs)

    def unitary(self, registry: ModeRegistry) -> ModeUnitary:
        return bs_unitary(self.inputs, self.outputs, self.transmissivity, self.convention, registry)

    def describe(self) -> str:
        return (
            f'BeamSplitter({",".join(self.inputs)} -> {",".join(self.outputs)}, '
            f'T={self.transmissivity:g}, {self.convention})'
        )


@dataclass(frozen=True)
class PolarizingBeamSplitter:
    in_path: str
    axis_angle: float
    transmit_path: str
    reflect_path: str

    @property
    def input_paths(self) -> t.Tuple[str, ...]:
        return (self.in_path,)

    @property
    def output_paths(self) -> t.Tuple[str, ...]:
        return (self.transmit_path, self.reflect_path)

    def unitary(self, registry: ModeRegistry) -> ModeUnitary:
        return pbs_unitary(self.axis_angle, self.in_path, self.transmit_path, self.reflect_path, registry)

    def describe(self) -> str:
        return (
            f'PolarizingBeamSplitter({self.in_path} -> {self.transmit_path}|{self.reflect_path}, '
            f'axis={rad2deg(self.axis_angle):g}deg)'
        )


@dataclass(frozen=True)
class PolarizationRotator:
    path: str
    angle: float

    @property
    def input_paths(self) -> t.Tuple[str, ...]:
        return (self.path,)

    @property
    def output_paths(self) -> t.Tuple[str, ...]:
        return (self.path,)

    def unitary(self, registry: ModeRegistry) -> ModeUnitary:
        return ModeUnitary(registry, _embed(registry, [self.path], rotator_matrix(self.angle)))

    def describe(self) -> str:
        return f'PolarizationRotator({self.path}, {rad2deg(self.angle):g}deg)'


@dataclass(frozen=True)
class PhaseShifter:
    path: str
    pol: str
    phase: float

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ConfigurationError(f'Phase shifter polarization should be one of {POLARIZATIONS}, got {self.pol!r}')

    @property
    def input_paths(self) -> t.Tuple[str, ...]:
        return (self.path,)

    @property
    def output_paths(self) -> t.Tuple[str, ...]:
        return (self.path,)

    def unitary(self, registry: ModeRegistry) -> ModeUnitary:
        registry.require_paths(self.path)
        matrix = np.eye(len(registry), dtype=complex)
        for tag in registry.tags:
            i = registry.index(self.path, self.pol, tag)
            matrix[i, i] = phase_matrix(self.phase)[0, 0]
        return ModeUnitary(registry, matrix)

    def describe(self) -> str:
        return f'PhaseShifter({self.path}:{self.pol}, {rad2deg(self.phase):g}deg)'


Element = t.Union[BeamSplitter, PolarizingBeamSplitter, PolarizationRotator, PhaseShifter]


@dataclass(frozen=True)
class Circuit:
    """
    Ordered optical elements over a registry.

    Attributes:
        registry (ModeRegistry): modes the circuit acts on
        elements (tuple[Element, ...]): elements in the order light traverses them
        sources (tuple[str, ...]): paths that may carry light (or vacuum) into the circuit
    """

    registry: ModeRegistry
    elements: t.Tuple[Element, ...] = ()
    sources: t.Tuple[str, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        """
        Check the directed-acyclic path flow.

        Raises:
            ConfigurationError: naming the offending element
        """
        self.registry.require_paths(*self.sources)
        available = set(self.sources)
        seen = set(self.sources)
        consumed: t.Set[str] = set()
        for i, element in enumerate(self.elements):
            where = f'element #{i} {element.describe()}'
            try:
                self.registry.require_paths(*element.input_paths, *element.output_paths)
            except ConfigurationError as e:
                raise ConfigurationError(f'{where}: {e}')

            for path in element.input_paths:
                if path in consumed:
                    raise ConfigurationError(f'{where}: path {path!r} is already consumed by an earlier element')
                if path not in available:
                    raise ConfigurationError(
                        f'{where}: path {path!r} is neither a source nor an output of an earlier element'
                    )
            for path in element.input_paths:
                if path not in element.output_paths:
                    available.discard(path)
                    consumed.add(path)
            for path in element.output_paths:
                if path in element.input_paths:
                    continue
                if path in seen:
                    raise ConfigurationError(f'{where}: path {path!r} is produced twice')
                seen.add(path)
                available.add(path)

    def compile(self) -> ModeUnitary:
        return compile_circuit(self)


def compile_circuit(circuit: Circuit) -> ModeUnitary:
    """
    Ordered product of the element unitaries, ``U = U_k ... U_2 U_1``.

    Raises:
        ConfigurationError: flow violation
        InvariantViolation: the product is not unitary
    """
    circuit.validate()

    res = ModeUnitary.identity(circuit.registry)
    for element in circuit.elements:
        res = element.unitary(circuit.registry) @ res

    res.check_unitary()
    logging.debug('compiled %s element(s) on %s mode(s)', len(circuit.elements), len(circuit.registry))
    return res
