"""
Tag-blind photon counting: pattern probabilities, post-selected conditional states, qubit analysis and a seeded
event sampler.

Detectors never resolve distinguishability tags. Every probability sums over tags, and every conditional state is
traced over them.
"""

import logging
import math
import typing as t
from dataclasses import dataclass

import numpy as np

from .elements import PolarizationRotator
from .evolution import apply
from .fock import DensityMatrix, OccupationVector, PureState, reduce_terms
from .utils import (
    H,
    ZERO_SUPPORT_THRESHOLD,
    AnalysisError,
    ConfigurationError,
    ZeroSupportError,
    reduce_angle,
)

PURE_TOLERANCE = 1e-6
PHASE_TOLERANCE = 1e-6
MAX_SEED = 2**64


@dataclass(frozen=True)
class DetectionPattern:
    """
    What the detectors are asked to see.

    Attributes:
        counts (tuple[tuple[str, int], ...]): required photon count per detected path
        filters (tuple[tuple[str, float], ...]): optional polarizer axis (radians, mod pi) per detected path;
            only the component along the axis is counted on that path
        undetected_paths (tuple[str, ...]): paths kept in the conditional state
        name (str): display name, e.g. ``2,3``
    """

    counts: t.Tuple[t.Tuple[str, int], ...]
    filters: t.Tuple[t.Tuple[str, float], ...] = ()
    undetected_paths: t.Tuple[str, ...] = ()
    name: t.Optional[str] = None

    def __post_init__(self):
        detected = [p for p, _ in self.counts]
        if len(set(detected)) != len(detected):
            raise ConfigurationError(f'Detected paths should be unique, got {detected}')
        for path, count in self.counts:
            if not isinstance(count, int) or count < 0:
                raise ConfigurationError(f'Required count on path {path!r} should be a non-negative integer')
        for path, _ in self.filters:
            if path not in detected:
                raise ConfigurationError(f'Polarization filter on path {path!r} which is not detected')
        overlap = set(detected) & set(self.undetected_paths)
        if overlap:
            raise ConfigurationError(f'Path(s) {", ".join(sorted(overlap))} are both detected and undetected')

    @classmethod
    def create(
        cls,
        counts: t.Mapping[str, int],
        undetected_paths: t.Iterable[str] = (),
        filters: t.Optional[t.Mapping[str, float]] = None,
        name: t.Optional[str] = None,
    ) -> 'DetectionPattern':
        return cls(
            counts=tuple(counts.items()),
            filters=tuple((p, reduce_angle(a)) for p, a in (filters or {}).items()),
            undetected_paths=tuple(undetected_paths),
            name=name,
        )

    @property
    def detected_paths(self) -> t.Tuple[str, ...]:
        return tuple(p for p, _ in self.counts)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return ','.join(f'{c}@{p}' for p, c in self.counts)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class ConditionalResult:
    """
    Attributes:
        probability (float): probability of the pattern
        conditional (DensityMatrix | None): tag-blind state of the undetected paths, ``None`` when nothing is left
            undetected
        pattern (DetectionPattern): the pattern conditioned on
    """

    probability: float
    conditional: t.Optional[DensityMatrix]
    pattern: DetectionPattern


@dataclass(frozen=True, order=True)
class EventRecord:
    """
    One tag-blind, polarization-resolved detector record: ``(path, pol, count)`` for every occupied mode.
    """

    counts: t.Tuple[t.Tuple[str, str, int], ...]

    def path_count(self, path: str) -> int:
        return sum(c for p, _, c in self.counts if p == path)

    def __str__(self):
        return ' '.join(f'{p}:{pol}={c}' for p, pol, c in self.counts)


def _filtered(state: PureState, pattern: DetectionPattern) -> PureState:
    for path, axis in pattern.filters:
        # bring the filter axis onto H
        state = apply(state, PolarizationRotator(path, -axis).unitary(state.registry))
    return state


def _matching_terms(
    state: PureState, pattern: DetectionPattern
) -> t.Tuple[PureState, t.List[t.Tuple[OccupationVector, complex]]]:
    registry = state.registry
    registry.require_paths(*pattern.detected_paths, *pattern.undetected_paths)
    state = _filtered(state, pattern)

    filtered = {p for p, _ in pattern.filters}
    required = dict(pattern.counts)
    res = []
    for occupation, amp in state.items():
        seen = dict.fromkeys(required, 0)
        for i, c in occupation.counts:
            mode = registry[i]
            if mode.path in seen and (mode.path not in filtered or mode.pol == H):
                seen[mode.path] += c
        if seen == required:
            res.append((occupation, amp))
    return state, res


def pattern_probability(state: PureState, pattern: DetectionPattern) -> float:
    """
    Total squared amplitude of the terms matching `pattern`, summed over tags (and polarization unless filtered).

    Raises:
        ConfigurationError: unknown paths
    """
    _, terms = _matching_terms(state, pattern)
    return float(sum(abs(v) ** 2 for _, v in terms))


def conditional_state(state: PureState, pattern: DetectionPattern) -> ConditionalResult:
    """
    Post-select `state` on `pattern`.

    Projects onto the matching terms, traces out every path but the undetected ones (and all tags), and
    renormalizes.

    Raises:
        ZeroSupportError: the pattern probability is below ``ZERO_SUPPORT_THRESHOLD``
    """
    filtered, terms = _matching_terms(state, pattern)
    probability = float(sum(abs(v) ** 2 for _, v in terms))
    if probability <= ZERO_SUPPORT_THRESHOLD:
        raise ZeroSupportError(pattern, probability)

    conditional = None
    if pattern.undetected_paths:
        conditional = reduce_terms(filtered.registry, terms, pattern.undetected_paths)

    logging.debug('conditioned on %s with probability %.6g', pattern, probability)
    return ConditionalResult(probability, conditional, pattern)


def enumerate_patterns(
    state: PureState,
    detect_paths: t.Optional[t.Iterable[str]] = None,
    undetected_paths: t.Iterable[str] = (),
) -> t.List[DetectionPattern]:
    """
    Every tag-blind count record over `detect_paths` that `state` can produce, as mutually exclusive patterns.

    Args:
        state: the state to be measured
        detect_paths: detected paths. (Default: every registry path not in `undetected_paths`)
        undetected_paths: paths left for the conditional state
    """
    registry = state.registry
    undetected_paths = tuple(undetected_paths)
    if detect_paths is None:
        detect_paths = [p for p in registry.paths if p not in undetected_paths]
    detect_paths = tuple(detect_paths)
    registry.require_paths(*detect_paths, *undetected_paths)

    records = {}
    for occupation, _ in state.items():
        counts = dict.fromkeys(detect_paths, 0)
        for i, c in occupation.counts:
            if registry[i].path in counts:
                counts[registry[i].path] += c
        records[tuple(counts.items())] = None

    return [DetectionPattern(counts=rec, undetected_paths=undetected_paths) for rec in sorted(records)]


##################
# Qubit analysis #
##################
def _as_qubit(rho: t.Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        try:
            return rho.polarization_qubit()
        except ConfigurationError as e:
            raise AnalysisError(str(e))

    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise AnalysisError(f'Expected a 2x2 polarization density matrix, got shape {rho.shape}')
    return rho


def fidelity(rho: t.Union[DensityMatrix, np.ndarray], target: np.ndarray) -> float:
    """
    ``<target|rho|target>`` for a pure polarization `target` given in the lab (H, V) basis, clipped to [0, 1].

    Raises:
        AnalysisError: dimension mismatch
    """
    qubit = _as_qubit(rho)
    target = np.asarray(target, dtype=complex)
    if target.shape != (2,):
        raise AnalysisError(f'Target should be a 2-component polarization vector, got shape {target.shape}')
    target = target / np.linalg.norm(target)

    value = complex(target.conj() @ qubit @ target)
    if abs(value.imag) > 1e-12:
        raise AnalysisError(f'Fidelity has an imaginary part {value.imag:.3e}')
    return float(min(1.0, max(0.0, value.real)))


def purity(rho: t.Union[DensityMatrix, np.ndarray]) -> float:
    """``tr(rho^2)``, between 1/d and 1."""
    if isinstance(rho, DensityMatrix):
        return rho.purity()

    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def principal_vector(rho: t.Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    """
    Dominant eigenvector of a polarization qubit, with the global phase removed from its larger component.
    """
    qubit = _as_qubit(rho)
    _, vectors = np.linalg.eigh(qubit)
    vec = vectors[:, -1]
    j = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[j]) / vec[j])


def polarization_angle(rho: t.Union[DensityMatrix, np.ndarray]) -> float:
    """
    Lab-frame linear polarization angle (radians, mod pi) of a pure, linearly polarized qubit.

    Raises:
        AnalysisError: the state is mixed, or elliptically polarized
    """
    p = purity(rho)
    if abs(p - 1) > PURE_TOLERANCE:
        raise AnalysisError(f'State is mixed (purity {p:.9f}), no polarization angle defined')

    vec = principal_vector(rho)
    j = int(np.argmax(np.abs(vec)))
    other = vec[1 - j]
    if abs(other) > PHASE_TOLERANCE:
        phase = abs(float(np.angle(other)))
        if min(phase, math.pi - phase) > PHASE_TOLERANCE:
            raise AnalysisError(
                f'State is elliptically polarized (relative phase {math.degrees(phase):.6f} deg), '
                'no linear polarization angle defined'
            )

    return reduce_angle(math.atan2(vec[1].real, vec[0].real))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0, None))) @ vectors.conj().T


def trace_distance(rho: t.Union[DensityMatrix, np.ndarray], sigma: t.Union[DensityMatrix, np.ndarray]) -> float:
    """``||rho - sigma||_1 / 2`` between two polarization qubits."""
    diff = _as_qubit(rho) - _as_qubit(sigma)
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))) / 2)


def state_fidelity(rho: t.Union[DensityMatrix, np.ndarray], sigma: t.Union[DensityMatrix, np.ndarray]) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`` between two polarization qubits."""
    root = _psd_sqrt(_as_qubit(rho))
    inner = _psd_sqrt(root @ _as_qubit(sigma) @ root)
    return float(min(1.0, max(0.0, np.real(np.trace(inner)) ** 2)))


############
# Sampling #
############
def detection_distribution(state: PureState) -> t.Dict[EventRecord, float]:
    """
    Exact distribution of full tag-blind detector records, in canonical record order.
    """
    registry = state.registry
    order = {}
    for mode in registry:
        order.setdefault((mode.path, mode.pol), len(order))

    dist: t.Dict[EventRecord, float] = {}
    for occupation, amp in state.items():
        merged: t.Dict[t.Tuple[str, str], int] = {}
        for i, c in occupation.counts:
            key = (registry[i].path, registry[i].pol)
            merged[key] = merged.get(key, 0) + c
        record = EventRecord(tuple((p, pol, c) for (p, pol), c in sorted(merged.items(), key=lambda x: order[x[0]])))
        dist[record] = dist.get(record, 0.0) + abs(amp) ** 2

    return dict(sorted(dist.items()))


def make_generator(seed: int) -> np.random.Generator:
    """
    Counter-based Philox4x64 stream keyed by the 64-bit master seed. Shot ``i`` consumes the ``i``-th double of the
    stream.
    """
    if not isinstance(seed, int) or not 0 <= seed < MAX_SEED:
        raise ConfigurationError(f'seed should be an unsigned 64-bit integer, got {seed!r}')
    return np.random.Generator(np.random.Philox(key=seed))


def sample_events(state: PureState, n_shots: int, seed: int = 0) -> t.Dict[EventRecord, int]:
    """
    Draw `n_shots` i.i.d. full detector records from the exact distribution.

    Returns:
        record -> count, in canonical record order, zero counts omitted. Counts sum to `n_shots`.

    Raises:
        ConfigurationError: negative `n_shots` or invalid seed
    """
    if not isinstance(n_shots, int) or n_shots < 0:
        raise ConfigurationError(f'n_shots should be a non-negative integer, got {n_shots!r}')
    rng = make_generator(seed)
    if n_shots == 0:
        return {}

    dist = detection_distribution(state)
    records = list(dist)
    if n_shots < len(records):
        logging.warning('Sampling %s shot(s) from %s possible record(s)', n_shots, len(records))

    cumulative = np.cumsum(np.fromiter(dist.values(), dtype=float))
    cumulative /= cumulative[-1]
    draws = rng.random(n_shots)
    indices = np.minimum(np.searchsorted(cumulative, draws, side='right'), len(records) - 1)
    counts = np.bincount(indices, minlength=len(records))

    return {rec: int(c) for rec, c in zip(records, counts) if c}


def pattern_counts(counts: t.Mapping[EventRecord, int], pattern: DetectionPattern) -> int:
    """
    Number of sampled records matching `pattern`.

    Raises:
        ConfigurationError: `pattern` carries polarization filters, which sampled H/V records cannot resolve
    """
    if pattern.filters:
        raise ConfigurationError('Sampled records are resolved in H/V only, cannot count a filtered pattern')

    required = dict(pattern.counts)
    return sum(n for record, n in counts.items() if all(record.path_count(p) == c for p, c in required.items()))
