"""
Bosonic modes, sparse Fock states and tag-blind density matrices.

Polarization is always stored in the lab H/V basis. Analysis angles enter only through the state constructors here
and through the element matrices in :mod:`fockpath.elements`.
"""

import bisect
import logging
import math
import types
import typing as t
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .utils import (
    HERMITIAN_TOLERANCE,
    NORM_TOLERANCE,
    POLARIZATIONS,
    PRUNE_THRESHOLD,
    ConfigurationError,
    InvariantViolation,
    V,
)

_RawOccupation = t.Tuple[int, ...]  # sorted multiset of mode indices


@dataclass(frozen=True, order=True)
class Mode:
    """
    One bosonic mode.

    Attributes:
        path (str): spatial path label, e.g. ``l`` or ``2x``
        pol (str): lab-frame polarization component, ``H`` or ``V``
        tag (int): distinguishability label, opaque to everything but the control experiment
    """

    path: str
    pol: str
    tag: int = 0

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ConfigurationError(f'Mode polarization should be one of {POLARIZATIONS}, got {self.pol!r}')
        if not isinstance(self.tag, int) or self.tag < 0:
            raise ConfigurationError(f'Mode tag should be a non-negative integer, got {self.tag!r}')

    def __str__(self):
        return f'{self.path}:{self.pol}' if self.tag == 0 else f'{self.path}:{self.pol}#{self.tag}'


class ModeRegistry:
    """
    Ordered, duplicate-free list of modes. The position of a mode is its canonical basis index.
    """

    def __init__(self, modes: t.Iterable[Mode]) -> None:
        self._modes: t.Tuple[Mode, ...] = tuple(modes)
        self._index: t.Dict[t.Tuple[str, str, int], int] = {}
        for i, mode in enumerate(self._modes):
            key = (mode.path, mode.pol, mode.tag)
            if key in self._index:
                raise ConfigurationError(f'Duplicated mode {mode} in registry')
            self._index[key] = i

        self._paths = tuple(dict.fromkeys(m.path for m in self._modes))
        self._tags = tuple(sorted({m.tag for m in self._modes}))

    @classmethod
    def build(cls, paths: t.Iterable[str], tags: t.Iterable[int] = (0,)) -> 'ModeRegistry':
        """
        Registry with every (path, pol, tag) combination, ordered by path, then tag, then polarization.
        """
        tags = tuple(tags)
        return cls(Mode(path, pol, tag) for path in paths for tag in tags for pol in POLARIZATIONS)

    @property
    def modes(self) -> t.Tuple[Mode, ...]:
        return self._modes

    @property
    def paths(self) -> t.Tuple[str, ...]:
        return self._paths

    @property
    def tags(self) -> t.Tuple[int, ...]:
        return self._tags

    def index(self, path: str, pol: str, tag: int = 0) -> int:
        try:
            return self._index[(path, pol, tag)]
        except KeyError:
            raise ConfigurationError(f'Unknown mode (path={path!r}, pol={pol!r}, tag={tag!r})')

    def has_path(self, path: str) -> bool:
        return path in self._paths

    def require_paths(self, *paths: str) -> None:
        for path in paths:
            if not self.has_path(path):
                raise ConfigurationError(f'Unknown path {path!r}. Known paths: {", ".join(self._paths)}')

    def __len__(self) -> int:
        return len(self._modes)

    def __iter__(self) -> t.Iterator[Mode]:
        return iter(self._modes)

    def __getitem__(self, item: int) -> Mode:
        return self._modes[item]

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeRegistry) and self._modes == other._modes

    def __hash__(self) -> int:
        return hash(self._modes)

    def __repr__(self) -> str:
        return f'ModeRegistry({", ".join(str(m) for m in self._modes)})'


@dataclass(frozen=True, order=True)
class OccupationVector:
    """
    Sparse occupation numbers, stored as sorted ``(mode index, count)`` pairs with ``count >= 1``.
    """

    counts: t.Tuple[t.Tuple[int, int], ...] = ()

    def __post_init__(self):
        last = -1
        for index, count in self.counts:
            if index <= last or count < 1:
                raise ConfigurationError(f'Malformed occupation vector {self.counts!r}')
            last = index

    @classmethod
    def from_indices(cls, indices: t.Iterable[int]) -> 'OccupationVector':
        """One entry per photon, e.g. ``(3, 3, 5)`` is two photons in mode 3 and one in mode 5."""
        counter: t.Dict[int, int] = defaultdict(int)
        for i in indices:
            counter[i] += 1
        return cls(tuple(sorted(counter.items())))

    @classmethod
    def from_dense(cls, counts: t.Sequence[int]) -> 'OccupationVector':
        return cls(tuple((i, int(c)) for i, c in enumerate(counts) if c))

    @property
    def n_total(self) -> int:
        return sum(c for _, c in self.counts)

    def get(self, index: int) -> int:
        for i, c in self.counts:
            if i == index:
                return c
        return 0

    def indices(self) -> _RawOccupation:
        return tuple(i for i, c in self.counts for _ in range(c))

    def as_dense(self, size: int) -> t.List[int]:
        res = [0] * size
        for i, c in self.counts:
            res[i] = c
        return res

    def factorial_product(self) -> int:
        res = 1
        for _, c in self.counts:
            res *= math.factorial(c)
        return res

    def merge(self, other: 'OccupationVector') -> 'OccupationVector':
        return OccupationVector.from_indices(self.indices() + other.indices())

    def restrict(self, keep: t.Container[int]) -> 'OccupationVector':
        return OccupationVector(tuple((i, c) for i, c in self.counts if i in keep))


class PureState:
    """
    Sparse pure state: occupation vector -> complex amplitude.

    Amplitudes below ``PRUNE_THRESHOLD`` are dropped and terms are kept in canonical occupation order, so iterating
    a state is reproducible. Public constructors require a unit norm; pass ``check_norm=False`` for intermediate
    (e.g. projected) vectors.
    """

    def __init__(
        self,
        registry: ModeRegistry,
        terms: t.Mapping[OccupationVector, complex],
        check_norm: bool = True,
    ) -> None:
        self.registry = registry

        kept = {k: complex(v) for k, v in terms.items() if abs(v) >= PRUNE_THRESHOLD}
        pruned = len(terms) - len(kept)
        if pruned:
            logging.debug('pruned %s amplitude(s) below %s', pruned, PRUNE_THRESHOLD)

        n_totals = {k.n_total for k in kept}
        if len(n_totals) > 1:
            raise InvariantViolation(f'Mixed photon numbers {sorted(n_totals)} in one state')
        size = len(registry)
        for k in kept:
            if k.counts and k.counts[-1][0] >= size:
                raise ConfigurationError(f'Occupation {k} refers to a mode outside the registry')

        self._terms = types.MappingProxyType(dict(sorted(kept.items())))

        if check_norm and abs(self.norm_squared - 1) > NORM_TOLERANCE:
            raise InvariantViolation(f'State is not normalized, squared norm {self.norm_squared!r}')

    @property
    def terms(self) -> t.Mapping[OccupationVector, complex]:
        return self._terms

    @property
    def n_total(self) -> int:
        for k in self._terms:
            return k.n_total
        return 0

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(v) ** 2 for v in self._terms.values()))

    def amplitude(self, occupation: OccupationVector) -> complex:
        return self._terms.get(occupation, 0j)

    def items(self) -> t.ItemsView[OccupationVector, complex]:
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def ket_str(self, occupation: OccupationVector) -> str:
        parts = []
        for i, c in occupation.counts:
            parts.append(f'{self.registry[i]}' if c == 1 else f'{self.registry[i]}^{c}')
        return '|' + ', '.join(parts) + '>'

    def __repr__(self) -> str:
        return ' + '.join(f'({v:.6g}){self.ket_str(k)}' for k, v in self._terms.items()) or '0'


######################
# Creation operators #
######################
def expand_creation_product(
    factors: t.Sequence[t.Mapping[int, complex]],
    prefactor: complex = 1.0,
) -> t.Dict[OccupationVector, complex]:
    """
    Expand ``prefactor * prod_k (sum_i factors[k][i] a_i^dagger) |0>`` into normalized Fock amplitudes.

    A product of creation operators with occupation ``m`` equals ``sqrt(prod m_i!)`` times the normalized ket.

    Args:
        factors: one linear combination of creation operators (mode index -> coefficient) per photon
        prefactor: overall coefficient

    Returns:
        occupation vector -> amplitude, in deterministic insertion order
    """
    partial: t.Dict[_RawOccupation, complex] = {(): complex(prefactor)}
    for factor in factors:
        nxt: t.Dict[_RawOccupation, complex] = {}
        for key, amp in partial.items():
            for index, coeff in factor.items():
                new = list(key)
                bisect.insort(new, index)
                new_key = tuple(new)
                nxt[new_key] = nxt.get(new_key, 0j) + amp * coeff
        partial = nxt

    res: t.Dict[OccupationVector, complex] = {}
    for key, amp in partial.items():
        occupation = OccupationVector.from_indices(key)
        res[occupation] = res.get(occupation, 0j) + amp * math.sqrt(occupation.factorial_product())
    return res


def polarized_creation(registry: ModeRegistry, path: str, pol_angle: float, tag: int = 0) -> t.Dict[int, complex]:
    """
    Creation operator of a photon on `path` linearly polarized at `pol_angle` radians, in H/V components.
    """
    registry.require_paths(path)
    if tag not in registry.tags:
        raise ConfigurationError(f'Unknown tag {tag!r}. Known tags: {registry.tags}')

    res = {}
    for pol, coeff in zip(POLARIZATIONS, (math.cos(pol_angle), math.sin(pol_angle))):
        if abs(coeff) >= PRUNE_THRESHOLD:
            res[registry.index(path, pol, tag)] = complex(coeff)
    return res


################
# Constructors #
################
def vacuum(registry: ModeRegistry) -> PureState:
    return PureState(registry, {OccupationVector(): 1.0})


def single_photon_state(registry: ModeRegistry, path: str, pol_angle: float, tag: int = 0) -> PureState:
    """
    ``cos(pol_angle)|path,H,tag> + sin(pol_angle)|path,V,tag>``

    Args:
        registry: mode registry
        path: photon path
        pol_angle: linear polarization angle in radians
        tag: distinguishability tag

    Raises:
        ConfigurationError: unknown path or tag
    """
    return PureState(registry, expand_creation_product([polarized_creation(registry, path, pol_angle, tag)]))


def epr_pair_state(registry: ModeRegistry, path1: str, path2: str, a_angle: float, tag: int = 0) -> PureState:
    """
    Polarization-entangled pair ``(|a,path1>|a,path2> + |a_perp,path1>|a_perp,path2>) / sqrt(2)``.

    The result does not depend on `a_angle`: the pair is invariant under an equal real rotation of both bases.
    """
    if path1 == path2:
        raise ConfigurationError(f'EPR pair paths should differ, got {path1!r} twice')

    terms: t.Dict[OccupationVector, complex] = {}
    for angle in (a_angle, a_angle + math.pi / 2):
        branch = expand_creation_product(
            [polarized_creation(registry, path1, angle, tag), polarized_creation(registry, path2, angle, tag)],
            prefactor=1 / math.sqrt(2),
        )
        for k, v in branch.items():
            terms[k] = terms.get(k, 0j) + v

    return PureState(registry, terms)


def tensor(s1: PureState, s2: PureState) -> PureState:
    """
    Product state of two states prepared on disjoint paths of the same registry.

    Raises:
        ConfigurationError: registry mismatch, or both states occupy the same path
    """
    if s1.registry != s2.registry:
        raise ConfigurationError('Cannot tensor states defined on different registries')

    registry = s1.registry
    paths1 = {registry[i].path for k in s1.terms for i, _ in k.counts}
    paths2 = {registry[i].path for k in s2.terms for i, _ in k.counts}
    overlap = paths1 & paths2
    if overlap:
        raise ConfigurationError(f'States overlap on path(s) {", ".join(sorted(overlap))}')

    terms: t.Dict[OccupationVector, complex] = {}
    for k1, v1 in s1.items():
        for k2, v2 in s2.items():
            terms[k1.merge(k2)] = v1 * v2

    return PureState(registry, terms)


def superpose(states: t.Sequence[PureState], coefficients: t.Sequence[complex]) -> PureState:
    """
    Normalized linear combination ``N * sum_k coefficients[k] * states[k]``.
    """
    if not states or len(states) != len(coefficients):
        raise ConfigurationError('superpose needs one coefficient per state')

    registry = states[0].registry
    terms: t.Dict[OccupationVector, complex] = {}
    for state, coeff in zip(states, coefficients):
        if state.registry != registry:
            raise ConfigurationError('Cannot superpose states defined on different registries')
        for k, v in state.items():
            terms[k] = terms.get(k, 0j) + coeff * v

    norm = math.sqrt(sum(abs(v) ** 2 for v in terms.values()))
    if norm < NORM_TOLERANCE:
        raise ConfigurationError('Superposition vanishes, cannot normalize')

    return PureState(registry, {k: v / norm for k, v in terms.items()})


def relabel_tags(state: PureState, mapping: t.Mapping[int, int]) -> PureState:
    """
    The same state on a registry whose tags are renamed by `mapping`. Mode positions are unchanged.
    """
    registry = ModeRegistry(Mode(m.path, m.pol, mapping.get(m.tag, m.tag)) for m in state.registry)
    return PureState(registry, dict(state.items()))


def inner_product(s1: PureState, s2: PureState) -> complex:
    """``<s1|s2>``, conjugate-linear in `s1`."""
    if s1.registry != s2.registry:
        raise ConfigurationError('Cannot take the inner product of states defined on different registries')

    return complex(sum(v.conjugate() * s2.amplitude(k) for k, v in s1.items()))


##################
# Density matrix #
##################
class DensityMatrix:
    """
    Tag-blind density matrix over a subset of paths.

    Attributes:
        modes (tuple[tuple[str, str], ...]): kept (path, pol) pairs, in registry order
        basis (tuple[OccupationVector, ...]): occupation vectors over `modes` (indices into `modes`)
        matrix (np.ndarray): complex square matrix indexed by `basis`
        zero_photon (bool): no photon of the state reached the kept paths
    """

    def __init__(
        self,
        modes: t.Sequence[t.Tuple[str, str]],
        basis: t.Sequence[OccupationVector],
        matrix: np.ndarray,
    ) -> None:
        self.modes = tuple(modes)
        self.basis = tuple(basis)
        self.matrix = np.array(matrix, dtype=complex)
        self.matrix.setflags(write=False)

        if self.matrix.shape != (len(self.basis), len(self.basis)):
            raise InvariantViolation(f'Density matrix shape {self.matrix.shape} does not match its basis')
        if np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) > HERMITIAN_TOLERANCE:
            raise InvariantViolation('Density matrix is not Hermitian')
        if abs(self.trace - 1) > NORM_TOLERANCE:
            raise InvariantViolation(f'Density matrix trace is {self.trace!r}, expected 1')
        if np.min(np.linalg.eigvalsh(self.matrix), initial=0.0) < -1e-10:
            raise InvariantViolation('Density matrix is not positive semidefinite')

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def zero_photon(self) -> bool:
        return self.basis == (OccupationVector(),)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def entry(self, row: OccupationVector, col: OccupationVector) -> complex:
        try:
            return complex(self.matrix[self.basis.index(row), self.basis.index(col)])
        except ValueError:
            return 0j

    def polarization_qubit(self) -> np.ndarray:
        """
        2x2 matrix in the lab (H, V) basis of a single photon confined to one path.

        Raises:
            ConfigurationError: the matrix is not a single-photon, single-path state
        """
        paths = {self.modes[i][0] for k in self.basis for i, _ in k.counts}
        if len(paths) != 1 or any(k.n_total != 1 for k in self.basis):
            raise ConfigurationError(
                'Density matrix is not a single photon on a single path, cannot read it as a polarization qubit'
            )

        qubit = np.zeros((2, 2), dtype=complex)
        slots = [1 if self.modes[k.counts[0][0]][1] == V else 0 for k in self.basis]
        for r, sr in enumerate(slots):
            for c, sc in enumerate(slots):
                qubit[sr, sc] += self.matrix[r, c]
        return qubit

    def __repr__(self) -> str:
        return f'DensityMatrix(dim={self.dim}, modes={self.modes})'


def _tag_record(registry: ModeRegistry, occupation: OccupationVector) -> t.Tuple[t.Tuple[int, int], ...]:
    record: t.Dict[int, int] = defaultdict(int)
    for i, c in occupation.counts:
        record[registry[i].tag] += c
    return tuple(sorted(record.items()))


def reduce_terms(
    registry: ModeRegistry,
    terms: t.Iterable[t.Tuple[OccupationVector, complex]],
    keep_paths: t.Iterable[str],
) -> DensityMatrix:
    """
    Tag-blind partial trace of a (possibly unnormalized) vector onto `keep_paths`, renormalized to trace 1.

    Modes outside `keep_paths` and the tags of the kept photons form the environment. The result is an exact
    partial trace as long as a kept occupation is determined by its tag-blind counts plus its per-tag photon
    numbers, which holds for any kept subsystem whose photons share one tag or which holds a single photon.

    Raises:
        ConfigurationError: empty or unknown `keep_paths`, or a kept subsystem mixing tags across several
            tag-blind configurations
    """
    keep_paths = tuple(dict.fromkeys(keep_paths))
    if not keep_paths:
        raise ConfigurationError('keep_paths should not be empty')
    registry.require_paths(*keep_paths)

    visible: t.List[t.Tuple[str, str]] = []
    for mode in registry:
        if mode.path in keep_paths and (mode.path, mode.pol) not in visible:
            visible.append((mode.path, mode.pol))
    visible_index = {pair: i for i, pair in enumerate(visible)}
    kept_modes = {i for i, m in enumerate(registry) if m.path in keep_paths}

    groups: t.Dict[t.Any, t.Dict[OccupationVector, complex]] = {}
    seen: t.Dict[t.Tuple[OccupationVector, t.Any], OccupationVector] = {}
    total = 0.0
    for occupation, amp in terms:
        kept = occupation.restrict(kept_modes)
        env = OccupationVector(tuple((i, c) for i, c in occupation.counts if i not in kept_modes))
        record = _tag_record(registry, kept)
        vis = OccupationVector.from_indices(
            visible_index[(registry[i].path, registry[i].pol)] for i in kept.indices()
        )

        previous = seen.setdefault((vis, record), kept)
        if previous != kept:
            raise ConfigurationError(
                'Kept paths hold photons with different tags in interchangeable positions; '
                'the tag-blind reduction is not defined for this subsystem'
            )

        groups.setdefault((env, record), {})[vis] = amp
        total += abs(amp) ** 2

    if total <= 0:
        raise ConfigurationError('Cannot reduce a vanishing vector')

    basis = sorted({vis for group in groups.values() for vis in group})
    position = {vis: i for i, vis in enumerate(basis)}
    matrix = np.zeros((len(basis), len(basis)), dtype=complex)
    for group in groups.values():
        vec = np.zeros(len(basis), dtype=complex)
        for vis, amp in group.items():
            vec[position[vis]] = amp
        matrix += np.outer(vec, vec.conj())

    matrix /= total
    # exact Hermitian symmetrization, round-off only
    matrix = (matrix + matrix.conj().T) / 2

    res = DensityMatrix(visible, basis, matrix)
    if res.zero_photon:
        logging.warning('No photon reaches path(s) %s, the reduced state is the trivial scalar', ', '.join(keep_paths))
    return res


def reduced_density_matrix(state: PureState, keep_paths: t.Iterable[str]) -> DensityMatrix:
    """
    Partial trace of `state` over every mode outside `keep_paths` and over all tags.

    Tags are traced out by merging kept configurations that differ only in which tag sits where. This is defined
    as long as no two photons with different tags can swap places on the kept paths. Keeping both outputs of a
    beam splitter fed by two distinguishable photons breaks that and is rejected.

    Args:
        state: pure state
        keep_paths: paths to keep

    Returns:
        Hermitian, trace-1 density matrix. ``zero_photon`` is set when no photon is on `keep_paths`.

    Raises:
        ConfigurationError: kept paths hold photons with different tags in interchangeable positions
    """
    return reduce_terms(state.registry, state.items(), keep_paths)
