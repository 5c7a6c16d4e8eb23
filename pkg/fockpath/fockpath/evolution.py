"""
Exact evolution of Fock states through linear optics, and an independent permanent-based amplitude oracle.

:func:`apply` substitutes every creation operator by its image and expands the product; :func:`amplitude_oracle`
evaluates a single transition amplitude from a matrix permanent. The two share no expansion code.
"""

import itertools
import logging
import math
import typing as t
from dataclasses import dataclass

import numpy as np

from .elements import ModeUnitary
from .fock import OccupationVector, PureState, expand_creation_product
from .utils import NORM_TOLERANCE, ConfigurationError, InvariantViolation

MAX_PERMANENT_SIZE = 10
MAX_NAIVE_PERMANENT_SIZE = 4


def apply(state: PureState, unitary: ModeUnitary) -> PureState:
    """
    Evolve `state` through `unitary`.

    Each input term ``c |n>`` becomes ``c / sqrt(prod n_i!) * prod_i (sum_j U_ji a_j^dagger)^{n_i} |0>``, expanded
    with the bosonic factor ``sqrt(prod m_j!)`` on every output occupation ``m``. Terms are expanded in canonical
    order and accumulated in insertion order, so identical inputs give bit-identical outputs.

    Raises:
        ConfigurationError: registry mismatch
        InvariantViolation: the output norm drifted from the input norm by more than ``NORM_TOLERANCE``
    """
    if state.registry != unitary.registry:
        raise ConfigurationError('State and unitary are defined on different registries')

    columns = unitary.columns
    out: t.Dict[OccupationVector, complex] = {}
    for occupation, amp in state.items():
        factors = [columns[i] for i in occupation.indices()]
        expanded = expand_creation_product(factors, prefactor=amp / math.sqrt(occupation.factorial_product()))
        for k, v in expanded.items():
            out[k] = out.get(k, 0j) + v

    res = PureState(state.registry, out, check_norm=False)
    logging.debug('evolved %s term(s) into %s term(s)', len(state), len(res))

    drift = abs(res.norm_squared - state.norm_squared)
    if drift > NORM_TOLERANCE:
        raise InvariantViolation(f'Norm drifted by {drift:.3e} during evolution')

    return res


######################
# Permanent & oracle #
######################
def _square(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError(f'Permanent needs a square matrix, got shape {matrix.shape}')
    if matrix.shape[0] > MAX_PERMANENT_SIZE:
        raise ConfigurationError(f'Permanent is limited to {MAX_PERMANENT_SIZE}x{MAX_PERMANENT_SIZE} matrices')
    return matrix


def permanent_naive(matrix: np.ndarray) -> complex:
    """Sum over all n! permutations. Only for n <= 4."""
    matrix = _square(matrix)
    n = matrix.shape[0]
    if n > MAX_NAIVE_PERMANENT_SIZE:
        raise ConfigurationError(f'Naive permanent is limited to {MAX_NAIVE_PERMANENT_SIZE}x{MAX_NAIVE_PERMANENT_SIZE}')

    res = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1 + 0j
        for row, col in enumerate(perm):
            prod *= matrix[row, col]
        res += prod
    return res


def permanent_ryser(matrix: np.ndarray) -> complex:
    """
    Ryser inclusion-exclusion: ``perm(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij``.
    """
    matrix = _square(matrix)
    n = matrix.shape[0]
    if n == 0:
        return 1 + 0j

    masks = (np.arange(1, 2**n)[:, None] >> np.arange(n)) & 1
    row_sums = masks @ matrix.T
    signs = np.where((n - masks.sum(axis=1)) % 2, -1.0, 1.0)
    return complex(np.sum(signs * np.prod(row_sums, axis=1)))


def permanent(matrix: np.ndarray) -> complex:
    """
    Exact permanent of a square complex matrix up to 10x10.

    Raises:
        ConfigurationError: non-square or too large
    """
    return permanent_ryser(matrix)


@dataclass(frozen=True, eq=False)
class TransitionQuery:
    unitary: ModeUnitary
    input: OccupationVector
    output: OccupationVector

    def __post_init__(self):
        if self.input.n_total != self.output.n_total:
            raise ConfigurationError(
                f'Photon numbers differ: {self.input.n_total} in, {self.output.n_total} out'
            )


def amplitude_oracle(query: TransitionQuery) -> complex:
    """
    ``<output| U |input> = Per(U_sub) / sqrt(prod s_i! prod t_j!)``, where ``U_sub`` repeats column ``i`` of the
    unitary ``s_i`` times and row ``j`` ``t_j`` times.
    """
    if query.input.n_total > MAX_PERMANENT_SIZE:
        raise ConfigurationError(f'Oracle is limited to {MAX_PERMANENT_SIZE} photons')

    rows = list(query.output.indices())
    cols = list(query.input.indices())
    if not rows:
        return 1 + 0j

    sub = query.unitary.matrix[np.ix_(rows, cols)]
    norm = math.sqrt(query.input.factorial_product() * query.output.factorial_product())
    return permanent(sub) / norm
