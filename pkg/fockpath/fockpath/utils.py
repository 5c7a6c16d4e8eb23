import math
import typing as t

import numpy as np

#############
# Constants #
#############
PRUNE_THRESHOLD = 1e-14
NORM_TOLERANCE = 1e-9
UNITARY_TOLERANCE = 1e-12
HERMITIAN_TOLERANCE = 1e-12
ZERO_SUPPORT_THRESHOLD = 1e-12

H = 'H'
V = 'V'
POLARIZATIONS = (H, V)

SYMMETRIC = 'symmetric'
REAL = 'real'
BS_CONVENTIONS = (SYMMETRIC, REAL)

IDENTICAL = 'identical'
DISTINCT = 'distinct'
TAG_MODES = (IDENTICAL, DISTINCT)

_T = t.TypeVar('_T')


#######################
# Errors and Warnings #
#######################
class UserHint(Warning):
    pass


class FockpathError(Exception):
    pass


class ConfigurationError(FockpathError, ValueError):
    pass


class ZeroSupportError(FockpathError):
    def __init__(self, pattern: t.Any, probability: float) -> None:
        self.pattern = pattern
        self.probability = probability
        super().__init__(f'Pattern {pattern} has no support (probability {probability:.3e}), cannot condition on it')


class AnalysisError(FockpathError):
    pass


class InvariantViolation(FockpathError):
    pass


class SpecError(ConfigurationError):
    def __init__(
        self,
        message: str,
        path: t.Optional[str] = None,
        line: t.Optional[int] = None,
        column: t.Optional[int] = None,
    ) -> None:
        self.message = message
        self.path = path
        self.line = line
        self.column = column

        if path:
            text = f'{path}: {message}'
        elif line is not None:
            text = f'line {line}, column {column}: {message}'
        else:
            text = message
        super().__init__(text)


#####################
# Utility Functions #
#####################
def to_list(s: _T) -> t.List[_T]:
    """
    Args:
        s: Anything

    Returns:
        List (list[_T])

        - `list(s)` (List. If `s` is a tuple or a set.
        - itself. If `s` is a list.
        - `[s]`. If `s` is other types.
    """
    if not s:
        return s

    if isinstance(s, (set, tuple)):
        return list(s)
    elif isinstance(s, list):
        return s
    else:
        return [s]


def deg2rad(angle: float) -> float:
    return math.radians(angle)


def rad2deg(angle: float) -> float:
    return math.degrees(angle)


def reduce_angle(angle: float) -> float:
    """
    Reduce a polarization angle in radians to [0, pi).

    Angles within 1e-12 of pi fold onto 0, so that -0.0 and pi both print as 0.
    """
    res = math.fmod(angle, math.pi)
    if res < 0:
        res += math.pi
    if math.pi - res < 1e-12 or abs(res) < 1e-15:
        return 0.0
    return res


def polarization_vector(angle: float) -> np.ndarray:
    """
    Linear polarization at `angle` (radians) expressed in the lab H/V basis.
    """
    return np.array([math.cos(angle), math.sin(angle)], dtype=complex)


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def max_abs_deviation(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOLERANCE) -> bool:
    n = matrix.shape[0]
    return max_abs_deviation(matrix.conj().T @ matrix, np.eye(n)) <= tol


def finite_float(value: t.Any, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f'{name} should be a number, got {value!r}')

    if not math.isfinite(value):
        raise ConfigurationError(f'{name} should be finite, got {value!r}')

    return value
