"""
Prebuilt protocols: three-photon polarization steering, its distinguishable control, c sweeps, CHSH on the
entangled pair, and a two-photon interference baseline.
"""

import logging
import math
import multiprocessing
import sys
import typing as t
import warnings
from dataclasses import dataclass, field

import numpy as np

from .elements import BeamSplitter, Circuit, ModeUnitary, PolarizingBeamSplitter
from .evolution import apply
from .fock import ModeRegistry, PureState, epr_pair_state, single_photon_state, tensor
from .measurement import (
    ConditionalResult,
    DetectionPattern,
    EventRecord,
    conditional_state,
    fidelity,
    pattern_probability,
    polarization_angle,
    principal_vector,
    purity,
    sample_events,
    state_fidelity,
    trace_distance,
)
from .utils import (
    BS_CONVENTIONS,
    DISTINCT,
    IDENTICAL,
    NORM_TOLERANCE,
    SYMMETRIC,
    TAG_MODES,
    UNITARY_TOLERANCE,
    ZERO_SUPPORT_THRESHOLD,
    AnalysisError,
    ConfigurationError,
    UserHint,
    deg2rad,
    finite_float,
    polarization_vector,
    rad2deg,
)

if sys.platform == 'darwin':
    _ctx = multiprocessing.get_context('fork')
else:
    _ctx = multiprocessing.get_context()

# source pair on l/m, third photon on q; analyzers II (m) and III (q); recombination at H2 and H3
RYFF_PATHS = ('l', 'm', 'n', 'p', 'q', 'r', 's', '2', '2x', '3', '3x')
POLARIZER_I_PATHS = ('1', '1x')
CROSS_PATTERNS = (('2', '3'), ('2', '3x'), ('2x', '3'), ('2x', '3x'))
COINCIDENCE_PATHS = ('2', '2x', '3', '3x')

CHSH_PATHS = ('l', 'm', 'lt', 'lr', 'mt', 'mr')
HOM_PATHS = ('h1', 'h2', 'o1', 'o2')

NOTE = (
    'Photon l may travel an arbitrarily long detour before polarizer I. Its conditional polarization is fixed by '
    'the coincidence at detectors 2 and 3 alone; event timing is not modeled.'
)


def _check_choice(value: str, name: str, choices: t.Sequence[str]) -> None:
    if value not in choices:
        raise ConfigurationError(f'{name} should be one of {", ".join(choices)}, got {value!r}')


##########
# Config #
##########
@dataclass(frozen=True)
class RyffConfig:
    """
    Attributes:
        a_angle (float): axis of polarizers II and III, degrees
        b_angle (float | None): axis of polarizer I, degrees. Only used with `analyze_nu1`
        c_angle (float): linear polarization of the third photon, degrees
        bs_convention (str): beam-splitter phase convention, ``symmetric`` or ``real``
        tags (str): ``identical`` photons, or ``distinct`` to put the third photon on its own tag
        pol_iii_axis (float | None): axis of polarizer III, degrees. (Default: `a_angle`)
        analyze_nu1 (bool): insert polarizer I on path ``l``
    """

    a_angle: float = 0.0
    b_angle: t.Optional[float] = None
    c_angle: float = 0.0
    bs_convention: str = SYMMETRIC
    tags: str = IDENTICAL
    pol_iii_axis: t.Optional[float] = None
    analyze_nu1: bool = False

    def __post_init__(self):
        for name in ('a_angle', 'c_angle'):
            object.__setattr__(self, name, finite_float(getattr(self, name), name))
        for name in ('b_angle', 'pol_iii_axis'):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, finite_float(getattr(self, name), name))

        _check_choice(self.bs_convention, 'bs_convention', BS_CONVENTIONS)
        _check_choice(self.tags, 'tags', TAG_MODES)
        if not isinstance(self.analyze_nu1, bool):
            raise ConfigurationError(f'analyze_nu1 should be a boolean, got {self.analyze_nu1!r}')

        if self.b_angle is not None and not self.analyze_nu1:
            msg = 'b_angle is recorded but unused, set analyze_nu1 to insert polarizer I'
            logging.warning(msg)
            warnings.warn(msg, UserHint)

    @property
    def gamma_deg(self) -> float:
        """Signed angle from the analyzer axis to the third photon's polarization."""
        return self.c_angle - self.a_angle

    @property
    def pol_iii(self) -> float:
        return self.a_angle if self.pol_iii_axis is None else self.pol_iii_axis

    @property
    def b(self) -> float:
        return 0.0 if self.b_angle is None else self.b_angle

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            'a_deg': self.a_angle,
            'b_deg': self.b_angle,
            'c_deg': self.c_angle,
            'bs_convention': self.bs_convention,
            'tags': self.tags,
            'pol_iii_axis_deg': self.pol_iii,
            'analyze_nu1': self.analyze_nu1,
        }


@dataclass(frozen=True)
class Report:
    config: RyffConfig
    p_coinc: float
    patterns: t.Dict[str, float]
    conditional: np.ndarray
    fidelity_eq7: float
    purity: float
    nu1_angle_deg: t.Optional[float]
    nu1_angle_reason: t.Optional[str]
    relative_phase_deg: t.Optional[float]
    trace_distance_which_path: float
    fidelity_which_path: float
    nu1_transmission: t.Optional[float] = None
    nu1_transmission_eq7: t.Optional[float] = None
    note: str = NOTE

    def to_dict(self) -> t.Dict[str, t.Any]:
        res = {
            'experiment': 'ryff',
            'config': self.config.to_dict(),
            'gamma_deg': self.config.gamma_deg,
            'p_coinc': self.p_coinc,
            'patterns': dict(self.patterns),
            'conditional': {
                'basis': ['H', 'V'],
                'real': self.conditional.real.tolist(),
                'imag': self.conditional.imag.tolist(),
            },
            'fidelity_eq7': self.fidelity_eq7,
            'purity': self.purity,
            'nu1_angle_deg': self.nu1_angle_deg,
            'relative_phase_deg': self.relative_phase_deg,
            'trace_distance_which_path': self.trace_distance_which_path,
            'fidelity_which_path': self.fidelity_which_path,
            'convention': {
                'bs_convention': self.config.bs_convention,
                'gamma': 'c_angle - a_angle, signed',
                'angles': 'degrees, lab frame, polarization mod 180',
            },
            'tolerances': {
                'norm': NORM_TOLERANCE,
                'unitary': UNITARY_TOLERANCE,
                'zero_support': ZERO_SUPPORT_THRESHOLD,
            },
            'note': self.note,
        }
        if self.nu1_angle_reason is not None:
            res['nu1_angle_reason'] = self.nu1_angle_reason
        if self.config.analyze_nu1:
            res['nu1_transmission'] = self.nu1_transmission
            res['nu1_transmission_eq7'] = self.nu1_transmission_eq7
        return res


@dataclass(frozen=True)
class SweepRow:
    c_deg: float
    p_coinc: float
    fidelity_eq7: float
    purity: float
    nu1_angle_deg: t.Optional[float]

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            'c_deg': self.c_deg,
            'p_coinc': self.p_coinc,
            'fidelity_eq7': self.fidelity_eq7,
            'purity': self.purity,
            'nu1_angle_deg': self.nu1_angle_deg,
        }


#################
# Ryff protocol #
#################
def _ryff_registry(config: RyffConfig, with_polarizer_i: bool) -> ModeRegistry:
    paths = RYFF_PATHS + (POLARIZER_I_PATHS if with_polarizer_i else ())
    tags = (0, 1) if config.tags == DISTINCT else (0,)
    return ModeRegistry.build(paths, tags)


def _ryff_state(config: RyffConfig, registry: ModeRegistry) -> PureState:
    third_tag = 1 if config.tags == DISTINCT else 0
    pair = epr_pair_state(registry, 'l', 'm', deg2rad(config.a_angle))
    third = single_photon_state(registry, 'q', deg2rad(config.c_angle), tag=third_tag)
    return tensor(pair, third)


def _ryff_circuit(config: RyffConfig, registry: ModeRegistry, with_polarizer_i: bool) -> Circuit:
    elements = [
        PolarizingBeamSplitter('m', deg2rad(config.a_angle), 'n', 'p'),
        PolarizingBeamSplitter('q', deg2rad(config.pol_iii), 'r', 's'),
        BeamSplitter(('n', 'r'), ('2', '2x'), 0.5, config.bs_convention),
        BeamSplitter(('p', 's'), ('3', '3x'), 0.5, config.bs_convention),
    ]
    if with_polarizer_i:
        elements.append(PolarizingBeamSplitter('l', deg2rad(config.b), '1', '1x'))
    return Circuit(registry, tuple(elements), sources=('l', 'm', 'q'))


def cross_pattern(hit2: str, hit3: str, undetected_paths: t.Iterable[str] = ('l',)) -> DetectionPattern:
    """One photon at `hit2` (``2`` or ``2x``), one at `hit3` (``3`` or ``3x``), none at the other two outputs."""
    counts = {p: int(p in (hit2, hit3)) for p in COINCIDENCE_PATHS}
    return DetectionPattern.create(counts, undetected_paths=undetected_paths, name=f'{hit2},{hit3}')


def build_ryff(config: RyffConfig) -> t.Tuple[PureState, Circuit, t.Tuple[DetectionPattern, ...]]:
    """
    Source state, circuit and the four cross-coincidence patterns of the steering experiment.

    Path ``l`` is left undetected in the patterns, unless polarizer I is inserted, in which case ``l`` is consumed
    by it and photon l is marginalized over its outputs ``1``/``1x``.
    """
    registry = _ryff_registry(config, config.analyze_nu1)
    state = _ryff_state(config, registry)
    circuit = _ryff_circuit(config, registry, config.analyze_nu1)
    undetected = () if config.analyze_nu1 else ('l',)
    patterns = tuple(cross_pattern(h2, h3, undetected) for h2, h3 in CROSS_PATTERNS)
    return state, circuit, patterns


def predicted_nu1(a_angle: float, c_angle: float) -> np.ndarray:
    """
    ``sin(gamma)|a> + cos(gamma)|a_perp>`` in the lab (H, V) basis, ``gamma = c_angle - a_angle``, degrees in.
    """
    a = deg2rad(a_angle)
    gamma = deg2rad(c_angle - a_angle)
    return math.sin(gamma) * polarization_vector(a) + math.cos(gamma) * polarization_vector(a + math.pi / 2)


def which_path_mixture(a_angle: float, c_angle: float) -> np.ndarray:
    """
    What ν1 would be left in if photon 2's route were known: ``sin^2(gamma)|a><a| + cos^2(gamma)|a_perp><a_perp|``.
    """
    a = deg2rad(a_angle)
    gamma = deg2rad(c_angle - a_angle)
    along = polarization_vector(a)
    across = polarization_vector(a + math.pi / 2)
    return math.sin(gamma) ** 2 * np.outer(along, along.conj()) + math.cos(gamma) ** 2 * np.outer(
        across, across.conj()
    )


def _relative_phase_deg(qubit: np.ndarray, a_angle: float) -> t.Optional[float]:
    vec = principal_vector(qubit)
    a = deg2rad(a_angle)
    along = complex(polarization_vector(a).conj() @ vec)
    across = complex(polarization_vector(a + math.pi / 2).conj() @ vec)
    if min(abs(along), abs(across)) < 1e-6:
        return None
    res = rad2deg(float(np.angle(across / along)))
    return 0.0 if abs(res) < 1e-9 else res


def _evolve(config: RyffConfig, unitary: ModeUnitary) -> PureState:
    return apply(_ryff_state(config, unitary.registry), unitary)


def _analyze(config: RyffConfig, evolved: PureState) -> t.Tuple[ConditionalResult, t.Dict[str, float]]:
    results = {}
    for h2, h3 in CROSS_PATTERNS:
        pattern = cross_pattern(h2, h3)
        results[pattern.label] = pattern_probability(evolved, pattern)
    return conditional_state(evolved, cross_pattern('2', '3')), results


def run_ryff(config: RyffConfig) -> Report:
    """
    Build, evolve and condition on a single coincidence at detectors 2 and 3.

    The conditional state of ν1 is always read on path ``l`` before polarizer I. With `analyze_nu1`, the full
    circuit is evolved too, to get the probability that ν1 is transmitted by polarizer I given the coincidence.
    """
    logging.info(
        'Running ryff with a=%s, c=%s, %s, %s photons',
        config.a_angle,
        config.c_angle,
        config.bs_convention,
        config.tags,
    )
    registry = _ryff_registry(config, False)
    evolved = _evolve(config, _ryff_circuit(config, registry, False).compile())
    result, patterns = _analyze(config, evolved)

    qubit = result.conditional.polarization_qubit()
    target = predicted_nu1(config.a_angle, config.c_angle)
    mixture = which_path_mixture(config.a_angle, config.c_angle)

    nu1_angle_deg = None
    reason = None
    try:
        nu1_angle_deg = rad2deg(polarization_angle(qubit))
    except AnalysisError as e:
        reason = str(e)

    transmission = transmission_eq7 = None
    if config.analyze_nu1:
        full_registry = _ryff_registry(config, True)
        full = _evolve(config, _ryff_circuit(config, full_registry, True).compile())
        coinc = cross_pattern('2', '3', undetected_paths=())
        transmitted = DetectionPattern.create({**dict(coinc.counts), '1': 1})
        transmission = pattern_probability(full, transmitted) / pattern_probability(full, coinc)
        steered = config.a_angle + 90 - config.gamma_deg
        transmission_eq7 = math.cos(deg2rad(steered - config.b)) ** 2

    return Report(
        config=config,
        p_coinc=result.probability,
        patterns=patterns,
        conditional=qubit,
        fidelity_eq7=fidelity(qubit, target),
        purity=purity(qubit),
        nu1_angle_deg=nu1_angle_deg,
        nu1_angle_reason=reason,
        relative_phase_deg=_relative_phase_deg(qubit, config.a_angle),
        trace_distance_which_path=trace_distance(qubit, mixture),
        fidelity_which_path=state_fidelity(qubit, mixture),
        nu1_transmission=transmission,
        nu1_transmission_eq7=transmission_eq7,
    )


def all_coincidences(config: RyffConfig) -> t.Dict[str, ConditionalResult]:
    """
    Conditional states of ν1 for the four cross coincidences, keyed ``2,3``, ``2,3x``, ``2x,3``, ``2x,3x``.
    """
    registry = _ryff_registry(config, False)
    evolved = _evolve(config, _ryff_circuit(config, registry, False).compile())
    return {f'{h2},{h3}': conditional_state(evolved, cross_pattern(h2, h3)) for h2, h3 in CROSS_PATTERNS}


def _sweep_row(config: RyffConfig, unitary: ModeUnitary) -> SweepRow:
    result = conditional_state(_evolve(config, unitary), cross_pattern('2', '3'))
    qubit = result.conditional.polarization_qubit()
    try:
        angle = rad2deg(polarization_angle(qubit))
    except AnalysisError:
        angle = None

    return SweepRow(
        c_deg=config.c_angle,
        p_coinc=result.probability,
        fidelity_eq7=fidelity(qubit, predicted_nu1(config.a_angle, config.c_angle)),
        purity=purity(qubit),
        nu1_angle_deg=angle,
    )


def _sweep_chunk(config: RyffConfig, grid: t.Sequence[float]) -> t.List[SweepRow]:
    # the circuit does not depend on c
    unitary = _ryff_circuit(config, _ryff_registry(config, False), False).compile()
    rows = []
    for c in grid:
        point = RyffConfig(
            a_angle=config.a_angle,
            c_angle=c,
            bs_convention=config.bs_convention,
            tags=config.tags,
            pol_iii_axis=config.pol_iii_axis,
        )
        rows.append(_sweep_row(point, unitary))
    return rows


def sweep_c(config: RyffConfig, grid: t.Iterable[float], jobs: int = 1) -> t.List[SweepRow]:
    """
    Run the steering experiment for every third-photon angle in `grid` (degrees), everything else from `config`.

    Args:
        config: base configuration. `c_angle`, `b_angle` and `analyze_nu1` are ignored
        grid: c angles in degrees
        jobs: worker processes. Rows always follow the order of `grid`

    Returns:
        one row per grid point
    """
    grid = [finite_float(c, 'c grid value') for c in grid]
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigurationError(f'jobs should be a positive integer, got {jobs!r}')

    logging.info('Sweeping c over %s point(s) with %s job(s)', len(grid), jobs)
    if jobs == 1 or len(grid) < 2:
        return _sweep_chunk(config, grid)

    size = math.ceil(len(grid) / jobs)
    chunks = [grid[i : i + size] for i in range(0, len(grid), size)]
    with _ctx.Pool(min(jobs, len(chunks))) as pool:
        parts = pool.starmap(_sweep_chunk, [(config, chunk) for chunk in chunks])

    return [row for part in parts for row in part]


def sweep_grid(start: float, stop: float, step: float) -> t.List[float]:
    """
    Inclusive grid ``start, start + step, ...`` up to `stop`.

    Raises:
        ConfigurationError: ``start > stop`` or non-positive `step`
    """
    start = finite_float(start, 'from')
    stop = finite_float(stop, 'to')
    step = finite_float(step, 'step')
    if start > stop:
        raise ConfigurationError(f'from should not exceed to, got {start} > {stop}')
    if step <= 0:
        raise ConfigurationError(f'step should be positive, got {step}')

    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


########
# CHSH #
########
@dataclass(frozen=True)
class ChshConfig:
    """Analyzer angles in degrees: `a1`, `a2` on path ``l``, `b1`, `b2` on path ``m``."""

    a1: float = 0.0
    a2: float = 45.0
    b1: float = 22.5
    b2: float = 67.5

    def __post_init__(self):
        for name in ('a1', 'a2', 'b1', 'b2'):
            object.__setattr__(self, name, finite_float(getattr(self, name), name))

    def settings(self) -> t.List[t.Tuple[str, float, float]]:
        return [
            ('a1,b1', self.a1, self.b1),
            ('a1,b2', self.a1, self.b2),
            ('a2,b1', self.a2, self.b1),
            ('a2,b2', self.a2, self.b2),
        ]


@dataclass(frozen=True)
class ChshResult:
    """
    Attributes:
        s_value (float): ``E(a1,b1) - E(a1,b2) + E(a2,b1) + E(a2,b2)``
        correlations (dict[str, float]): per-setting correlation, keyed ``a1,b1`` ...
        sigmas (dict[str, float]): per-setting binomial standard error. Empty for exact results
        shots (int | None): shots per setting, ``None`` for exact results
    """

    config: ChshConfig
    s_value: float
    correlations: t.Dict[str, float]
    sigmas: t.Dict[str, float] = field(default_factory=dict)
    shots: t.Optional[int] = None

    def to_dict(self) -> t.Dict[str, t.Any]:
        res = {
            'experiment': 'chsh',
            'angles_deg': {'a1': self.config.a1, 'a2': self.config.a2, 'b1': self.config.b1, 'b2': self.config.b2},
            'S': self.s_value,
            'correlations': dict(self.correlations),
            'tsirelson_bound': 2 * math.sqrt(2),
        }
        if self.shots is not None:
            res['shots'] = self.shots
            res['sigmas'] = dict(self.sigmas)
        return res


def _chsh_combine(correlations: t.Mapping[str, float]) -> float:
    return correlations['a1,b1'] - correlations['a1,b2'] + correlations['a2,b1'] + correlations['a2,b2']


def _analyzed_pair(alpha: float, beta: float) -> PureState:
    registry = ModeRegistry.build(CHSH_PATHS)
    circuit = Circuit(
        registry,
        (
            PolarizingBeamSplitter('l', deg2rad(alpha), 'lt', 'lr'),
            PolarizingBeamSplitter('m', deg2rad(beta), 'mt', 'mr'),
        ),
        sources=('l', 'm'),
    )
    return apply(epr_pair_state(registry, 'l', 'm', 0.0), circuit.compile())


def correlation(alpha: float, beta: float) -> float:
    """``E = P_tt + P_rr - P_tr - P_rt`` of the entangled pair through two PBS analyzers (degrees)."""
    state = _analyzed_pair(alpha, beta)
    res = 0.0
    for lo, mo in (('lt', 'mt'), ('lr', 'mr'), ('lt', 'mr'), ('lr', 'mt')):
        sign = 1 if (lo == 'lt') == (mo == 'mt') else -1
        res += sign * pattern_probability(state, DetectionPattern.create({lo: 1, mo: 1}))
    return res


def chsh(a1: float, a2: float, b1: float, b2: float) -> ChshResult:
    """
    Exact CHSH value from pattern probabilities.
    """
    config = ChshConfig(a1, a2, b1, b2)
    correlations = {key: correlation(alpha, beta) for key, alpha, beta in config.settings()}
    return ChshResult(config, _chsh_combine(correlations), correlations)


def _sampled_correlation(counts: t.Mapping[EventRecord, int]) -> float:
    total = sum(counts.values())
    res = 0
    for record, n in counts.items():
        same = record.path_count('lt') == record.path_count('mt')
        res += n if same else -n
    return res / total


def chsh_sampled(a1: float, a2: float, b1: float, b2: float, shots: int, seed: int = 0) -> ChshResult:
    """
    Monte Carlo CHSH estimate, `shots` detector records per setting. Setting ``k`` (in ``a1,b1``, ``a1,b2``,
    ``a2,b1``, ``a2,b2`` order) samples with seed ``seed + k`` (mod 2**64).
    """
    if not isinstance(shots, int) or shots < 1:
        raise ConfigurationError(f'shots should be a positive integer, got {shots!r}')

    config = ChshConfig(a1, a2, b1, b2)
    correlations = {}
    sigmas = {}
    for k, (key, alpha, beta) in enumerate(config.settings()):
        counts = sample_events(_analyzed_pair(alpha, beta), shots, (seed + k) % 2**64)
        correlations[key] = _sampled_correlation(counts)
        sigmas[key] = math.sqrt(max(0.0, 1 - correlations[key] ** 2) / shots)

    return ChshResult(config, _chsh_combine(correlations), correlations, sigmas, shots)


#######
# HOM #
#######
@dataclass(frozen=True)
class HomConfig:
    transmissivity: float = 0.5
    tags: str = IDENTICAL
    bs_convention: str = SYMMETRIC

    def __post_init__(self):
        value = finite_float(self.transmissivity, 'transmissivity')
        if not 0 <= value <= 1:
            raise ConfigurationError(f'transmissivity should be in [0, 1], got {value}')
        object.__setattr__(self, 'transmissivity', value)
        _check_choice(self.tags, 'tags', TAG_MODES)
        _check_choice(self.bs_convention, 'bs_convention', BS_CONVENTIONS)


@dataclass(frozen=True)
class HomReport:
    config: HomConfig
    p_coinc: float
    p_coinc_expected: float

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            'experiment': 'hom',
            'config': {
                'T': self.config.transmissivity,
                'tags': self.config.tags,
                'bs_convention': self.config.bs_convention,
            },
            'p_coinc': self.p_coinc,
            'p_bunch': 1 - self.p_coinc,
            'p_coinc_expected': self.p_coinc_expected,
        }


def run_hom(config: HomConfig) -> HomReport:
    """
    Two H-polarized photons meet at one beam splitter; coincidence probability across its two outputs.
    """
    tags = (0, 1) if config.tags == DISTINCT else (0,)
    registry = ModeRegistry.build(HOM_PATHS, tags)
    second_tag = 1 if config.tags == DISTINCT else 0
    state = tensor(single_photon_state(registry, 'h1', 0.0), single_photon_state(registry, 'h2', 0.0, second_tag))
    circuit = Circuit(
        registry,
        (BeamSplitter(('h1', 'h2'), ('o1', 'o2'), config.transmissivity, config.bs_convention),),
        sources=('h1', 'h2'),
    )
    evolved = apply(state, circuit.compile())
    p_coinc = pattern_probability(evolved, DetectionPattern.create({'o1': 1, 'o2': 1}))

    T = config.transmissivity
    expected = (2 * T - 1) ** 2 if config.tags == IDENTICAL else T**2 + (1 - T) ** 2
    logging.info('HOM coincidence probability %.6g at T=%s with %s photons', p_coinc, T, config.tags)
    return HomReport(config, p_coinc, expected)
