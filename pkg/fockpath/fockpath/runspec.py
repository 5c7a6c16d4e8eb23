"""
Run specifications: the JSON document the command line executes.

Every validation failure raises :class:`~fockpath.utils.SpecError` carrying the dotted path of the offending field,
e.g. ``angles.a: expected number``; JSON syntax errors carry the line and column instead.
"""

import json
import math
import typing as t
from dataclasses import dataclass, field

from .elements import BeamSplitter, Element, PhaseShifter, PolarizationRotator, PolarizingBeamSplitter
from .experiments import ChshConfig, HomConfig, RyffConfig, sweep_grid
from .measurement import DetectionPattern
from .utils import (
    BS_CONVENTIONS,
    IDENTICAL,
    POLARIZATIONS,
    SYMMETRIC,
    TAG_MODES,
    ConfigurationError,
    SpecError,
    deg2rad,
)

EXPERIMENTS = ('ryff', 'chsh', 'hom', 'custom')
TASKS = ('exact', 'sample', 'sweep', 'all-coincidences')
FORMATS = ('json', 'csv')
EXPERIMENT_TASKS = {
    'ryff': ('exact', 'sample', 'sweep', 'all-coincidences'),
    'chsh': ('exact', 'sample'),
    'hom': ('exact',),
    'custom': ('exact', 'sample'),
}
SOURCE_TYPES = ('single', 'epr')
ELEMENT_TYPES = ('bs', 'pbs', 'rotator', 'phase')
MAX_SEED = 2**64


#################
# Value readers #
#################
def _join(path: str, key: t.Union[str, int]) -> str:
    if isinstance(key, int):
        return f'{path}[{key}]'
    return f'{path}.{key}' if path else key


def _object(value: t.Any, path: str, allowed: t.Iterable[str]) -> t.Dict[str, t.Any]:
    if not isinstance(value, dict):
        raise SpecError('expected object', path or '<root>')
    for key in value:
        if key not in allowed:
            raise SpecError('unknown key', _join(path, key))
    return value


def _mapping(value: t.Any, path: str) -> t.Dict[str, t.Any]:
    if not isinstance(value, dict):
        raise SpecError('expected object', path)
    return value


def _number(value: t.Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError('expected number', path)
    try:
        number = float(value)
    except OverflowError:
        raise SpecError('expected finite number', path)
    if not math.isfinite(number):
        raise SpecError('expected finite number', path)
    return number


def _integer(value: t.Any, path: str, minimum: int = 0, maximum: t.Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError('expected integer', path)
    if value < minimum or (maximum is not None and value >= maximum):
        bound = f'in [{minimum}, {maximum})' if maximum is not None else f'>= {minimum}'
        raise SpecError(f'expected integer {bound}, got {value}', path)
    return value


def _string(value: t.Any, path: str, choices: t.Optional[t.Sequence[str]] = None) -> str:
    if not isinstance(value, str):
        raise SpecError('expected string', path)
    if choices is not None and value not in choices:
        raise SpecError(f'expected one of {", ".join(choices)}, got {value!r}', path)
    return value


def _boolean(value: t.Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise SpecError('expected boolean', path)
    return value


def _list(value: t.Any, path: str) -> t.List[t.Any]:
    if not isinstance(value, list):
        raise SpecError('expected array', path)
    return value


def _paths(value: t.Any, path: str, size: t.Optional[int] = None) -> t.Tuple[str, ...]:
    items = tuple(_string(v, _join(path, i)) for i, v in enumerate(_list(value, path)))
    if size is not None and len(items) != size:
        raise SpecError(f'expected {size} path names, got {len(items)}', path)
    return items


#########
# Model #
#########
@dataclass(frozen=True)
class Angles:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0


@dataclass(frozen=True)
class ChshAngles:
    a1: float = 0.0
    a2: float = 45.0
    b1: float = 22.5
    b2: float = 67.5


@dataclass(frozen=True)
class SweepSpec:
    start: float
    stop: float
    step: float
    param: str = 'c'

    def plan(self) -> t.List[float]:
        return sweep_grid(self.start, self.stop, self.step)


@dataclass(frozen=True)
class HomSpec:
    T: float = 0.5
    tags: str = IDENTICAL


@dataclass(frozen=True)
class SourceSpec:
    """``single``: one photon on ``paths[0]`` polarized at `pol` degrees. ``epr``: a pair on both paths."""

    type: str
    paths: t.Tuple[str, ...]
    pol: float = 0.0
    tag: int = 0


@dataclass(frozen=True)
class ElementSpec:
    """
    Attributes:
        type (str): ``bs``, ``pbs``, ``rotator`` or ``phase``
        inputs (tuple[str, ...]): input paths
        outputs (tuple[str, ...]): output paths (``(transmit, reflect)`` for ``pbs``)
        value (float): ``T`` for ``bs``, axis for ``pbs``, angle for ``rotator``, phase for ``phase`` (degrees)
        convention (str | None): ``bs`` only, defaults to the run's convention
        pol (str | None): ``phase`` only
    """

    type: str
    inputs: t.Tuple[str, ...]
    outputs: t.Tuple[str, ...]
    value: float
    convention: t.Optional[str] = None
    pol: t.Optional[str] = None

    def to_element(self, default_convention: str) -> Element:
        if self.type == 'bs':
            return BeamSplitter(self.inputs, self.outputs, self.value, self.convention or default_convention)
        elif self.type == 'pbs':
            return PolarizingBeamSplitter(self.inputs[0], deg2rad(self.value), self.outputs[0], self.outputs[1])
        elif self.type == 'rotator':
            return PolarizationRotator(self.inputs[0], deg2rad(self.value))
        else:
            return PhaseShifter(self.inputs[0], self.pol, deg2rad(self.value))


@dataclass(frozen=True)
class PatternSpec:
    counts: t.Tuple[t.Tuple[str, int], ...]
    undetected: t.Tuple[str, ...] = ()
    filters: t.Tuple[t.Tuple[str, float], ...] = ()

    def to_pattern(self) -> DetectionPattern:
        return DetectionPattern.create(
            dict(self.counts),
            undetected_paths=self.undetected,
            filters={p: deg2rad(a) for p, a in self.filters},
        )


@dataclass(frozen=True)
class CustomCircuitSpec:
    sources: t.Tuple[SourceSpec, ...]
    elements: t.Tuple[ElementSpec, ...] = ()
    pattern: t.Optional[PatternSpec] = None

    @property
    def paths(self) -> t.Tuple[str, ...]:
        """Every path named, in order of first appearance."""
        res: t.Dict[str, None] = {}
        for source in self.sources:
            res.update(dict.fromkeys(source.paths))
        for element in self.elements:
            res.update(dict.fromkeys(element.inputs))
            res.update(dict.fromkeys(element.outputs))
        if self.pattern:
            res.update(dict.fromkeys(p for p, _ in self.pattern.counts))
            res.update(dict.fromkeys(self.pattern.undetected))
        return tuple(res)

    @property
    def tags(self) -> t.Tuple[int, ...]:
        return tuple(sorted({s.tag for s in self.sources}))


@dataclass(frozen=True)
class RunSpec:
    experiment: str
    angles: Angles = field(default_factory=Angles)
    bs_convention: str = SYMMETRIC
    tags: str = IDENTICAL
    task: str = 'exact'
    sweep: t.Optional[SweepSpec] = None
    samples: int = 100000
    seed: int = 0
    format: str = 'json'
    out: t.Optional[str] = None
    chsh: ChshAngles = field(default_factory=ChshAngles)
    analyze_nu1: bool = False
    pol_iii_axis: t.Optional[float] = None
    hom: HomSpec = field(default_factory=HomSpec)
    custom: t.Optional[CustomCircuitSpec] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(f'expected one of {", ".join(EXPERIMENTS)}, got {self.experiment!r}', 'experiment')
        if self.task not in EXPERIMENT_TASKS[self.experiment]:
            raise SpecError(
                f'task {self.task!r} is not available for experiment {self.experiment!r}. '
                f'Valid tasks: {", ".join(EXPERIMENT_TASKS[self.experiment])}',
                'task',
            )
        if self.task == 'sweep' and self.sweep is None:
            raise SpecError('required when task is sweep', 'sweep')
        if self.format not in FORMATS:
            raise SpecError(f'expected one of {", ".join(FORMATS)}, got {self.format!r}', 'format')
        if self.format == 'csv' and self.task != 'sweep':
            raise SpecError('csv output is only available for the sweep task', 'format')
        if self.experiment == 'custom' and self.custom is None:
            raise SpecError('required when experiment is custom', 'custom')
        if not 0 <= self.seed < MAX_SEED:
            raise SpecError(f'expected integer in [0, {MAX_SEED}), got {self.seed}', 'seed')
        if self.samples < 1:
            raise SpecError(f'expected integer >= 1, got {self.samples}', 'samples')

    def ryff_config(self) -> RyffConfig:
        # b only matters with polarizer I; a non-default b without it is reported as unused
        b_angle = self.angles.b if self.analyze_nu1 or self.angles.b != 0 else None
        return RyffConfig(
            a_angle=self.angles.a,
            b_angle=b_angle,
            c_angle=self.angles.c,
            bs_convention=self.bs_convention,
            tags=self.tags,
            pol_iii_axis=self.pol_iii_axis,
            analyze_nu1=self.analyze_nu1,
        )

    def chsh_config(self) -> ChshConfig:
        return ChshConfig(self.chsh.a1, self.chsh.a2, self.chsh.b1, self.chsh.b2)

    def hom_config(self) -> HomConfig:
        return HomConfig(self.hom.T, self.hom.tags, self.bs_convention)


###########
# Parsing #
###########
def _parse_angles(value: t.Any, path: str) -> Angles:
    obj = _object(value, path, ('a', 'b', 'c'))
    return Angles(**{k: _number(v, _join(path, k)) for k, v in obj.items()})


def _parse_chsh(value: t.Any, path: str) -> ChshAngles:
    obj = _object(value, path, ('a1', 'a2', 'b1', 'b2'))
    return ChshAngles(**{k: _number(v, _join(path, k)) for k, v in obj.items()})


def _parse_sweep(value: t.Any, path: str) -> SweepSpec:
    obj = _object(value, path, ('param', 'from', 'to', 'step'))
    for key in ('from', 'to', 'step'):
        if key not in obj:
            raise SpecError('required key', _join(path, key))

    res = SweepSpec(
        start=_number(obj['from'], _join(path, 'from')),
        stop=_number(obj['to'], _join(path, 'to')),
        step=_number(obj['step'], _join(path, 'step')),
        param=_string(obj.get('param', 'c'), _join(path, 'param'), ('c',)),
    )
    if res.start > res.stop:
        raise SpecError(f'from ({res.start:g}) should not exceed to ({res.stop:g})', _join(path, 'from'))
    if res.step <= 0:
        raise SpecError(f'expected positive number, got {res.step:g}', _join(path, 'step'))
    return res


def _parse_hom(value: t.Any, path: str) -> HomSpec:
    obj = _object(value, path, ('T', 'tags'))
    res = HomSpec(
        T=_number(obj.get('T', 0.5), _join(path, 'T')),
        tags=_string(obj.get('tags', IDENTICAL), _join(path, 'tags'), TAG_MODES),
    )
    if not 0 <= res.T <= 1:
        raise SpecError(f'expected number in [0, 1], got {res.T:g}', _join(path, 'T'))
    return res


def _parse_source(value: t.Any, path: str) -> SourceSpec:
    obj = _object(value, path, ('type', 'path', 'paths', 'pol', 'a', 'tag'))
    kind = _string(obj.get('type'), _join(path, 'type'), SOURCE_TYPES)
    tag = _integer(obj.get('tag', 0), _join(path, 'tag'))
    if kind == 'single':
        _object(obj, path, ('type', 'path', 'pol', 'tag'))
        return SourceSpec(
            kind,
            (_string(obj.get('path'), _join(path, 'path')),),
            _number(obj.get('pol', 0), _join(path, 'pol')),
            tag,
        )

    _object(obj, path, ('type', 'paths', 'a', 'tag'))
    paths = _paths(obj.get('paths'), _join(path, 'paths'), 2)
    if paths[0] == paths[1]:
        raise SpecError('EPR pair paths should differ', _join(path, 'paths'))
    return SourceSpec(kind, paths, _number(obj.get('a', 0), _join(path, 'a')), tag)


def _parse_element(value: t.Any, path: str) -> ElementSpec:
    if not isinstance(value, dict):
        raise SpecError('expected object', path)
    kind = _string(value.get('type'), _join(path, 'type'), ELEMENT_TYPES)

    if kind == 'bs':
        obj = _object(value, path, ('type', 'inputs', 'outputs', 'T', 'convention'))
        T = _number(obj.get('T', 0.5), _join(path, 'T'))
        if not 0 <= T <= 1:
            raise SpecError(f'expected number in [0, 1], got {T:g}', _join(path, 'T'))
        convention = None
        if 'convention' in obj:
            convention = _string(obj['convention'], _join(path, 'convention'), BS_CONVENTIONS)
        return ElementSpec(
            kind,
            _paths(obj.get('inputs'), _join(path, 'inputs'), 2),
            _paths(obj.get('outputs'), _join(path, 'outputs'), 2),
            T,
            convention=convention,
        )
    elif kind == 'pbs':
        obj = _object(value, path, ('type', 'in', 'axis', 'transmit', 'reflect'))
        return ElementSpec(
            kind,
            (_string(obj.get('in'), _join(path, 'in')),),
            (
                _string(obj.get('transmit'), _join(path, 'transmit')),
                _string(obj.get('reflect'), _join(path, 'reflect')),
            ),
            _number(obj.get('axis', 0), _join(path, 'axis')),
        )
    elif kind == 'rotator':
        obj = _object(value, path, ('type', 'path', 'angle'))
        target = (_string(obj.get('path'), _join(path, 'path')),)
        return ElementSpec(kind, target, target, _number(obj.get('angle', 0), _join(path, 'angle')))
    else:
        obj = _object(value, path, ('type', 'path', 'pol', 'phase'))
        target = (_string(obj.get('path'), _join(path, 'path')),)
        return ElementSpec(
            kind,
            target,
            target,
            _number(obj.get('phase', 0), _join(path, 'phase')),
            pol=_string(obj.get('pol'), _join(path, 'pol'), POLARIZATIONS),
        )


def _parse_pattern(value: t.Any, path: str) -> PatternSpec:
    obj = _object(value, path, ('counts', 'undetected', 'filters'))
    counts_path = _join(path, 'counts')
    counts = _mapping(obj.get('counts', {}), counts_path)
    filters_path = _join(path, 'filters')
    filters = _mapping(obj.get('filters', {}), filters_path)
    res = PatternSpec(
        counts=tuple((k, _integer(v, _join(counts_path, k))) for k, v in counts.items()),
        undetected=_paths(obj.get('undetected', []), _join(path, 'undetected')),
        filters=tuple((k, _number(v, _join(filters_path, k))) for k, v in filters.items()),
    )
    try:
        res.to_pattern()
    except ConfigurationError as e:
        raise SpecError(str(e), path)
    return res


def _parse_custom(value: t.Any, path: str) -> CustomCircuitSpec:
    obj = _object(value, path, ('sources', 'elements', 'pattern'))
    sources_path = _join(path, 'sources')
    elements_path = _join(path, 'elements')
    sources = tuple(
        _parse_source(v, _join(sources_path, i)) for i, v in enumerate(_list(obj.get('sources'), sources_path))
    )
    if not sources:
        raise SpecError('at least one source is required', sources_path)
    elements = tuple(
        _parse_element(v, _join(elements_path, i))
        for i, v in enumerate(_list(obj.get('elements', []), elements_path))
    )
    pattern = _parse_pattern(obj['pattern'], _join(path, 'pattern')) if obj.get('pattern') is not None else None
    return CustomCircuitSpec(sources, elements, pattern)


_TOP_LEVEL_KEYS = (
    'experiment',
    'angles',
    'bs_convention',
    'tags',
    'task',
    'sweep',
    'samples',
    'seed',
    'format',
    'out',
    'chsh',
    'analyze_nu1',
    'pol_iii_axis',
    'hom',
    'custom',
)


def spec_from_dict(data: t.Any) -> RunSpec:
    """
    Validate a decoded JSON object into a :class:`RunSpec`, filling defaults.

    Raises:
        SpecError: with the dotted path of the first offending field
    """
    obj = _object(data, '', _TOP_LEVEL_KEYS)
    if 'experiment' not in obj:
        raise SpecError('required key', 'experiment')

    kwargs: t.Dict[str, t.Any] = {'experiment': _string(obj['experiment'], 'experiment', EXPERIMENTS)}
    if 'angles' in obj:
        kwargs['angles'] = _parse_angles(obj['angles'], 'angles')
    if 'bs_convention' in obj:
        kwargs['bs_convention'] = _string(obj['bs_convention'], 'bs_convention', BS_CONVENTIONS)
    if 'tags' in obj:
        kwargs['tags'] = _string(obj['tags'], 'tags', TAG_MODES)
    if 'task' in obj:
        kwargs['task'] = _string(obj['task'], 'task', TASKS)
    if obj.get('sweep') is not None:
        kwargs['sweep'] = _parse_sweep(obj['sweep'], 'sweep')
    if 'samples' in obj:
        kwargs['samples'] = _integer(obj['samples'], 'samples', minimum=1)
    if 'seed' in obj:
        kwargs['seed'] = _integer(obj['seed'], 'seed', maximum=MAX_SEED)
    if 'format' in obj:
        kwargs['format'] = _string(obj['format'], 'format', FORMATS)
    if obj.get('out') is not None:
        kwargs['out'] = _string(obj['out'], 'out')
    if 'chsh' in obj:
        kwargs['chsh'] = _parse_chsh(obj['chsh'], 'chsh')
    if 'analyze_nu1' in obj:
        kwargs['analyze_nu1'] = _boolean(obj['analyze_nu1'], 'analyze_nu1')
    if obj.get('pol_iii_axis') is not None:
        kwargs['pol_iii_axis'] = _number(obj['pol_iii_axis'], 'pol_iii_axis')
    if 'hom' in obj:
        kwargs['hom'] = _parse_hom(obj['hom'], 'hom')
    if obj.get('custom') is not None:
        kwargs['custom'] = _parse_custom(obj['custom'], 'custom')

    return RunSpec(**kwargs)


def parse_spec(text: t.Union[str, bytes]) -> RunSpec:
    """
    Parse run-spec JSON text.

    Raises:
        SpecError: syntax errors with line and column, validation errors with the field path
    """
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            raise SpecError(f'spec is not valid UTF-8: {e}')

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(e.msg, line=e.lineno, column=e.colno)

    return spec_from_dict(data)


#################
# Serialization #
#################
def _source_to_dict(source: SourceSpec) -> t.Dict[str, t.Any]:
    if source.type == 'single':
        return {'type': 'single', 'path': source.paths[0], 'pol': source.pol, 'tag': source.tag}
    return {'type': 'epr', 'paths': list(source.paths), 'a': source.pol, 'tag': source.tag}


def _element_to_dict(element: ElementSpec) -> t.Dict[str, t.Any]:
    if element.type == 'bs':
        res = {'type': 'bs', 'inputs': list(element.inputs), 'outputs': list(element.outputs), 'T': element.value}
        if element.convention is not None:
            res['convention'] = element.convention
        return res
    elif element.type == 'pbs':
        return {
            'type': 'pbs',
            'in': element.inputs[0],
            'axis': element.value,
            'transmit': element.outputs[0],
            'reflect': element.outputs[1],
        }
    elif element.type == 'rotator':
        return {'type': 'rotator', 'path': element.inputs[0], 'angle': element.value}
    return {'type': 'phase', 'path': element.inputs[0], 'pol': element.pol, 'phase': element.value}


def spec_to_dict(spec: RunSpec) -> t.Dict[str, t.Any]:
    res: t.Dict[str, t.Any] = {
        'experiment': spec.experiment,
        'angles': {'a': spec.angles.a, 'b': spec.angles.b, 'c': spec.angles.c},
        'bs_convention': spec.bs_convention,
        'tags': spec.tags,
        'task': spec.task,
        'sweep': None,
        'samples': spec.samples,
        'seed': spec.seed,
        'format': spec.format,
        'out': spec.out,
        'chsh': {'a1': spec.chsh.a1, 'a2': spec.chsh.a2, 'b1': spec.chsh.b1, 'b2': spec.chsh.b2},
        'analyze_nu1': spec.analyze_nu1,
        'pol_iii_axis': spec.pol_iii_axis,
        'hom': {'T': spec.hom.T, 'tags': spec.hom.tags},
        'custom': None,
    }
    if spec.sweep is not None:
        res['sweep'] = {
            'param': spec.sweep.param,
            'from': spec.sweep.start,
            'to': spec.sweep.stop,
            'step': spec.sweep.step,
        }
    if spec.custom is not None:
        custom = {
            'sources': [_source_to_dict(s) for s in spec.custom.sources],
            'elements': [_element_to_dict(e) for e in spec.custom.elements],
            'pattern': None,
        }
        if spec.custom.pattern is not None:
            custom['pattern'] = {
                'counts': dict(spec.custom.pattern.counts),
                'undetected': list(spec.custom.pattern.undetected),
                'filters': dict(spec.custom.pattern.filters),
            }
        res['custom'] = custom
    return res


def serialize_spec(spec: RunSpec) -> str:
    """Canonical JSON text of `spec`, keys sorted, every default written out."""
    return json.dumps(spec_to_dict(spec), sort_keys=True, indent=2) + '\n'
