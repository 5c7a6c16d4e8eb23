import json

import pytest

from fockpath.runspec import Angles, RunSpec, SweepSpec, parse_spec, serialize_spec
from fockpath.utils import SpecError


def test_defaults():
    spec = parse_spec('{"experiment": "ryff", "angles": {"a": 0, "c": 45}}')

    assert spec.angles == Angles(a=0, b=0, c=45)
    assert spec.bs_convention == 'symmetric'
    assert spec.tags == 'identical'
    assert spec.task == 'exact'
    assert spec.seed == 0
    assert spec.samples == 100000
    assert spec.format == 'json'
    assert spec.out is None
    assert spec.pol_iii_axis is None
    assert not spec.analyze_nu1


def test_sweep_plan():
    spec = parse_spec('{"experiment":"ryff","sweep":{"param":"c","from":0,"to":180,"step":5},"task":"sweep"}')

    assert spec.sweep == SweepSpec(start=0, stop=180, step=5)
    plan = spec.sweep.plan()
    assert len(plan) == 37
    assert plan[0] == 0
    assert plan[-1] == 180


@pytest.mark.parametrize(
    'text, message',
    [
        ('{"experiment":"ryff","angles":{"a":"x"}}', 'angles.a: expected number'),
        ('{"experiment":"ryff","angles":{"a":true}}', 'angles.a: expected number'),
        ('{"experiment":"ryff","angles":{"d":1}}', 'angles.d: unknown key'),
        ('{"experiment":"ryff","colour":1}', 'colour: unknown key'),
        ('{"angles":{}}', 'experiment: required key'),
        ('{"experiment":"laser"}', 'experiment: expected one of'),
        ('{"experiment":"ryff","task":"sweep"}', 'sweep: required when task is sweep'),
        ('{"experiment":"ryff","format":"csv"}', 'format: csv output is only available for the sweep task'),
        ('{"experiment":"ryff","samples":0}', 'samples: expected integer >= 1'),
        ('{"experiment":"ryff","seed":-1}', 'seed: expected integer in'),
        ('{"experiment":"ryff","seed":18446744073709551616}', 'seed: expected integer in'),
        ('{"experiment":"hom","task":"sample"}', 'task: task \'sample\' is not available'),
        ('{"experiment":"ryff","task":"sweep","sweep":{"from":10,"to":0,"step":1}}', 'sweep.from: from (10)'),
        ('{"experiment":"ryff","task":"sweep","sweep":{"from":0,"to":10,"step":0}}', 'sweep.step: expected positive'),
        ('{"experiment":"ryff","task":"sweep","sweep":{"from":0,"to":10}}', 'sweep.step: required key'),
        ('{"experiment":"ryff","task":"sweep","sweep":{"param":"a","from":0,"to":1,"step":1}}', 'sweep.param'),
        ('{"experiment":"hom","hom":{"T":1.5}}', 'hom.T: expected number in [0, 1]'),
        ('{"experiment":"custom"}', 'custom: required when experiment is custom'),
        ('{"experiment":"custom","custom":{"sources":[]}}', 'custom.sources: at least one source'),
        (
            '{"experiment":"custom","custom":{"sources":[{"type":"single","path":"a"}],"elements":[{"type":"bs"}]}}',
            'custom.elements[0].inputs: expected array',
        ),
        (
            '{"experiment":"custom","custom":{"sources":[{"type":"epr","paths":["a","a"]}]}}',
            'custom.sources[0].paths: EPR pair paths should differ',
        ),
        (
            '{"experiment":"custom","custom":{"sources":[{"type":"single","path":"a"}],'
            '"pattern":{"counts":{"a":1},"undetected":["a"]}}}',
            'custom.pattern: ',
        ),
        ('{"experiment":"ryff","angles":{"a":' + '9' * 400 + '}}', 'angles.a: expected finite number'),
        ('[1, 2]', '<root>: expected object'),
    ],
)
def test_field_errors(text, message):
    with pytest.raises(SpecError) as e:
        parse_spec(text)

    assert str(e.value).startswith(message)


def test_syntax_error_position():
    with pytest.raises(SpecError) as e:
        parse_spec('{\n  "experiment": "ryff",\n  "angles": {"a": 0 "c": 45}\n}\n')

    assert e.value.line == 3
    assert e.value.column == 21
    assert str(e.value).startswith('line 3, column 21: ')


def test_invalid_utf8():
    with pytest.raises(SpecError, match='UTF-8'):
        parse_spec(b'{"experiment": "\xff"}')


@pytest.mark.parametrize(
    'text',
    [
        '{"experiment": "ryff"}',
        '{"experiment": "ryff", "angles": {"a": 12.5, "b": 3, "c": 99}, "bs_convention": "real", "tags": "distinct",'
        ' "analyze_nu1": true, "pol_iii_axis": 17, "seed": 18446744073709551615, "out": "report.json"}',
        '{"experiment": "ryff", "task": "sweep", "format": "csv", "sweep": {"from": 0, "to": 90, "step": 0.5}}',
        '{"experiment": "chsh", "task": "sample", "samples": 10, "chsh": {"a1": 1, "a2": 2, "b1": 3, "b2": 4}}',
        '{"experiment": "hom", "hom": {"T": 0.25, "tags": "distinct"}}',
        '{"experiment": "custom", "custom": {"sources": [{"type": "epr", "paths": ["l", "m"], "a": 10, "tag": 1},'
        ' {"type": "single", "path": "q", "pol": 30}], "elements": [{"type": "bs", "inputs": ["m", "q"],'
        ' "outputs": ["o1", "o2"], "T": 0.3, "convention": "real"}, {"type": "rotator", "path": "l", "angle": 5},'
        ' {"type": "phase", "path": "l", "pol": "V", "phase": 90}, {"type": "pbs", "in": "l", "axis": 45,'
        ' "transmit": "lt", "reflect": "lr"}], "pattern": {"counts": {"o1": 1, "o2": 1}, "undetected": ["lt"],'
        ' "filters": {"o1": 30}}}}',
    ],
)
def test_round_trip(text):
    spec = parse_spec(text)
    serialized = serialize_spec(spec)

    assert parse_spec(serialized) == spec
    assert serialize_spec(parse_spec(serialized)) == serialized
    assert list(json.loads(serialized)) == sorted(json.loads(serialized))


def test_direct_construction_is_validated():
    with pytest.raises(SpecError, match='format'):
        RunSpec(experiment='chsh', format='csv')
    with pytest.raises(SpecError, match='experiment'):
        RunSpec(experiment='laser')


def test_custom_paths_and_tags():
    spec = parse_spec(
        '{"experiment": "custom", "custom": {"sources": [{"type": "single", "path": "b", "tag": 2},'
        ' {"type": "single", "path": "a"}], "elements": [{"type": "bs", "inputs": ["a", "b"],'
        ' "outputs": ["c", "d"]}]}}'
    )

    assert spec.custom.paths == ('b', 'a', 'c', 'd')
    assert spec.custom.tags == (0, 2)
    assert spec.custom.elements[0].value == 0.5
