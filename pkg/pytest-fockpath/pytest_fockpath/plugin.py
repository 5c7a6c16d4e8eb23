import argparse
import functools
import logging
import sys
import typing as t
from dataclasses import dataclass

import pexpect
import pytest
from _pytest.config import Config
from _pytest.fixtures import FixtureRequest
from scipy.stats import unitary_group

from fockpath import __version__ as fockpath_version
from fockpath.elements import ModeUnitary
from fockpath.experiments import Report, RyffConfig, run_ryff
from fockpath.fock import ModeRegistry
from fockpath.utils import BS_CONVENTIONS, TAG_MODES, to_list

_SETTING_COUNT = 1


def pytest_addoption(parser):
    base_group = parser.getgroup('fockpath')
    base_group.addoption(
        '--setting-count',
        default=1,
        type=_gte_one_int,
        help='Use this argument when one test case compares several simulator settings. '
        'All setting fixtures would be tuples when this value is more than 1. (Default: 1)\n'
        'Use separator "|" for the other fockpath options to give each setting its own value.\n'
        'For example:\n'
        '"--photon-tags=identical|distinct --setting-count=2" for a steering run and its control.\n'
        'A single value is duplicated by the "setting-count" amount. '
        'It would raise an exception when an option has multi values but the amount is different.',
    )

    # supports parametrization
    base_group.addoption(
        '--bs-convention',
        help=f'Beam-splitter phase convention, one of {", ".join(BS_CONVENTIONS)}. (Default: "symmetric")',
    )
    base_group.addoption(
        '--photon-tags',
        help=f'Photon distinguishability, one of {", ".join(TAG_MODES)}. (Default: "identical")',
    )
    base_group.addoption('--a-angle', help='Axis of polarizers II and III, in degrees. (Default: 0)')
    base_group.addoption('--c-angle', help='Polarization of the third photon, in degrees. (Default: 45)')
    base_group.addoption('--sim-seed', help='Seed for random unitaries and sampled runs. (Default: 0)')
    base_group.addoption(
        '--angle-step',
        help='Grid step in degrees for the (a, c) acceptance sweeps. (Default: 1.0)',
    )
    base_group.addoption(
        '--cli-timeout',
        help='Seconds to wait for one fockpath command line run. (Default: 120)',
    )


def _gte_one_int(v) -> int:
    try:
        v = int(v)
    except Exception:
        pass  # deal with it later
    else:
        if v >= 1:
            return v

    raise argparse.ArgumentTypeError('should be a integer greater or equal to 1')


def parse_multi_setting_args(count: int, s: t.Any, convert: t.Callable[[str], t.Any] = str) -> t.Any:
    """
    Parse a multi-setting argument by the following rules:

    - When the value is a string, split it by `|` and convert each item.
    - If the value only has one item, duplicate it by the "count" amount.
    - If the value item amount is the same as the "count" amount, return it directly.

    Args:
        count: setting count
        s: argument value
        convert: converter applied to each string item

    Returns:
        The converted value itself, if `count` is 1.
        The tuple of converted values, if `count` is greater than 1.

    Raises:
        ValueError: when an option has multi values but the amount is different from the `count` amount.
    """
    if isinstance(s, str):
        res = [convert(item.strip()) for item in s.split('|')]
    else:
        res = [s]

    if len(res) == 1:
        if count == 1:
            return res[0]
        return tuple(res * count)

    if len(res) != count:
        raise ValueError('The option has multi values but the amount is different from the "setting-count" amount.')
    return tuple(res)


def multi_setting_argument(convert: t.Callable[[str], t.Any] = str):
    """
    Parse the fixture return value according to the `setting-count` amount.
    """

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            return parse_multi_setting_args(_SETTING_COUNT, func(*args, **kwargs), convert)

        return wrapper

    return decorator


def _request_param_or_config_option_or_default(request: FixtureRequest, option: str, default: t.Any = None):
    """
    Return as the following sequence:
    1. Function parametrized value
    2. CLI option value
    3. default value

    Zero angles are valid values, so only `None` falls through.
    """
    param = getattr(request, 'param', None)
    if param is not None:
        return param

    value = request.config.getoption(option, None)
    if value is not None:
        return value

    return default


@pytest.fixture(autouse=True)
def setting_count(request: FixtureRequest) -> int:
    global _SETTING_COUNT
    _SETTING_COUNT = request.config.getoption('setting_count', 1)
    return _SETTING_COUNT


######################
# Simulator settings #
######################
@pytest.fixture
@multi_setting_argument()
def bs_convention(request: FixtureRequest) -> t.Union[str, t.Tuple[str, ...]]:
    """Enable parametrization for the same cli option"""
    return _request_param_or_config_option_or_default(request, 'bs_convention', 'symmetric')


@pytest.fixture
@multi_setting_argument()
def photon_tags(request: FixtureRequest) -> t.Union[str, t.Tuple[str, ...]]:
    """Enable parametrization for the same cli option"""
    return _request_param_or_config_option_or_default(request, 'photon_tags', 'identical')


@pytest.fixture
@multi_setting_argument(float)
def a_angle(request: FixtureRequest) -> t.Union[float, t.Tuple[float, ...]]:
    """Enable parametrization for the same cli option"""
    return _request_param_or_config_option_or_default(request, 'a_angle', 0.0)


@pytest.fixture
@multi_setting_argument(float)
def c_angle(request: FixtureRequest) -> t.Union[float, t.Tuple[float, ...]]:
    """Enable parametrization for the same cli option"""
    return _request_param_or_config_option_or_default(request, 'c_angle', 45.0)


@pytest.fixture
def sim_seed(request: FixtureRequest) -> int:
    """Enable parametrization for the same cli option"""
    return int(_request_param_or_config_option_or_default(request, 'sim_seed', 0))


@pytest.fixture
def angle_step(request: FixtureRequest) -> float:
    """Enable parametrization for the same cli option"""
    step = float(_request_param_or_config_option_or_default(request, 'angle_step', 1.0))
    if step <= 0:
        raise ValueError(f'angle step should be positive, got {step}')
    return step


def _nth(value: t.Any, i: int) -> t.Any:
    return value[i] if isinstance(value, tuple) else value


@pytest.fixture
def ryff_config(
    request: FixtureRequest,
    setting_count: int,
    bs_convention,
    photon_tags,
    a_angle,
    c_angle,
) -> t.Union[RyffConfig, t.Tuple[RyffConfig, ...]]:
    """
    Steering protocol settings built from the fockpath options.

    Keyword arguments of the closest ``ryff_config`` marker override the options for every setting.
    """
    overrides: t.Dict[str, t.Any] = {}
    marker = request.node.get_closest_marker('ryff_config')
    if marker:
        overrides = dict(marker.kwargs)

    configs = []
    for i in range(setting_count):
        kwargs = {
            'a_angle': _nth(a_angle, i),
            'c_angle': _nth(c_angle, i),
            'bs_convention': _nth(bs_convention, i),
            'tags': _nth(photon_tags, i),
        }
        kwargs.update(overrides)
        configs.append(RyffConfig(**kwargs))
        logging.debug('Setting #%d: %s', i, configs[-1])

    return configs[0] if setting_count == 1 else tuple(configs)


@pytest.fixture
def ryff_report(ryff_config) -> t.Union[Report, t.Tuple[Report, ...]]:
    """Exact steering report of each `ryff_config` setting."""
    reports = tuple(run_ryff(config) for config in to_list(ryff_config))
    return reports[0] if len(reports) == 1 else reports


@pytest.fixture
def random_unitary(sim_seed: int) -> t.Callable[[ModeRegistry], ModeUnitary]:
    """
    Factory of Haar-random mode unitaries. Successive calls in one test draw successive seeds.
    """
    draws = iter(range(sim_seed, sim_seed + 2**31))

    def _make(registry: ModeRegistry) -> ModeUnitary:
        matrix = unitary_group.rvs(len(registry), random_state=next(draws))
        return ModeUnitary.from_matrix(registry, matrix)

    return _make


################
# Command line #
################
@dataclass
class CliResult:
    exit_status: int
    output: str


@pytest.fixture
def cli_timeout(request: FixtureRequest) -> float:
    """Enable parametrization for the same cli option"""
    return float(_request_param_or_config_option_or_default(request, 'cli_timeout', 120))


@pytest.fixture
def fockpath_cli(cli_timeout: float) -> t.Callable[..., CliResult]:
    """
    Run ``python -m fockpath`` in a pseudo terminal.

    Stdout and stderr share the terminal, so pass ``--quiet`` when the output is parsed.
    """

    def _run(*args: str) -> CliResult:
        child = pexpect.spawn(sys.executable, ['-m', 'fockpath', *args], encoding='utf-8', timeout=cli_timeout)
        child.expect(pexpect.EOF)
        output = child.before
        child.close()
        return CliResult(child.exitstatus, output.replace('\r\n', '\n'))

    return _run


def pytest_configure(config: Config) -> None:
    for name, description in {
        'ryff_config': 'override the steering protocol settings by keyword, e.g. ryff_config(c_angle=30)',
    }.items():
        config.addinivalue_line('markers', f'{name}: {description}')


def pytest_report_header(config: Config) -> str:
    return f'fockpath: {fockpath_version}, setting-count {config.getoption("setting_count", 1)}'
