import pytest

from pytest_fockpath import parse_multi_setting_args


def test_help(testdir):
    result = testdir.runpytest('--help')

    result.stdout.fnmatch_lines([
        'fockpath:',
        '*--setting-count*',
        '*--angle-step*',
    ])


def test_report_header(testdir):
    testdir.makepyfile("""
        def test_nothing():
            pass
    """)

    result = testdir.runpytest()

    result.stdout.fnmatch_lines(['fockpath: *, setting-count 1'])
    result.assert_outcomes(passed=1)


@pytest.mark.parametrize(
    'count, value, convert, res',
    [
        (1, 'symmetric', str, 'symmetric'),
        (2, 'symmetric', str, ('symmetric', 'symmetric')),
        (2, 'identical|distinct', str, ('identical', 'distinct')),
        (3, '0|45|90', float, (0.0, 45.0, 90.0)),
        (1, 30.0, float, 30.0),
    ],
)
def test_parse_multi_setting_args(count, value, convert, res):
    assert parse_multi_setting_args(count, value, convert) == res


def test_parse_multi_setting_args_mismatch():
    with pytest.raises(ValueError, match='setting-count'):
        parse_multi_setting_args(3, 'a|b')


def test_default_fixtures(testdir):
    testdir.makepyfile("""
        import pytest
        from fockpath.experiments import RyffConfig

        def test_settings(bs_convention, photon_tags, a_angle, c_angle, sim_seed, angle_step):
            assert bs_convention == 'symmetric'
            assert photon_tags == 'identical'
            assert a_angle == 0
            assert c_angle == 45
            assert sim_seed == 0
            assert angle_step == 1.0

        def test_ryff_config(ryff_config):
            assert ryff_config == RyffConfig(a_angle=0, c_angle=45)

        def test_ryff_report(ryff_report):
            assert ryff_report.p_coinc == pytest.approx(0.125, abs=1e-12)
            assert ryff_report.nu1_angle_deg == pytest.approx(45)
    """)

    result = testdir.runpytest()

    result.assert_outcomes(passed=3)


def test_cli_options(testdir):
    testdir.makepyfile("""
        import pytest

        def test_options(ryff_config, ryff_report):
            assert ryff_config.a_angle == 30
            assert ryff_config.c_angle == 75
            assert ryff_config.bs_convention == 'real'
            assert ryff_config.tags == 'distinct'
            assert ryff_report.purity == pytest.approx(0.5, abs=1e-9)
    """)

    result = testdir.runpytest(
        '--a-angle',
        '30',
        '--c-angle',
        '75',
        '--bs-convention',
        'real',
        '--photon-tags',
        'distinct',
    )

    result.assert_outcomes(passed=1)


def test_multi_setting_fixtures(testdir):
    testdir.makepyfile("""
        import pytest

        def test_control(ryff_config, ryff_report):
            steering, control = ryff_report
            assert ryff_config[0].tags == 'identical'
            assert ryff_config[1].tags == 'distinct'
            assert ryff_config[0].c_angle == ryff_config[1].c_angle == 45
            assert steering.purity == pytest.approx(1, abs=1e-9)
            assert control.purity == pytest.approx(0.5, abs=1e-9)
    """)

    result = testdir.runpytest('--setting-count', '2', '--photon-tags', 'identical|distinct')

    result.assert_outcomes(passed=1)
    result.stdout.fnmatch_lines(['fockpath: *, setting-count 2'])


def test_multi_setting_mismatch(testdir):
    testdir.makepyfile("""
        def test_control(ryff_config):
            pass
    """)

    result = testdir.runpytest('--setting-count', '3', '--photon-tags', 'identical|distinct')

    result.assert_outcomes(errors=1)


def test_marker_overrides_options(testdir):
    testdir.makepyfile("""
        import pytest

        @pytest.mark.ryff_config(c_angle=0, bs_convention='real')
        def test_marker(ryff_config, ryff_report):
            assert ryff_config.a_angle == 10
            assert ryff_config.c_angle == 0
            assert ryff_config.bs_convention == 'real'
            assert ryff_report.nu1_angle_deg == pytest.approx(110)
    """)

    result = testdir.runpytest('--a-angle', '10', '--c-angle', '60')

    result.assert_outcomes(passed=1)


def test_indirect_parametrization(testdir):
    testdir.makepyfile("""
        import pytest

        @pytest.mark.parametrize('c_angle, expected', [(0, 90), (90, 0), (135, 135)], indirect=['c_angle'])
        def test_steering(c_angle, expected, ryff_report):
            measured = ryff_report.nu1_angle_deg
            assert min(abs(measured - expected), 180 - abs(measured - expected)) < 1e-6
    """)

    result = testdir.runpytest()

    result.assert_outcomes(passed=3)


def test_random_unitary(testdir):
    testdir.makepyfile("""
        import numpy as np
        from fockpath.fock import ModeRegistry

        def test_unitary(random_unitary, sim_seed):
            registry = ModeRegistry.build(['a', 'b', 'c'])
            first = random_unitary(registry)
            second = random_unitary(registry)

            assert sim_seed == 5
            assert first.matrix.shape == (6, 6)
            assert np.allclose(first.matrix.conj().T @ first.matrix, np.eye(6))
            assert not np.allclose(first.matrix, second.matrix)
    """)

    result = testdir.runpytest('--sim-seed', '5')

    result.assert_outcomes(passed=1)


def test_fockpath_cli(testdir):
    testdir.makepyfile("""
        import json
        import pytest

        def test_run(fockpath_cli):
            res = fockpath_cli('run', 'ryff_exact.json', '--quiet')
            assert res.exit_status == 0
            assert json.loads(res.output)['p_coinc'] == pytest.approx(0.125, abs=1e-12)

        def test_bad_spec(fockpath_cli):
            res = fockpath_cli('run', 'bad_angle.json')
            assert res.exit_status == 1
            assert 'angles.a: expected number' in res.output

        def test_version(fockpath_cli):
            res = fockpath_cli('--version')
            assert res.exit_status == 0
            assert res.output.startswith('fockpath 1.0.0')
    """)

    result = testdir.runpytest()

    result.assert_outcomes(passed=3)


def test_fockpath_cli_is_deterministic(testdir):
    testdir.makepyfile("""
        import pytest

        @pytest.mark.parametrize('spec', ['ryff_sample.json', 'chsh_sample.json', 'ryff_sweep.json'])
        def test_two_processes(fockpath_cli, spec):
            first = fockpath_cli('run', spec, '--quiet')
            second = fockpath_cli('run', spec, '--quiet')

            assert first.exit_status == 0
            assert first.output == second.output
    """)

    result = testdir.runpytest()

    result.assert_outcomes(passed=3)
