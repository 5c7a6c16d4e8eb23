"""
``fockpath`` command line: ``run`` and ``validate`` a JSON run specification.

Exit codes: 0 on success, 1 on configuration or analysis errors, 2 on numerical invariant violations.
"""

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import typing as t

import numpy as np

from . import __version__
from .elements import Circuit
from .evolution import apply
from .experiments import (
    SweepRow,
    all_coincidences,
    build_ryff,
    chsh,
    chsh_sampled,
    predicted_nu1,
    run_hom,
    run_ryff,
    sweep_c,
)
from .fock import DensityMatrix, ModeRegistry, PureState, epr_pair_state, single_photon_state, tensor
from .measurement import (
    conditional_state,
    detection_distribution,
    fidelity,
    pattern_counts,
    pattern_probability,
    purity,
    sample_events,
)
from .runspec import MAX_SEED, CustomCircuitSpec, RunSpec, parse_spec, serialize_spec
from .utils import ConfigurationError, FockpathError, InvariantViolation, deg2rad

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2

CSV_COLUMNS = ('c_deg', 'p_coinc', 'fidelity_eq7', 'purity', 'nu1_angle_deg')


def _gte_one_int(v) -> int:
    v = int(v)
    if v >= 1:
        return v

    raise argparse.ArgumentTypeError('should be int and greater or equal to 1')


def _u64(v) -> int:
    v = int(v)
    if 0 <= v < MAX_SEED:
        return v

    raise argparse.ArgumentTypeError('should be an unsigned 64-bit integer')


###################
# Report encoding #
###################
def _basis_label(dm: DensityMatrix, index: int) -> str:
    occupation = dm.basis[index]
    if not occupation.counts:
        return '|vac>'

    parts = []
    for i, c in occupation.counts:
        path, pol = dm.modes[i]
        parts.append(f'{path}:{pol}' if c == 1 else f'{path}:{pol}^{c}')
    return '|' + ', '.join(parts) + '>'


def density_matrix_to_dict(dm: DensityMatrix) -> t.Dict[str, t.Any]:
    return {
        'basis': [_basis_label(dm, i) for i in range(dm.dim)],
        'real': dm.matrix.real.tolist(),
        'imag': dm.matrix.imag.tolist(),
        'purity': dm.purity(),
    }


def _qubit_to_dict(qubit: np.ndarray) -> t.Dict[str, t.Any]:
    return {'basis': ['H', 'V'], 'real': qubit.real.tolist(), 'imag': qubit.imag.tolist()}


def _records_to_dict(records: t.Mapping[t.Any, t.Union[int, float]]) -> t.Dict[str, t.Union[int, float]]:
    return {str(k) or 'vacuum': v for k, v in records.items()}


def dumps_json(obj: t.Any) -> str:
    """Shortest round-trip float repr, insertion-ordered keys, trailing newline."""
    return json.dumps(obj, indent=2, allow_nan=False) + '\n'


def dumps_csv(rows: t.Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        values = row.to_dict()
        writer.writerow(['' if values[k] is None else '%.17g' % values[k] for k in CSV_COLUMNS])
    return buffer.getvalue()


###############
# Dispatchers #
###############
def _run_ryff(spec: RunSpec, jobs: int) -> t.Union[t.Dict[str, t.Any], t.List[SweepRow]]:
    config = spec.ryff_config()

    if spec.task == 'exact':
        return run_ryff(config).to_dict()

    if spec.task == 'all-coincidences':
        target = predicted_nu1(config.a_angle, config.c_angle)
        coincidences = {}
        for label, result in all_coincidences(config).items():
            qubit = result.conditional.polarization_qubit()
            coincidences[label] = {
                'probability': result.probability,
                'conditional': _qubit_to_dict(qubit),
                'fidelity_eq7': fidelity(qubit, target),
                'purity': purity(qubit),
            }
        return {
            'experiment': 'ryff',
            'config': config.to_dict(),
            'coincidences': coincidences,
            'total_probability': sum(c['probability'] for c in coincidences.values()),
        }

    if spec.task == 'sweep':
        rows = sweep_c(config, spec.sweep.plan(), jobs=jobs)
        if spec.format == 'csv':
            return rows
        return {
            'experiment': 'ryff',
            'config': config.to_dict(),
            'sweep': {
                'param': spec.sweep.param,
                'from': spec.sweep.start,
                'to': spec.sweep.stop,
                'step': spec.sweep.step,
            },
            'rows': [row.to_dict() for row in rows],
        }

    # sample
    state, circuit, patterns = build_ryff(config)
    evolved = apply(state, circuit.compile())
    counts = sample_events(evolved, spec.samples, spec.seed)
    return {
        'experiment': 'ryff',
        'config': config.to_dict(),
        'samples': spec.samples,
        'seed': spec.seed,
        'coincidences': {
            p.label: {
                'count': pattern_counts(counts, p),
                'frequency': pattern_counts(counts, p) / spec.samples,
                'exact': pattern_probability(evolved, p),
            }
            for p in patterns
        },
        'counts': _records_to_dict(counts),
    }


def _run_chsh(spec: RunSpec) -> t.Dict[str, t.Any]:
    angles = spec.chsh_config()
    exact = chsh(angles.a1, angles.a2, angles.b1, angles.b2)
    if spec.task == 'exact':
        return exact.to_dict()

    res = chsh_sampled(angles.a1, angles.a2, angles.b1, angles.b2, spec.samples, spec.seed).to_dict()
    res['seed'] = spec.seed
    res['exact'] = {'S': exact.s_value, 'correlations': exact.correlations}
    return res


def build_custom(custom: CustomCircuitSpec, convention: str) -> t.Tuple[PureState, Circuit]:
    """
    Source state and circuit of a custom run spec. Sources are tensored in order.
    """
    registry = ModeRegistry.build(custom.paths, custom.tags)
    states = []
    for source in custom.sources:
        if source.type == 'single':
            states.append(single_photon_state(registry, source.paths[0], deg2rad(source.pol), source.tag))
        else:
            states.append(epr_pair_state(registry, source.paths[0], source.paths[1], deg2rad(source.pol), source.tag))

    state = states[0]
    for other in states[1:]:
        state = tensor(state, other)

    sources = tuple(dict.fromkeys(p for s in custom.sources for p in s.paths))
    circuit = Circuit(registry, tuple(e.to_element(convention) for e in custom.elements), sources=sources)
    return state, circuit


def _run_custom(spec: RunSpec) -> t.Dict[str, t.Any]:
    state, circuit = build_custom(spec.custom, spec.bs_convention)
    evolved = apply(state, circuit.compile())
    res: t.Dict[str, t.Any] = {
        'experiment': 'custom',
        'paths': list(state.registry.paths),
        'n_photons': evolved.n_total,
    }

    if spec.task == 'sample':
        counts = sample_events(evolved, spec.samples, spec.seed)
        res.update(samples=spec.samples, seed=spec.seed, counts=_records_to_dict(counts))
        return res

    res['distribution'] = _records_to_dict(detection_distribution(evolved))
    if spec.custom.pattern is not None:
        pattern = spec.custom.pattern.to_pattern()
        result = conditional_state(evolved, pattern)
        res['pattern'] = {
            'label': pattern.label,
            'probability': result.probability,
            'conditional': None if result.conditional is None else density_matrix_to_dict(result.conditional),
        }
    return res


def execute(spec: RunSpec, jobs: int = 1) -> str:
    """
    Run `spec` and serialize its result in the spec's output format.

    Identical specs always give identical text.
    """
    logging.info('Running %s experiment, task %s', spec.experiment, spec.task)
    if spec.experiment == 'ryff':
        res = _run_ryff(spec, jobs)
    elif spec.experiment == 'chsh':
        res = _run_chsh(spec)
    elif spec.experiment == 'hom':
        res = run_hom(spec.hom_config()).to_dict()
    else:
        res = _run_custom(spec)

    if isinstance(res, list):
        return dumps_csv(res)

    return dumps_json({'version': __version__, 'task': spec.task, **res})


############
# Commands #
############
def _read_spec(path: str) -> RunSpec:
    try:
        if path == '-':
            text = sys.stdin.read()
        else:
            with open(path, 'rb') as fr:
                text = fr.read()
    except OSError as e:
        raise ConfigurationError(f'Cannot read spec file {path}: {e.strerror}')

    return parse_spec(text)


def _with_overrides(spec: RunSpec, args: argparse.Namespace) -> RunSpec:
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.format is not None:
        overrides['format'] = args.format
    if args.out is not None:
        overrides['out'] = args.out
    return dataclasses.replace(spec, **overrides) if overrides else spec


def cmd_run(args: argparse.Namespace) -> int:
    spec = _with_overrides(_read_spec(args.spec), args)
    output = execute(spec, jobs=args.jobs)

    if spec.out:
        with open(spec.out, 'w', encoding='utf-8', newline='') as fw:
            fw.write(output)
        logging.info('Report written to %s', spec.out)
    else:
        sys.stdout.write(output)
        sys.stdout.flush()
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    spec = _with_overrides(_read_spec(args.spec), args)
    sys.stdout.write(serialize_spec(spec))
    logging.info('%s is a valid %s spec', args.spec, spec.experiment)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('spec', help='run spec JSON file, "-" for stdin')
    common.add_argument('--seed', type=_u64, help='override the spec seed (unsigned 64-bit)')
    common.add_argument('--format', choices=('json', 'csv'), help='override the spec output format')
    common.add_argument('--out', help='write the report to this file instead of stdout')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--quiet', action='store_true', help='only log warnings and errors')
    verbosity.add_argument('--verbose', action='store_true', help='log debug messages')

    parser = argparse.ArgumentParser(prog='fockpath', description='Few-photon linear-optics simulator.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    run_parser = sub.add_parser('run', parents=[common], help='execute a run spec and emit its report')
    run_parser.add_argument(
        '--jobs', type=_gte_one_int, default=1, help='worker processes for sweeps. (Default: 1)'
    )
    run_parser.set_defaults(func=cmd_run)

    validate_parser = sub.add_parser('validate', parents=[common], help='check a run spec and print it canonically')
    validate_parser.set_defaults(func=cmd_validate)

    return parser


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format='%(asctime)s %(levelname)s %(message)s', force=True)

    try:
        return args.func(args)
    except InvariantViolation as e:
        logging.error('Numerical invariant violated: %s', e)
        return EXIT_INVARIANT
    except FockpathError as e:
        logging.error('%s', e)
        return EXIT_CONFIG
