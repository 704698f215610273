"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails or a solve is
refused, 2 for usage and configuration errors.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ahlfors_fredholm import __version__
from ahlfors_fredholm.ahlfors import (
    composite_integral_check, default_radius_grid, estimate_strong_upper_ahlfors, estimate_upper_ahlfors,
    geometric_grid, local_composite_check, small_set_modulus, verify_ball_bound, verify_localized_bounds,
)
from ahlfors_fredholm.class_calculus import (
    compose_general, parse_kernel_class, parse_split, smoothing_order, suggest_split,
)
from ahlfors_fredholm.datum import parse_datum_spec
from ahlfors_fredholm.errors import FredholmError, InvalidArgumentError
from ahlfors_fredholm.kernels import parse_kernel_spec
from ahlfors_fredholm.moduli import parse_modulus
from ahlfors_fredholm.operator import (
    SolveError, assemble, assemble_normalized, bootstrap_scale, solve_direct, solve_neumann, verify_bootstrap,
)
from ahlfors_fredholm.regularity import (
    ExperimentRefusedError, check_large_scale_bound, holder_seminorm, run_continuity_experiment,
    run_holder_experiment, run_improved_holder_experiment,
)
from ahlfors_fredholm.reports import build_document, write_report, write_vectors_csv
from ahlfors_fredholm.sampled_space import (
    PointCloudParseError, ResourceLimitError, SampledMeasureSpace, build_cantor, build_circle,
    build_weighted_interval, load_point_cloud, validate_space,
)
from ahlfors_fredholm.settings import RunConfig, Tolerances, load_tolerances, worker_count

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# command-line flag -> Tolerances field
TOLERANCE_FLAGS = {
    'residual_tol': 'residual',
    'bootstrap_tol': 'bootstrap',
    'condition_limit': 'condition_limit',
    'neumann_tol': 'neumann_tol',
    'neumann_max_terms': 'neumann_max_terms',
    'stability_factor': 'stability_factor',
    'growth_ceiling': 'growth_ceiling',
    'jump_shrink_ceiling': 'jump_shrink_ceiling',
    'ceiling': 'ahlfors_ceiling',
    'grid_ratio': 'grid_ratio',
    'eps': 'eps',
    'max_nodes': 'max_nodes',
    'triple_cap': 'triple_cap',
}

BOOTSTRAP_ORDERS = (1, 2, 3)


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InvalidArgumentError(f"{what} is not an integer: {text!r}")


def build_space(spec: str, size: Optional[int] = None, max_nodes: Optional[int] = None) -> SampledMeasureSpace:
    """Build ``circle:n[:radius]``, ``cantor:level``, ``interval:n[:density]`` or load ``file:path``.

    ``size`` replaces the first parameter, so ``circle`` with sizes from
    ``--meshes`` builds a family of meshes.
    """
    family, _, rest = spec.partition(':')
    if family == 'file':
        return load_point_cloud(rest, max_nodes=max_nodes)
    if family not in ('circle', 'cantor', 'interval'):
        if Path(spec).is_file():
            return load_point_cloud(spec, max_nodes=max_nodes)
        raise InvalidArgumentError(f"unknown space {spec!r}; use circle:n, cantor:level, interval:n or file:path")
    args = rest.split(':') if rest else []
    if size is not None:
        args = [str(size)] + args[1:]
    if not args:
        raise InvalidArgumentError(f"space {spec!r} needs a size; pass it in the spec or via --meshes")
    first = _int(args[0], "space size")
    if family == 'circle':
        radius = 1.0
        if len(args) > 1:
            try:
                radius = float(args[1])
            except ValueError:
                raise InvalidArgumentError(f"circle radius is not a number: {args[1]!r}")
        return build_circle(first, radius, max_nodes=max_nodes)
    if family == 'cantor':
        return build_cantor(first, max_nodes=max_nodes)
    return build_weighted_interval(first, args[1] if len(args) > 1 else 'uniform', max_nodes=max_nodes)


def _require(value, flag: str):
    if value is None:
        raise InvalidArgumentError(f"{flag} is required for this command")
    return value


def _radius_grid(space: SampledMeasureSpace, config: RunConfig) -> np.ndarray:
    ratio = config.tolerances.grid_ratio
    if config.r_min is not None or config.r_max is not None:
        r_min = config.r_min if config.r_min is not None else space.mesh
        r_max = config.r_max if config.r_max is not None else space.diameter
        if r_min is None:
            raise InvalidArgumentError(f"space {space.label} has no mesh; pass --r-min")
        return geometric_grid(r_min, r_max, ratio)
    if space.mesh is None:
        # a single location has no mesh; probe small radii
        return geometric_grid(1e-6, 1.0, ratio)
    return default_radius_grid(space, ratio)


def _system(space: SampledMeasureSpace, config: RunConfig):
    kernel = parse_kernel_spec(_require(config.kernel, "--kernel"))
    if config.scale:
        return assemble_normalized(space, kernel, config.target_norm)
    return assemble(space, kernel), 1.0


def cmd_check_ahlfors(config: RunConfig) -> Tuple[Any, bool]:
    tol = config.tolerances
    space = build_space(_require(config.space, "--space"), max_nodes=tol.max_nodes)
    upsilon = _require(config.upsilon, "--upsilon")
    grid = _radius_grid(space, config)
    estimator = estimate_strong_upper_ahlfors if config.strong else estimate_upper_ahlfors
    report = estimator(space, upsilon, radius_grid=grid, r_cutoff=config.r_cutoff, ceiling=tol.ahlfors_ceiling)
    violations = validate_space(space, seed=config.seed)
    if violations:
        logger.warning("space %s violates: %s", space.label, "; ".join(violations))
    result = {'space': space.label, 'n': space.n, 'report': report, 'violations': violations}
    return result, report.passed and not violations


def _compose_tokens(tokens: Sequence[str]) -> Dict[str, str]:
    parsed = {}
    for token in tokens:
        head, sep, _ = token.partition(':')
        if not sep or head not in ('class', 'split', 't1'):
            raise InvalidArgumentError(f"unexpected token {token!r}; use class:..., split:... and t1:...")
        if head in parsed:
            raise InvalidArgumentError(f"token {head}: given twice")
        parsed[head] = token
    return parsed


def cmd_compose_class(config: RunConfig) -> Tuple[Any, bool]:
    klass = parse_kernel_class(_require(config.kernel_class, "class:s1,s2,s3@upsilon"))
    t1 = _require(config.t1, "t1:value")
    eps = config.tolerances.eps
    if config.split is None:
        s2p, s2pp, composed = suggest_split(klass, t1, strong=config.strong, eps=eps)
        suggested = True
    else:
        s2p, s2pp = parse_split(config.split)
        composed = compose_general(klass, (s2p, s2pp), t1, strong=config.strong, eps=eps)
        suggested = False
    try:
        order = smoothing_order(klass.s1, klass.upsilon)
    except InvalidArgumentError:
        order = None
    result = {
        'input': str(klass),
        'split': [s2p, s2pp],
        'split_suggested': suggested,
        't1': t1,
        'case': composed.case,
        'composed': composed,
        'composed_text': str(composed),
        'smoothing_order': order,
    }
    logger.info("case (%s): %s", composed.case, composed)
    return result, True


def cmd_solve(config: RunConfig) -> Tuple[Any, bool]:
    tol = config.tolerances
    space = build_space(_require(config.space, "--space"), max_nodes=tol.max_nodes)
    datum = parse_datum_spec(_require(config.datum, "--datum"))
    system, lam = _system(space, config)
    g = datum(space)
    logger.info("solving on %s with row-sum norm %.6g", space.label, system.row_sum_norm)
    direct = solve_direct(system, g, tol.residual, tol.condition_limit)

    neumann: Dict[str, Any]
    try:
        series = solve_neumann(system, g, tol.neumann_tol, tol.neumann_max_terms)
        neumann = {'terms': series.neumann_terms, 'residual_inf': series.residual_inf,
                   'max_difference': float(np.max(np.abs(series.mu - direct.mu)))}
    except SolveError as e:
        logger.warning("Neumann series not used: %s", e)
        neumann = {'refused': str(e)}

    budget = tol.bootstrap * bootstrap_scale(direct.mu, g)
    deviations = {str(r): verify_bootstrap(system, direct.mu, g, r) for r in BOOTSTRAP_ORDERS}
    passed = all(v <= budget for v in deviations.values())
    if config.dump_mu:
        write_vectors_csv(config.dump_mu, {'mu': direct.mu, 'g': g})
    result = {
        'space': space.label,
        'kernel': system.kernel.spec,
        'scale': lam,
        'row_sum_norm': system.row_sum_norm,
        'residual_inf': direct.residual_inf,
        'condition_estimate': direct.condition_estimate,
        'neumann': neumann,
        'bootstrap_budget': budget,
        'bootstrap_deviation': deviations,
        'sup_norm': float(np.max(np.abs(direct.mu))),
    }
    return result, passed


def cmd_experiment(config: RunConfig) -> Tuple[Any, bool]:
    tol = config.tolerances
    spec = _require(config.space, "--space")
    if len(config.meshes) < 2:
        raise InvalidArgumentError(f"--meshes needs at least two sizes, got {config.meshes}")
    meshes = [build_space(spec, size, max_nodes=tol.max_nodes) for size in config.meshes]
    kernel = _require(config.kernel, "--kernel")
    datum = _require(config.datum, "--datum")
    theorem = config.theorem or 'holder'
    if theorem == 'continuity':
        report = run_continuity_experiment(meshes, kernel, datum, s=config.s, upsilon=config.upsilon,
                                           target_norm=config.target_norm, scale=config.scale, tolerances=tol)
        return report, report.passed
    klass = parse_kernel_class(_require(config.kernel_class, "--class"))
    theta = _require(config.theta, "--theta")
    test_modulus = parse_modulus(config.modulus) if config.modulus else None
    common = dict(upsilon=klass.upsilon, strong=config.strong, target_norm=config.target_norm,
                  scale=config.scale, test_modulus=test_modulus, min_dist=config.min_dist,
                  tolerances=tol, seed=config.seed)
    if theorem == 'holder':
        report = run_holder_experiment(meshes, klass.s1, klass.s2, klass.s3, theta, kernel, datum, **common)
    else:
        beta = _require(config.beta, "--beta")
        report = run_improved_holder_experiment(meshes, klass.s1, klass.s2, klass.s3, beta, theta, kernel,
                                                datum, **common)
    return report, report.passed


def cmd_verify_bounds(config: RunConfig) -> Tuple[Any, bool]:
    tol = config.tolerances
    space = build_space(_require(config.space, "--space"), max_nodes=tol.max_nodes)
    upsilon = _require(config.upsilon, "--upsilon")
    s = _require(config.s, "--s")
    bound = config.bound or 'ball'
    if bound == 'ball':
        report = verify_ball_bound(space, upsilon, s, _require(config.a, "--a"), r_cutoff=config.r_cutoff)
    elif bound == 'localized':
        report = verify_localized_bounds(space, upsilon, s)
    elif bound == 'composite':
        strong = True if config.strong else None
        report = composite_integral_check(space, upsilon, s, _require(config.s2, "--s2"), seed=config.seed,
                                          strong_flag=strong)
    elif bound == 'local-composite':
        report = local_composite_check(space, upsilon, s, _require(config.s2, "--s2"),
                                       a=config.a if config.a is not None else 1.0, seed=config.seed)
    else:
        value = small_set_modulus(space, s, _require(config.mass_budget, "--mass-budget"), upsilon)
        return {'space': space.label, 's': s, 'mass_budget': config.mass_budget, 'sup': value}, True
    return {'space': space.label, 'report': report}, bool(report.passed)


def cmd_seminorm(config: RunConfig) -> Tuple[Any, bool]:
    tol = config.tolerances
    space = build_space(_require(config.space, "--space"), max_nodes=tol.max_nodes)
    datum = parse_datum_spec(_require(config.datum, "--datum"))
    modulus = parse_modulus(_require(config.modulus, "--modulus"))
    f = datum(space)
    source = datum.spec
    if config.kernel is not None:
        system, _ = _system(space, config)
        f = solve_direct(system, f, tol.residual, tol.condition_limit).mu
        source = f"solution({system.kernel.spec}, {datum.spec})"
    estimate = holder_seminorm(f, space, modulus, config.min_dist)
    result: Dict[str, Any] = {'space': space.label, 'function': source, 'modulus': str(modulus),
                              'estimate': estimate}
    passed = True
    if config.a is not None:
        check = check_large_scale_bound(f, space, modulus, config.a)
        result['large_scale_check'] = check
        passed = check.passed
    return result, passed


COMMANDS: Dict[str, Callable[[RunConfig], Tuple[Any, bool]]] = {
    'check-ahlfors': cmd_check_ahlfors,
    'compose-class': cmd_compose_class,
    'solve': cmd_solve,
    'experiment': cmd_experiment,
    'verify-bounds': cmd_verify_bounds,
    'seminorm': cmd_seminorm,
}


def _meshes(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"meshes must be comma-separated integers, got {text!r}")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='store_true', help="debug logging on stderr")
    common.add_argument('-q', '--quiet', action='store_true', help="warnings and errors only")
    common.add_argument('--settings', type=Path, help="JSON file overriding numeric defaults")
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--out', help="write the report here instead of stdout")
    tolerances = common.add_argument_group("tolerance overrides")
    for flag, field in TOLERANCE_FLAGS.items():
        kind = Tolerances.model_fields[field].annotation
        tolerances.add_argument('--' + flag.replace('_', '-'), dest=flag, type=kind, default=None,
                                help=f"overrides {field}")
    return common


def _space_options(parser: argparse.ArgumentParser, upsilon: bool = True) -> None:
    parser.add_argument('--space', help="circle:n[:radius], cantor:level, interval:n[:density] or file:path")
    if upsilon:
        parser.add_argument('--upsilon', type=float)


def _solve_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--kernel', help="riesz:s, logriesz:s, scale:lam:<kernel>, table:path or zero")
    parser.add_argument('--datum', help="const:c, coord:k, dist:theta[@node], step[:k] or cos")
    parser.add_argument('--no-scale', dest='scale', action='store_false',
                        help="use the kernel as given instead of normalizing its row-sum norm")
    parser.add_argument('--target-norm', type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog='ahlfors-fredholm', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('check-ahlfors', parents=[common], help="estimate upper Ahlfors constants")
    _space_options(p)
    p.add_argument('--strong', action='store_true', help="also estimate the annulus constant")
    p.add_argument('--r-cutoff', type=float)
    p.add_argument('--r-min', type=float)
    p.add_argument('--r-max', type=float)

    p = sub.add_parser('compose-class', parents=[common], help="exponent calculus of a composite kernel")
    p.add_argument('tokens', nargs='+', help="class:s1,s2,s3@upsilon [split:s2p,s2pp] t1:value")
    p.add_argument('--strong', action='store_true', help="the space is strongly upper Ahlfors regular")

    p = sub.add_parser('solve', parents=[common], help="solve mu - A[K, mu] = g on one space")
    _space_options(p, upsilon=False)
    _solve_options(p)
    p.add_argument('--dump-mu', help="CSV file for the solution and the datum")

    p = sub.add_parser('experiment', parents=[common], help="multi-mesh regularity experiment")
    _space_options(p)
    _solve_options(p)
    p.add_argument('--meshes', type=_meshes, default=[], help="comma-separated sizes, e.g. 128,256,512")
    p.add_argument('--theorem', choices=('holder', 'improved', 'continuity'), default='holder')
    p.add_argument('--class', dest='kernel_class', help="class:s1,s2,s3@upsilon")
    p.add_argument('--theta', type=float)
    p.add_argument('--beta', type=float)
    p.add_argument('--s', type=float, help="potential exponent checked by the continuity experiment")
    p.add_argument('--strong', action='store_true')
    p.add_argument('--modulus', help="test the solution against this modulus instead of the predicted one")
    p.add_argument('--min-dist', type=float)

    p = sub.add_parser('verify-bounds', parents=[common], help="integral bounds of Riesz-type potentials")
    _space_options(p)
    p.add_argument('--bound', choices=('ball', 'localized', 'composite', 'local-composite', 'small-set'),
                   default='ball')
    p.add_argument('--s', type=float)
    p.add_argument('--s2', type=float)
    p.add_argument('--a', type=float)
    p.add_argument('--mass-budget', type=float)
    p.add_argument('--r-cutoff', type=float)
    p.add_argument('--strong', action='store_true')

    p = sub.add_parser('seminorm', parents=[common], help="modulus seminorm of a datum or a solution")
    _space_options(p, upsilon=False)
    _solve_options(p)
    p.add_argument('--modulus', help="r^b, omega_theta(t) or max(...)")
    p.add_argument('--min-dist', type=float)
    p.add_argument('--a', type=float, help="also check the bound on pairs at distance >= a")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the settings file, then explicit flags."""
    overrides = {field: getattr(args, flag, None) for flag, field in TOLERANCE_FLAGS.items()}
    tolerances = load_tolerances(args.settings, overrides)
    values = {name: value for name, value in vars(args).items()
              if name in RunConfig.model_fields and value is not None}
    if args.command == 'compose-class':
        tokens = _compose_tokens(args.tokens)
        values['kernel_class'] = tokens.get('class')
        values['split'] = tokens.get('split')
        if 't1' in tokens:
            try:
                values['t1'] = float(tokens['t1'].partition(':')[2])
            except ValueError:
                raise InvalidArgumentError(f"t1 is not a number: {tokens['t1']!r}")
    values['tolerances'] = tolerances
    values['workers'] = worker_count()
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid configuration: {e}") from e


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PASS if e.code in (0, None) else EXIT_USAGE
    _configure_logging(args)
    try:
        config = resolve_config(args)
        result, passed = COMMANDS[config.command](config)
    except (InvalidArgumentError, PointCloudParseError, ResourceLimitError, OSError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (SolveError, ExperimentRefusedError) as e:
        logger.error("%s", e)
        write_report(build_document(args.command, config, {'error': type(e).__name__, 'message': str(e),
                                                           **_error_details(e)}, passed=False),
                     config.out, sys.stdout)
        return EXIT_FAILED
    except FredholmError as e:
        logger.error("%s", e)
        return EXIT_FAILED
    write_report(build_document(config.command, config, result, passed), config.out, sys.stdout)
    if not passed:
        logger.warning("%s: check failed", config.command)
    return EXIT_PASS if passed else EXIT_FAILED


def _error_details(error: Exception) -> Dict[str, Any]:
    details = {}
    for name in ('seminorms', 'totals'):
        if hasattr(error, name):
            details[name] = getattr(error, name)
    return details
