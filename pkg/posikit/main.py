"""
Command line entrypoint.
Every command is a function of RunConfig that returns a CommandResult
"""
import argparse
import math
import sys
from dataclasses import dataclass, fields
from typing import Callable, TextIO, get_args, get_origin

import numpy as np
import pandas as pd

from posikit import minihydra
from posikit.config import (COMMANDS, FAMILIES, RunConfig, parse_df,
                            parse_model, validate_config)
from posikit.consts import (APP_NAME, DIRECTIONS_PER_SECOND, LARGE_UNIVERSE_P)
from posikit.design.canonical import CanonicalDesign, CanonicalForm, canonicalize
from posikit.design.directions import direction_stream, gram_schmidt_chain
from posikit.design.matrix import DesignMatrix, estimate_sigma, load_design, load_vector
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse, load_universe
from posikit.engine.constants import (ConstantEstimate, ErrorModel,
                                      asymptotic_cap_constant,
                                      cap_bonferroni_bound, orth_K, posi1_K,
                                      posi_K, scheffe_K)
from posikit.errors import DataError, PosiError, UsageError
from posikit.families import (default_c_grid, exchangeable_ratio_cells,
                              maximize_rate_function, worst_posi1_ratio_table)
from posikit.inference import (TargetSpec, coverage_experiment, naive_constant,
                               posi_intervals, spar1_select, spar_select)
from posikit.report import CommandResult, write_result
from posikit.selectors import make_selector
from posikit.structure import orthogonality_census, verify_duality
from posikit.utils import get_traceback, init_logger, logger
from posikit.workers import resolve_threads

STDIN_PATH = '-'
"""
Design path that means "read the design from the input stream"
"""


@dataclass
class Streams:
    in_: TextIO
    out: TextIO
    err: TextIO

    @classmethod
    def system(cls) -> "Streams":
        return cls(sys.stdin, sys.stdout, sys.stderr)


@dataclass
class Context:
    """
    Objects shared by the commands of one run
    """
    config: RunConfig
    streams: Streams
    threads: int

    @property
    def error_model(self) -> ErrorModel:
        return ErrorModel(parse_df(self.config.df))

    @property
    def universe(self) -> ModelUniverse:
        return load_universe(self.config.universe)

    def load_matrix(self) -> DesignMatrix:
        config = self.config
        source = self.streams.in_ if config.design_path == STDIN_PATH else config.design_path
        return load_design(source, config.header, config.intercept,
                           config.rank_tolerance)

    def load_design(self) -> tuple[DesignMatrix, CanonicalDesign]:
        X = self.load_matrix()
        return X, canonicalize(X, CanonicalForm(self.config.form))

    def load_response(self, X: DesignMatrix,
                      design: CanonicalDesign) -> tuple[np.ndarray, float, ErrorModel]:
        """
        Canonical response, sigma_hat and its error model.
        Without --sigma-hat the estimate from the full-model residuals is used with r = n - d
        """
        y = load_vector(self.config.response_path, 'response')
        if y.shape[0] != X.n:
            raise DataError(f'response has length {y.shape[0]}, expected n={X.n}')
        if self.config.sigma_hat is not None:
            return design.reduce_response(y), self.config.sigma_hat, self.error_model
        sigma_hat, df = estimate_sigma(X, y)
        logger.info(f'estimated sigma_hat={sigma_hat:.6g} with r={df}')
        if sigma_hat <= 0:
            raise DataError('response is fitted exactly, sigma_hat is zero')
        return design.reduce_response(y), sigma_hat, ErrorModel(float(df))

    def load_target(self, design: CanonicalDesign) -> TargetSpec | None:
        if self.config.mu_path is None:
            return None
        return TargetSpec.from_mean(design, load_vector(self.config.mu_path, 'mean'))

    def constant(self,
                 design: CanonicalDesign,
                 em: ErrorModel,
                 predictor: int | None = None) -> ConstantEstimate:
        """
        PoSI constant of the configured universe, PoSI1 if a predictor is given
        """
        config = self.config
        warn_large_universe(design, self.universe, config.mc_samples)
        if predictor is not None:
            return posi1_K(design, self.universe, predictor,
                           config.alpha, em, config.mc_samples, config.seed,
                           self.threads, config.dedup)
        return posi_K(design, self.universe, config.alpha, em,
                      config.mc_samples, config.seed, self.threads,
                      config.dedup)


def warn_large_universe(design: CanonicalDesign, universe: ModelUniverse,
                        mc_samples: int):
    """
    Prints the direction count and a time projection for big unrestricted universes
    """
    if not universe.is_unrestricted or design.p <= LARGE_UNIVERSE_P:
        return
    count = design.p * 2**(design.p - 1)
    seconds = count * mc_samples * design.d / DIRECTIONS_PER_SECOND
    logger.warning(
        f'p={design.p} with universe "all": up to {count} directions, '
        f'about {seconds / 60:.1f} minutes per thread for {mc_samples} draws')


def command_k(ctx: Context) -> CommandResult:
    _, design = ctx.load_design()
    predictor = ctx.config.predictor if ctx.config.command == 'k1' else None
    estimate = ctx.constant(design, ctx.error_model, predictor)
    return CommandResult(estimate.to_dict(), title='PoSI constant')


def command_closed_form(ctx: Context) -> CommandResult:
    config = ctx.config
    d = config.d
    if d is None:
        d = ctx.load_matrix().rank
    func = scheffe_K if config.command == 'scheffe' else orth_K
    estimate = func(config.alpha, d, ctx.error_model)
    return CommandResult(estimate.to_dict(), title=f'{config.command} constant')


def bound_inputs(ctx: Context) -> tuple[int, int]:
    """
    Direction count and rank for the sphere-cap bound
    """
    config = ctx.config
    if config.direction_count is not None and config.d is not None:
        return config.direction_count, config.d
    if config.design_path is None:
        p = config.p
        return p * 2**(p - 1), p
    _, design = ctx.load_design()
    count = direction_stream(design, ctx.universe, dedup=config.dedup).count
    return count, design.d


def command_bound(ctx: Context) -> CommandResult:
    config = ctx.config
    if not ctx.error_model.sigma_known:
        logger.warning('the sphere-cap bound is computed for known sigma, df is ignored')
    count, d = bound_inputs(ctx)
    estimate = cap_bonferroni_bound(count, d, config.alpha)
    payload = estimate.to_dict()
    growth = config.cap_a
    if growth is None:
        growth = count**(1 / d)
    payload['details']['ratio'] = estimate.K / math.sqrt(d)
    payload['details']['growth_base'] = growth
    payload['details']['asymptotic_ratio'] = asymptotic_cap_constant(
        growth) if growth > 1 else None
    return CommandResult(payload, title='sphere-cap bound')


def command_intervals(ctx: Context) -> CommandResult:
    config = ctx.config
    X, design = ctx.load_design()
    y, sigma_hat, em = ctx.load_response(X, design)
    model = ModelId.from_members(parse_model(config.model))
    constant = ctx.constant(design, em, config.predictor)
    report = posi_intervals(design, y, sigma_hat, em, model, constant,
                            target=ctx.load_target(design))
    payload = constant.to_dict()
    payload.update(report.to_dict())
    payload['covers_all'] = report.covers_all
    return CommandResult(payload, report.to_frame(), title=f'intervals of model {model}')


def command_spar(ctx: Context) -> CommandResult:
    config = ctx.config
    X, design = ctx.load_design()
    y, sigma_hat, em = ctx.load_response(X, design)
    if config.predictor is not None:
        selection = spar1_select(design, y, sigma_hat, ctx.universe,
                                 config.predictor)
    else:
        selection = spar_select(design, y, sigma_hat, ctx.universe)
    payload = {
        'model': selection.model.members,
        'predictor': selection.predictor,
        'max_abs_t': selection.value,
        'sigma_hat': sigma_hat,
        'df': str(em),
        'd': design.d,
        'p': design.p,
        'universe': str(ctx.universe),
    }
    return CommandResult(payload, title='SPAR selection')


def coverage_constant(ctx: Context, design: CanonicalDesign,
                      em: ErrorModel) -> ConstantEstimate:
    config = ctx.config
    if config.constant == 'scheffe':
        return scheffe_K(config.alpha, design.d, em)
    if config.constant == 'naive':
        return naive_constant(config.alpha, em)
    if config.constant == 'posi':
        return posi_K(design, ctx.universe, config.alpha, em,
                      config.mc_samples, config.seed, ctx.threads, config.dedup)
    return posi1_K(design, ctx.universe, config.predictor, config.alpha, em,
                   config.mc_samples, config.seed, ctx.threads, config.dedup)


def command_coverage(ctx: Context) -> CommandResult:
    config = ctx.config
    _, design = ctx.load_design()
    em = ctx.error_model
    warn_large_universe(design, ctx.universe, config.mc_samples)
    selector = make_selector(config.selector, ctx.universe, config.predictor,
                             config.selector_size, config.selector_config)
    constant = coverage_constant(ctx, design, em)
    # draws of the replications must not overlap the draws of the constant
    report = coverage_experiment(design, ctx.universe, selector, config.alpha,
                                 em, constant, config.replications,
                                 config.seed + 1, ctx.load_target(design),
                                 ctx.threads)
    payload = constant.to_dict()
    payload.update(report.to_dict())
    return CommandResult(payload, report.log, title='coverage')


def command_analyze(ctx: Context) -> CommandResult:
    config = ctx.config
    _, design = ctx.load_design()
    universe = ctx.universe
    directions = direction_stream(design, universe)
    census = orthogonality_census(directions, config.census_tolerance,
                                  ctx.threads)
    deduplicated = direction_stream(design, universe, dedup=True)
    chain = gram_schmidt_chain(design)
    chain_error = float(np.abs(chain @ chain.T - np.eye(chain.shape[0])).max()
                        ) if chain.size else 0.0
    payload = {
        'd': design.d,
        'p': design.p,
        'universe': str(universe),
        'direction_count': directions.count,
        'dedup_count': deduplicated.count,
        'degenerate_pairs': directions.messages.count(),
        'census': census.to_dict(),
        'gram_schmidt_chain': {
            'length': int(chain.shape[0]),
            'orthonormality_error': chain_error,
        },
        'duality': None,
    }
    if design.is_classical and universe.is_unrestricted:
        payload['duality'] = verify_duality(design).to_dict()
    else:
        logger.info('duality check needs d = p and the unrestricted universe, skipped')
    table = pd.DataFrame(sorted(census.histogram.items()),
                         columns=['partners', 'directions'])
    return CommandResult(payload, table, title='direction set analysis')


def command_family(ctx: Context) -> CommandResult:
    config = ctx.config
    if config.family == 'rate':
        r_star, f_star = maximize_rate_function()
        payload = {'family': 'rate', 'r_star': r_star, 'f_max': f_star}
        return CommandResult(payload, title='rate function')
    if config.family == 'exchangeable':
        cells = exchangeable_ratio_cells(config.p_list, config.a_grid,
                                         config.alpha, config.mc_samples,
                                         config.seed, ctx.error_model,
                                         ctx.threads)
        best = cells.loc[cells.groupby('p', sort=False)['ratio'].idxmax()]
        payload = {
            'family': 'exchangeable',
            'alpha': config.alpha,
            'df': str(ctx.error_model),
            'mc_samples': config.mc_samples,
            'seed': config.seed,
            'universe': 'all',
            'cells': cells,
            'sup': best.reset_index(drop=True),
        }
        return CommandResult(payload, cells, title='exchangeable designs')
    grid = config.c_grid or default_c_grid(config.p, config.c_grid_size)
    table = worst_posi1_ratio_table(config.p, grid, config.alpha,
                                    config.mc_samples, config.seed,
                                    ctx.threads)
    best = table.loc[table['ratio'].idxmax()]
    payload = {
        'family': 'worst-posi1',
        'alpha': config.alpha,
        'df': 'inf',
        'mc_samples': config.mc_samples,
        'seed': config.seed,
        'p': config.p,
        'd': config.p,
        'K': float(best['K']),
        'mc_standard_error': float(best['mc_standard_error']),
        'sup_ratio': float(best['ratio']),
        'rows': table,
    }
    return CommandResult(payload, table, title='worst PoSI1 designs')


COMMAND_HANDLERS: dict[str, Callable[[Context], CommandResult]] = {
    'k': command_k,
    'k1': command_k,
    'scheffe': command_closed_form,
    'orth': command_closed_form,
    'bound': command_bound,
    'intervals': command_intervals,
    'spar': command_spar,
    'coverage': command_coverage,
    'analyze': command_analyze,
    'family': command_family,
}


def run(config: RunConfig, streams: Streams | None = None) -> int:
    """
    Runs one command and writes its report

    Args:
        config (RunConfig): config
        streams (Streams | None, optional): input, output and error streams. System streams if not set

    Returns:
        int: exit code, 0 on success
    """
    streams = streams or Streams.system()
    try:
        init_logger(config.log_path,
                    log_level=config.log_level,
                    stream=streams.err)
        validate_config(config)
        ctx = Context(config, streams, resolve_threads(config.threads))
        logger.debug(f'running {config.command} in {ctx.threads} threads')
        result = COMMAND_HANDLERS[config.command](ctx)
        write_result(result, config.output, streams.out)
    except PosiError as e:
        logger.debug(get_traceback(e))
        streams.err.write(f'{APP_NAME} error: {e}\n')
        return e.exit_code
    except ValueError as e:
        # unknown log level
        logger.debug(get_traceback(e))
        streams.err.write(f'{APP_NAME} error: {e}\n')
        return UsageError.exit_code
    return 0


class ArgumentParser(argparse.ArgumentParser):
    """
    Parser that raises UsageError instead of exiting
    """

    def error(self, message):
        raise UsageError(message)


ALIASES = {
    'design_path': ['--design'],
    'response_path': ['--response'],
    'mu_path': ['--mu'],
}
"""
Short flag names of path fields
"""


def _field_type(tp) -> tuple[type, bool]:
    """
    Base type of a field and whether it is a list
    """
    if get_origin(tp) is list:
        return get_args(tp)[0], True
    args = [a for a in get_args(tp) if a is not type(None)]
    if args:
        return _field_type(args[0])
    return tp, False


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog='posikit',
        description='post-selection inference constants and intervals',
        argument_default=argparse.SUPPRESS)
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('family',
                        nargs='?',
                        default=None,
                        choices=FAMILIES,
                        help='Design family of the family command')
    parser.add_argument('--config',
                        dest='config_path',
                        help='YAML config with RunConfig fields, flags override it')
    for f in fields(RunConfig):
        if f.name in ('command', 'family'):
            continue
        base, is_list = _field_type(f.type)
        if base is dict:
            continue
        names = [f'--{f.name.replace("_", "-")}'] + ALIASES.get(f.name, [])
        kwargs = {'dest': f.name, 'help': f.metadata.get('help')}
        if base is bool:
            kwargs['action'] = argparse.BooleanOptionalAction
        else:
            kwargs['type'] = base
            if is_list:
                kwargs['nargs'] = '*'
        parser.add_argument(*names, **kwargs)
    return parser


def parse_args(argv: list[str] | None = None) -> RunConfig:
    """
    Builds RunConfig from command line flags and an optional YAML config

    Args:
        argv (list[str] | None, optional): arguments without the program name

    Returns:
        RunConfig: config, not validated yet
    """
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop('config_path', None)
    if config_path is not None:
        try:
            config = minihydra.to_object(
                minihydra.load_config(config_path, RunConfig))
        except PosiError:
            raise
        except Exception as e:
            raise UsageError(f'bad config {config_path}: {e}')
    else:
        config = RunConfig()
    for key, value in args.items():
        if value is not None:
            setattr(config, key, value)
    return config


def main(argv: list[str] | None = None) -> int:
    """
    Console entrypoint
    """
    streams = Streams.system()
    try:
        config = parse_args(argv)
    except PosiError as e:
        streams.err.write(f'{APP_NAME} error: {e}\n')
        return e.exit_code
    return run(config, streams)


if __name__ == '__main__':
    sys.exit(main())
