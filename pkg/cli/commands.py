"""
The `minikiki` command: compile MiniC sources, run the requested analysis
and print verdicts. Exit codes: 0 successful, 10 failed, 5 inconclusive,
1 for usage and front-end errors.
"""

import logging

import click

from cli.models import DOMAINS, Config
from core.exceptions import MinikikiError
from core.log import configure_logging
from domains.serializers import invariant_to_str
from engine import serializers as engine_serializers
from engine.kiki import verify
from engine.models import Verdict
from memmodel.analysis import build_memory_model
from memmodel.serializers import points_to_to_str
from midend.pipeline import Checks, build_goto, load
from midend.serializers import goto_to_str, properties_to_str
from ssa.serializers import ssa_to_str
from termination import serializers as termination_serializers
from termination.analysis import run_termination_analysis
from unwinder.unwind import start

logger = logging.getLogger(__name__)

EXIT_CODES = {
    Verdict.SUCCESSFUL: 0,
    Verdict.FAILED: 10,
    Verdict.INCONCLUSIVE: 5,
}
USAGE_ERROR = 1


@click.command(name='minikiki', context_settings={'help_option_names': ['-h', '--help']})
@click.argument('files', nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option('--function', default='main', show_default=True, help='Entry function.')
@click.option('--havoc', is_flag=True, help='No invariants: loops havoc what they write.')
@click.option('--intervals', is_flag=True, help='Interval invariants.')
@click.option('--zones', is_flag=True, help='Zone (difference bound) invariants.')
@click.option('--octagons', is_flag=True, help='Octagon invariants.')
@click.option('--heap', is_flag=True, help='Add the shape domain for heap pointers.')
@click.option('--values-refine', is_flag=True,
              help='Try intervals, zones, then octagons, with symbolic paths.')
@click.option('--k-induction', is_flag=True, help='Grow the unwinding with k-induction steps.')
@click.option('--incremental-bmc', is_flag=True, help='Bounded model checking only.')
@click.option('--termination', is_flag=True, help='Prove termination of the entry function.')
@click.option('--nontermination', is_flag=True, help='Look for non-terminating executions.')
@click.option('--trace', is_flag=True, help='Print counterexample traces.')
@click.option('--signed-overflow-check', is_flag=True, help='Check signed arithmetic for overflow.')
@click.option('--bounds-check', is_flag=True, help='Check array accesses against their bounds.')
@click.option('--pointer-check', is_flag=True, help='Check dereferences for NULL and freed memory.')
@click.option('--memory-leak-check', is_flag=True, help='Check that allocations are freed.')
@click.option('--unwind-max', type=click.IntRange(min=1), default=None,
              help='Largest unwinding depth to try.')
@click.option('--solver-restart-every', type=click.IntRange(min=0), default=None,
              help='Rebuild the SAT solver every N calls, dropping retired clauses (0: never).')
@click.option('--show-goto', is_flag=True, help='Print the instrumented GOTO program and stop.')
@click.option('--show-properties', is_flag=True, help='List the properties and stop.')
@click.option('--show-points-to', is_flag=True, help='Print the points-to analysis and stop.')
@click.option('--show-ssa', is_flag=True, help='Print the depth-1 SSA form and stop.')
@click.option('--show-invariants', is_flag=True, help='Print the last invariant after verifying.')
@click.option('--dump-dimacs', type=click.Path(dir_okay=False), default=None,
              help='Write the final clause set to this file.')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help='Override LOG_LEVEL for this run.')
@click.pass_context
def minikiki(ctx, files, **flags):
    """Verify the MiniC program in FILES."""
    if not files:
        click.echo(ctx.get_help())
        return USAGE_ERROR
    configure_logging(flags.pop('log_level'))
    checks = Checks(overflow=flags.pop('signed_overflow_check'), bounds=flags.pop('bounds_check'),
                    pointer=flags.pop('pointer_check'), leak=flags.pop('memory_leak_check'))
    domains = tuple(d for d in DOMAINS if flags.pop(d))
    config = Config(files=files, domains=domains, checks=checks, **flags).validate()
    return run(config)


def run(config):
    program = build_goto(load(config.files, config.function), config.checks)
    if config.show_goto:
        click.echo(goto_to_str(program), nl=False)
        return 0
    if config.show_properties:
        click.echo(properties_to_str(program), nl=False)
        return 0
    if config.show_points_to:
        click.echo(points_to_to_str(program, build_memory_model(program)), nl=False)
        return 0
    if config.show_ssa:
        unwound = start(program)
        with unwound.solver:
            click.echo(ssa_to_str(unwound.form), nl=False)
        return 0
    options = config.engine_options()
    if config.analyses_termination:
        result = run_termination_analysis(program, options, config.termination, config.nontermination)
        click.echo(termination_serializers.result_to_str(program, result, config.trace), nl=False)
        return EXIT_CODES[termination_serializers.VERDICTS[result.verdict]]
    result = verify(program, options)
    click.echo(engine_serializers.result_to_str(program, result, config.trace), nl=False)
    if config.show_invariants:
        click.echo(invariant_to_str(result.form, result.invariant), nl=False)
    if config.dump_dimacs:
        result.solver.dump_dimacs(config.dump_dimacs)
        logger.info('clauses written to %s', config.dump_dimacs)
    return EXIT_CODES[result.verdict]


def main(argv=None):
    """Runs the command and returns its exit code instead of exiting."""
    try:
        return minikiki.main(args=argv, prog_name='minikiki', standalone_mode=False)
    except click.UsageError as e:
        click.echo(f'minikiki: error: {e.format_message()}', err=True)
        return USAGE_ERROR
    except click.Abort:
        return USAGE_ERROR
    except MinikikiError as e:
        click.echo(f'minikiki: error: {e}', err=True)
        return USAGE_ERROR
