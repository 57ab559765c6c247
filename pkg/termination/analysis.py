"""
Termination and non-termination, run side by side.

Each side owns its unwinding and solver. The first conclusive answer goes
into a VerdictCell and tells the other side to stop at its next check.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

from core import settings
from core.exceptions import MinikikiError, ResourceLimit
from domains.strategy import InferenceContext, infer_invariant
from domains.templates import invariant_constraint, make_template
from engine.models import EngineOptions
from memmodel.analysis import build_memory_model
from solver.instance import SolverInstance
from termination.models import RecurrenceWitness, TerminationResult, TerminationVerdict, VerdictCell
from termination.nontermination import exact_instances, find_arith_progression, find_singleton_recurrence
from termination.ranking import synthesize_ranking, verify_ranking
from unwinder.unwind import active_assumptions, start, unwind

logger = logging.getLogger(__name__)

UNKNOWN = TerminationResult(TerminationVerdict.UNKNOWN)


def _stopped(stop):
    return stop is not None and stop.is_set()


def prove_termination(program, options=None, stop=None, memory=None):
    """Ranks every loop of the depth-1 unwinding under an inferred invariant."""
    options = options or EngineOptions()
    unwound = start(program, memory or build_memory_model(program),
                    SolverInstance(restart_every=options.restart_every))
    form = unwound.form
    if not form.instances:
        logger.info('no loops; terminating')
        return TerminationResult(TerminationVerdict.TERMINATING, source='ranking')
    ctx = InferenceContext(form, unwound.solver, active_assumptions(unwound))
    invariant = None
    if options.domain != 'havoc':
        template = make_template(form, options.domain, options.heap)
        if template.rows:
            invariant = infer_invariant(template, ctx, options.strategy)
    with ctx.assuming(invariant_constraint(form, invariant)):
        argument = synthesize_ranking(ctx, stop)
        if _stopped(stop) or not argument.is_complete:
            return TerminationResult(TerminationVerdict.UNKNOWN, argument, source='ranking')
        if not verify_ranking(argument, ctx):
            return TerminationResult(TerminationVerdict.UNKNOWN, argument, source='ranking')
    logger.info('every loop ranked after %d inference calls', ctx.calls)
    return TerminationResult(TerminationVerdict.TERMINATING, argument, source='ranking')


def prove_nontermination(program, options=None, stop=None, memory=None, max_depth=None):
    """
    Recurrence rounds at growing depth; once the first rounds are spent,
    each exact loop is also tried as an arithmetic progression.
    """
    options = options or EngineOptions()
    unwound = start(program, memory or build_memory_model(program),
                    SolverInstance(restart_every=options.restart_every))
    if not unwound.form.instances:
        return UNKNOWN
    max_depth = min(max_depth or settings.NONTERM_MAX_DEPTH, depth_bound(unwound.form))
    try:
        while True:
            k = unwound.depth
            witness = find_singleton_recurrence(unwound, k)
            if witness is None and k == settings.NONTERM_FIRST_ROUNDS:
                for inst in exact_instances(unwound.form):
                    witness = find_arith_progression(unwound, inst)
                    if witness is not None or _stopped(stop):
                        break
            if witness is not None:
                return TerminationResult(TerminationVerdict.NONTERMINATING, witness=witness,
                                         source=_source(witness))
            if k >= max_depth or _stopped(stop):
                return UNKNOWN
            unwind(unwound, k + 1)
    except ResourceLimit as e:
        logger.warning('non-termination search stopped: %s', e)
        return UNKNOWN


def depth_bound(form):
    """A loop over W bits of state repeats within 2**W iterations."""
    widths = [c.type.width for c in form.universe.numeric_cells]
    return 1 << max(widths) if widths else 1


def _source(witness):
    return 'recurrence' if isinstance(witness, RecurrenceWitness) else 'progression'


def _contradiction(results):
    verdicts = {r.verdict for r in results if r.verdict != TerminationVerdict.UNKNOWN}
    return len(verdicts) > 1


def run_termination_analysis(program, options=None, termination=True, nontermination=True,
                             parallel=True):
    """The first conclusive answer of the enabled sides; UNKNOWN when neither has one."""
    options = options or EngineOptions()
    memory = build_memory_model(program)
    cell = VerdictCell()
    sides = []
    if termination:
        sides.append(prove_termination)
    if nontermination:
        sides.append(prove_nontermination)

    def side(prove):
        result = prove(program, options, cell.done, memory)
        cell.offer(result)
        return result

    if parallel and len(sides) > 1:
        with ThreadPoolExecutor(max_workers=len(sides), thread_name_prefix='termination') as pool:
            results = list(pool.map(side, sides))
    else:
        results = []
        for prove in sides:
            results.append(side(prove))
            if cell.done.is_set():
                break
    if _contradiction(results):
        raise MinikikiError('termination and non-termination analyses disagree')
    result = cell.result or UNKNOWN
    logger.info('termination verdict: %s (%s)', result.verdict.value, result.source or 'none')
    return result
