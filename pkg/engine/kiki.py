"""
The verification loop: one solver, one unwinding that grows by a copy per
pass, and at every depth an invariant, an inductive step and a bounded
counterexample search.

Facts that only hold at one depth (the invariant, the property assumptions
of the inductive step, the initial-state restriction and the error
disjunction) go in under assumption literals that are retired when the
unwinding grows.
"""

import dataclasses
import logging

from core import settings
from core.exceptions import ReplayMismatch
from domains.models import PathInvariant
from domains.paths import infer_with_symbolic_paths
from domains.strategy import InferenceContext, infer_invariant
from domains.templates import invariant_constraint, make_template
from engine.models import EngineOptions, EngineResult, KikiState, Mode, Status
from engine.trace import extract_trace, replay
from memmodel.analysis import build_memory_model
from midend.models import PropertyCategory
from solver import models as bv
from solver.instance import SolveResult, SolverInstance
from unwinder.unwind import active_assumptions, start, unwind

logger = logging.getLogger(__name__)

DOMAIN_LADDER = ('intervals', 'zones', 'octagons')


def prepare(program, options=None, statuses=None, memory=None):
    """A state at depth 1; `statuses` carries verdicts an earlier run settled."""
    options = options or EngineOptions()
    unwound = start(program, memory or build_memory_model(program),
                    SolverInstance(restart_every=options.restart_every))
    state = KikiState(unwound, options)
    state.statuses = {p.id: Status.UNKNOWN for p in program.properties}
    for pid, status in (statuses or {}).items():
        if pid in state.statuses:
            state.statuses[pid] = status
    if program.loops():
        # leaks are only decided for loop-free programs
        state.unchecked = {p.id for p in program.properties if p.category == PropertyCategory.MEMORY_LEAK}
    return state


# Terms

def init_term(form):
    """Every loop instance entered from its pre-loop state: the bounded, exact part."""
    return bv.all_of(bv.not_(inst.loop_select) for inst in form.instances)


def _in_last_copy(assertion):
    inst = assertion.instance
    return inst is None or assertion.copy == len(inst.copies)


def property_assumptions(state):
    """Non-failed properties hold in every copy but the last of a loop instance entered from a back edge."""
    terms = []
    for a in state.form.assertions:
        if state.statuses.get(a.property_id) == Status.FAILURE or _in_last_copy(a):
            continue
        terms.append(bv.implies(a.instance.loop_select, bv.not_(a.violation)))
    return bv.all_of(terms)


def error_term(state, pid):
    out = []
    for a in state.form.assertions_for(pid):
        if _in_last_copy(a):
            out.append(a.violation)
        else:
            out.append(bv.and_(bv.not_(a.instance.loop_select), a.violation))
    return bv.any_of(out)


def last_back_edges(form):
    return bv.any_of(inst.last.latch_guard for inst in form.instances)


# Literals

def _literal(state, term, scoped=True):
    act = state.solver.new_assumption()
    state.solver.add_under(act, term)
    if scoped:
        state.scoped.append(act)
    return act


def _retire_scoped(state):
    for act in state.scoped + list(state.error_literals.values()):
        state.solver.retire(act)
    state.scoped = []
    state.error_literals = {}


def error_literal(state, pids=None):
    """The error literal of the current depth for `pids`, by default the properties still open."""
    key = (state.k, tuple(state.unknown() if pids is None else pids))
    act = state.error_literals.get(key)
    if act is None:
        for stale in state.error_literals.values():
            state.solver.retire(stale)
        state.error_literals = {}
        act = _literal(state, bv.any_of(error_term(state, pid) for pid in key[1]), scoped=False)
        state.error_literals[key] = act
    return act


def _depth_literals(state):
    """(init, property assumptions) for the current depth, created once per depth."""
    if not state.depth_literals or state.depth_literals[0] != state.k:
        state.depth_literals = (state.k, _literal(state, init_term(state.form)),
                                _literal(state, property_assumptions(state)))
    return state.depth_literals[1:]


def _solve(state, *literals):
    state.checks += 1
    assumptions = active_assumptions(state.unwound) + [lit for lit in literals if lit is not None]
    return state.solver.solve(assumptions)


# Checks

def check_init_err(state):
    """Bounded search for a violation at depth 1, before any invariant is in play."""
    if state.k != 1:
        raise ValueError(f'the initial check runs at depth 1, not {state.k}')
    return check_counterexample(state)


def infer_kinv(state):
    """An invariant of the current unwinding, or None for true."""
    options = state.options
    if options.mode != Mode.KIKI or options.domain == 'havoc':
        return None
    form = state.form
    template = make_template(form, options.domain, options.heap)
    if not template.rows:
        return None
    _, assumed = _depth_literals(state)
    ctx = InferenceContext(form, state.solver, active_assumptions(state.unwound) + [assumed])
    invariant = None
    if options.symbolic_paths:
        invariant = infer_with_symbolic_paths(template, ctx, options.strategy)
    if invariant is None:
        invariant = infer_invariant(template, ctx, options.strategy)
    logger.info('k=%d: %s invariant after %d inference calls', state.k, template.domain, ctx.calls)
    return invariant


def check_safety(state, invariant):
    """UNSAT means every open property holds: no error follows the assumed prefix under the invariant."""
    _, assumed = _depth_literals(state)
    inv = _literal(state, invariant_constraint(state.form, invariant))
    result, model = _solve(state, assumed, inv, error_literal(state))
    logger.info('k=%d: inductive step %s', state.k, result.value)
    if result == SolveResult.UNSAT:
        for pid in state.unknown():
            state.settle(pid, Status.SUCCESS)
    return result, model


def check_counterexample(state):
    """
    Bounded search from the initial state. Every property a model violates
    is settled as FAILURE once its trace replays; one whose trace does not
    replay drops out of the search for this depth and stays UNKNOWN. The
    search repeats until UNSAT or until no property is left to look for.
    """
    init, _ = _depth_literals(state)
    state.spurious = set()
    result, exhausted = SolveResult.UNSAT, True
    while state.searchable():
        result, model = _solve(state, init, error_literal(state, state.searchable()))
        logger.info('k=%d: counterexample check %s', state.k, result.value)
        if result != SolveResult.SAT:
            exhausted = result == SolveResult.UNSAT
            break
        spurious = len(state.spurious)
        if not _record_failures(state, model) and len(state.spurious) == spurious:
            exhausted = False
            break
    if exhausted:
        state.bmc_depth = state.k
    return result


def _record_failures(state, model):
    """Settles the replaying violations of `model`; returns the properties settled."""
    found = []
    for pid in state.searchable():
        if not model.value(error_term(state, pid), strict=False):
            continue
        trace = extract_trace(state.form, model, pid)
        try:
            replay(state.program, trace)
        except ReplayMismatch as e:
            logger.warning('k=%d: no concrete run for %s: %s', state.k, pid, e)
            state.spurious.add(pid)
            continue
        state.settle(pid, Status.FAILURE)
        state.traces[pid] = trace
        found.append(pid)
        logger.info('k=%d: %s violated', state.k, pid)
    return found


def check_complete(state):
    """True when no run from the initial state reaches the back edge of a last copy."""
    if not state.form.instances:
        state.complete = True
        return True
    init, _ = _depth_literals(state)
    reach = _literal(state, last_back_edges(state.form))
    result, _ = _solve(state, init, reach)
    state.complete = result == SolveResult.UNSAT
    if state.complete:
        logger.info('k=%d: every loop exits within the unwinding', state.k)
    return state.complete


# Driver

def invariant_signature(invariant):
    """The bounds of an invariant, comparable across depths."""
    if invariant is None:
        return ()
    if isinstance(invariant, PathInvariant):
        return tuple((str(path), tuple(value)) for path, value in invariant.entries)
    return tuple(invariant.value)


def verify_depth(state):
    """One pass at the current depth. Once the verdict is FAILED only the bounded checks run."""
    if state.options.mode != Mode.IBMC and not state.decided:
        state.invariant = infer_kinv(state)
        result, _ = check_safety(state, state.invariant)
        if result == SolveResult.UNSAT:
            return
    if state.bmc_depth != state.k:
        check_counterexample(state)
    if state.bmc_depth == state.k and state.searchable() and check_complete(state):
        for pid in state.searchable():
            state.settle(pid, Status.SUCCESS)


def _stabilised(state, before):
    """Counts depths in a row where neither the invariant nor any status moved."""
    signature = invariant_signature(state.invariant)
    if signature == state.signature and state.statuses == before:
        state.stable += 1
    else:
        state.stable = 0
    state.signature = signature
    return bool(state.options.stable_depths) and state.stable >= state.options.stable_depths


def run(state):
    """Grows the unwinding until every property is settled or the depth bound is reached."""
    options = state.options
    unwind_max = options.unwind_max or settings.UNWIND_MAX
    logger.info('verifying %d properties, mode %s, domain %s', len(state.statuses),
                options.mode.value, options.domain)
    if state.unknown():
        check_init_err(state)
    while state.unknown():
        before = dict(state.statuses)
        verify_depth(state)
        if not state.unknown() or options.one_shot or state.k >= unwind_max:
            break
        if state.decided:
            logger.info('k=%d: verdict decided, %d properties left open', state.k, len(state.unknown()))
            break
        if _stabilised(state, before):
            logger.info('k=%d: %s invariant unchanged for %d depths', state.k, options.domain, state.stable)
            break
        _retire_scoped(state)
        unwind(state.unwound, state.k + 1)
    logger.info('finished at depth %d after %d checks: %s', state.k, state.checks, state.verdict.value)
    return EngineResult(dict(state.statuses), dict(state.traces), state.k, state.invariant, state.form,
                        state.solver)


def verify(program, options=None):
    """
    Runs the loop once, or once per domain of the ladder while properties
    stay open. Every step but the last moves on once its invariant stops
    changing.
    """
    options = options or EngineOptions()
    if not options.values_refine:
        return run(prepare(program, options))
    memory = build_memory_model(program)
    statuses, traces, result = None, {}, None
    for n, domain in enumerate(DOMAIN_LADDER):
        stable = settings.LADDER_STABLE_DEPTHS if n + 1 < len(DOMAIN_LADDER) else options.stable_depths
        step = dataclasses.replace(options, domain=domain, symbolic_paths=True, values_refine=False,
                                   stable_depths=stable)
        state = prepare(program, step, statuses, memory)
        result = run(state)
        statuses = result.statuses
        traces.update(result.traces)
        if not state.unknown() or state.decided:
            break
        logger.info('%s left properties open; refining', domain)
    result.traces = traces
    return result
