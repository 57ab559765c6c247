"""
Non-termination witnesses over the exact part of an unwinding (every loop
entered from its pre-loop state).

A singleton recurrence is a loop-head state that some run reaches twice.
An arithmetic progression is a reachable head state x from which every
iteration ends at x + c, for every state of the orbit x + j·c; since the
orbit never leaves the loop, the loop never exits.
"""

import copy
import logging
from itertools import combinations

from core import settings
from core.exceptions import ResourceLimit
from domains.templates import display_name
from engine.models import Trace
from engine.trace import follow, render_value
from frontend.interpreter import StopRun
from midend.instrument import FREED_POINTER
from midend.interpreter import GotoInterpreter
from solver import models as bv
from solver.instance import SolveResult
from termination.models import ProgressionWitness, RecurrenceWitness
from unwinder.unwind import active_assumptions

logger = logging.getLogger(__name__)

TRACE_ID = 'termination'


def exact_instances(form):
    """Instances inside the first iteration of every enclosing loop; their head visits are counted globally."""
    return [inst for inst in form.instances if all(c == 1 for c in inst.ctx)]


def head_states(inst):
    """(guard, state) of every head visit the unwinding encodes; the last one is the back edge of the last copy."""
    out = [(c.entry_guard, c.entry_state) for c in inst.copies]
    out.append((inst.last.latch_guard, inst.last.latch_state))
    return out


def same_state(a, b):
    return bv.all_of(bv.eq(a[cell], b[cell]) for cell in a if a[cell] is not b[cell])


def exact_prefix(form, keep=None):
    return bv.all_of(bv.not_(inst.loop_select) for inst in form.instances if inst is not keep)


def literal_of(sort, value):
    if sort.is_bool:
        return bv.boolean(value)
    if sort.is_array:
        return bv.array_const(value, sort.width)
    return bv.const(value, sort.width)


def visible_state(form, state, model):
    """Display name -> rendered value for the program variables in `state`."""
    universe = form.universe
    out = {}
    for cell in sorted(state):
        info = universe.cell(cell)
        if info.owner is not None or info.flag or cell == FREED_POINTER:
            continue
        out[display_name(form, cell)] = render_value(form, model.value(state[cell], strict=False),
                                                     info.type)
    return out


def _solve(unwound, *terms):
    solver = unwound.solver
    act = solver.new_assumption()
    for term in terms:
        solver.add_under(act, term)
    try:
        result, model = solver.solve(active_assumptions(unwound) + [act])
    finally:
        solver.retire(act)
    if result == SolveResult.UNKNOWN:
        raise ResourceLimit('solver gave up during the non-termination search')
    return result, model


# Concrete check

class HeadRecorder(GotoInterpreter):
    """Copies the store and heap at every visit of one loop head; stops after `visits` of them."""

    def __init__(self, program, head, visits, inputs=()):
        super().__init__(program, inputs)
        self.head = head
        self.visits = visits
        self.states = []

    def execute(self, pc):
        if pc == self.head:
            heap = {key: (obj.value, obj.freed) for key, obj in self.memory.heap.items()}
            store = {k: v for k, v in self.memory.store.items() if k != FREED_POINTER}
            self.states.append(copy.deepcopy((store, heap)))
            if len(self.states) >= self.visits:
                raise StopRun('recorded')
        return super().execute(pc)


def head_visits(program, head, count, inputs):
    recorder = HeadRecorder(program, head, count, inputs)
    recorder.run()
    return recorder.states


def _target_visit(inst, number):
    """Key of the visit that reaches head visit `number` of `inst`."""
    if number <= len(inst.copies):
        return inst.key_prefix + ((inst.head, number), (inst.head,))
    last = len(inst.copies)
    return inst.key_prefix + ((inst.head, last), (inst.loop.latch,))


def witness_trace(form, model, inst, number):
    trace = Trace(TRACE_ID, depth=form.depth)
    target = _target_visit(inst, number)
    follow(form, model, trace, lambda visit: visit.key == target)
    return trace


# Singleton recurrence

def find_singleton_recurrence(unwound, k=None):
    """A head state some exact run visits twice within the unwinding, replay-checked."""
    form = unwound.form
    if k is not None and k != form.depth:
        raise ValueError(f'the unwinding is at depth {form.depth}, not {k}')
    for inst in exact_instances(form):
        states = head_states(inst)
        pairs = list(combinations(range(len(states)), 2))
        options = [bv.and_(states[b][0], same_state(states[a][1], states[b][1])) for a, b in pairs]
        result, model = _solve(unwound, exact_prefix(form), bv.any_of(options))
        if result != SolveResult.SAT:
            continue
        a, b = next(p for p, term in zip(pairs, options) if model.value(term, strict=False))
        trace = witness_trace(form, model, inst, b + 1)
        witness = RecurrenceWitness(inst.head, visible_state(form, states[a][1], model), a, b - a,
                                    form.depth, trace)
        if recurrence_replays(form.program, witness):
            logger.info('loop at %d revisits a head state after %d iteration(s)', inst.head, b - a)
            return witness
        logger.warning('recurrence at loop %d does not replay; ignored', inst.head)
    return None


def recurrence_replays(program, witness):
    first = witness.prefix + 1
    states = head_visits(program, witness.head, first + witness.period, witness.trace.inputs)
    if len(states) < first + witness.period:
        return False
    return states[first - 1] == states[first + witness.period - 1]


# Arithmetic progression

def progression_cells(form, inst):
    """The cells the loop writes, or None unless they are all plain integer variables."""
    universe = form.universe
    cells = []
    for name in inst.modified:
        cell = universe.cell(name)
        if cell.owner is not None or cell.flag or name == FREED_POINTER or not cell.type.is_integer:
            return None
        cells.append(name)
    return cells or None


def _orbit_breaks(form, inst, cells, start, deltas):
    """Some state start + j·deltas does not end its iteration at itself + deltas."""
    first = inst.copies[0]
    width = max(start[c].sort.width for c in cells)
    step = bv.symbol(f'orbit#{inst.head}.{form.depth}', bv.bv_sort(width))
    terms = [inst.pre_guard, inst.loop_select]
    for cell, value in start.items():
        if cell in inst.loopback:
            w = value.sort.width
            origin = bv.add(value, bv.mul(bv.resize(step, w, False), bv.const(deltas[cell], w)))
            terms.append(bv.eq(inst.loopback[cell], origin))
        elif cell in inst.pre_state:
            terms.append(bv.eq(inst.pre_state[cell], value))
    moved = bv.all_of(bv.eq(first.latch_state[c], bv.add(first.entry_state[c],
                                                          bv.const(deltas[c], first.entry_state[c].width)))
                      for c in cells)
    terms.append(bv.not_(bv.and_(first.latch_guard, moved)))
    return terms


def find_arith_progression(unwound, inst, cap=None):
    form = unwound.form
    cap = settings.PROGRESSION_EXCLUSION_CAP if cap is None else cap
    cells = progression_cells(form, inst)
    if cells is None:
        return None
    excluded = []
    for _ in range(cap):
        options = []
        for c in inst.copies:
            fresh = bv.all_of(bv.not_(same_state(c.entry_state, seen)) for seen in excluded)
            options.append(bv.and_(c.entry_guard, c.latch_guard, fresh))
        result, model = _solve(unwound, exact_prefix(form), bv.any_of(options))
        if result != SolveResult.SAT:
            logger.info('loop at %d: every reachable head state excluded', inst.head)
            return None
        number = next(i for i, term in enumerate(options) if model.value(term, strict=False)) + 1
        entry = inst.copies[number - 1]
        start = {cell: literal_of(term.sort, model.value(term, strict=False))
                 for cell, term in entry.entry_state.items()}
        deltas = {cell: bv.to_signed(model.value(bv.sub(entry.latch_state[cell], entry.entry_state[cell]),
                                                 strict=False), entry.entry_state[cell].width)
                  for cell in cells}
        breaks, _ = _solve(unwound, exact_prefix(form, keep=inst), *_orbit_breaks(form, inst, cells, start,
                                                                                  deltas))
        if breaks == SolveResult.UNSAT:
            trace = witness_trace(form, model, inst, number)
            witness = ProgressionWitness(inst.head, {display_name(form, c): d for c, d in deltas.items()},
                                         visible_state(form, entry.entry_state, model), form.depth, trace)
            if progression_replays(form, witness, cells, deltas, number):
                logger.info('loop at %d adds %s per iteration forever', inst.head, witness.deltas)
                return witness
            logger.warning('progression at loop %d does not replay; ignored', inst.head)
            return None
        excluded.append(start)
    logger.info('loop at %d: exclusion cap of %d reached', inst.head, cap)
    return None


def progression_replays(form, witness, cells, deltas, number, iterations=3):
    states = head_visits(form.program, witness.head, number + iterations, witness.trace.inputs)
    if len(states) < number + iterations:
        return False
    universe = form.universe
    for before, after in zip(states[number - 1:], states[number:]):
        for cell in cells:
            t = universe.cell(cell).type
            uid, _, name = cell.partition('.')
            old, new = before[0].get(uid), after[0].get(uid)
            if name:
                old, new = old[name], new[name]
            if t.normalize(old + deltas[cell]) != new:
                return False
    return True
