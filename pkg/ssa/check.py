"""
Structural checks on an SsaForm and the concrete-run check that tests its
over-approximation.

A recorded GOTO run is laid over the unwinding: every loop execution maps
its last `depth` head visits onto the copies of the matching loop instance.
When it ran longer, the loop-select guard is set and the loop-back symbols
take the values the run had at the first mapped head visit. Guards of the
mapped visits, the inputs they consumed, the values they assigned and the
outcome of their assertions are pinned, and the solver decides whether the
rest of the SSA can agree.
"""

import copy
import logging
from dataclasses import dataclass, field

from core.exceptions import MalformedSsa
from frontend.interpreter import Ref, input_value
from midend.instrument import FREED_POINTER
from midend.interpreter import GotoInterpreter
from solver import models as bv
from solver.instance import SolveResult, SolverInstance

logger = logging.getLogger(__name__)

_MISSING = object()


def check_well_formed(form):
    """Raises MalformedSsa unless every symbol is declared and definitions are acyclic."""
    definitions = dict(form.definitions)
    for merge in form.merges.values():
        for sym, value in merge.values():
            definitions[sym.payload] = value
    for term in form.all_constraints():
        for sym in bv.symbols_of(term):
            if sym.payload not in form.symbols:
                raise MalformedSsa(f'constraint mentions undeclared symbol {sym.payload}')
    done = set()
    active = set()
    for root in definitions:
        if root in done:
            continue
        stack = [(root, iter(_uses(definitions[root], definitions)))]
        active.add(root)
        while stack:
            name, pending = stack[-1]
            child = next(pending, None)
            if child is None:
                stack.pop()
                active.discard(name)
                done.add(name)
            elif child in active:
                raise MalformedSsa(f'cyclic definition through {child}')
            elif child not in done:
                active.add(child)
                stack.append((child, iter(_uses(definitions[child], definitions))))
    logger.debug('SSA well formed: %d definitions', len(definitions))


def _uses(value, definitions):
    return [s.payload for s in bv.symbols_of(value) if s.payload in definitions]


# Concrete runs

@dataclass
class RecordedRun:
    result: object
    snapshots: dict = field(default_factory=dict)

    @property
    def path(self):
        return self.result.path


class RecordingInterpreter(GotoInterpreter):
    """Keeps a copy of the store at every loop-head visit, keyed by path position."""

    def __init__(self, program, inputs=(), step_limit=None):
        super().__init__(program, inputs, step_limit, record=True)
        self.heads = {loop.head for loop in program.loops()}
        self.snapshots = {}

    def execute(self, pc):
        if pc in self.heads:
            self.snapshots[len(self.path)] = copy.deepcopy(self.memory.store)
        return super().execute(pc)


def record_run(program, inputs=(), step_limit=None):
    interpreter = RecordingInterpreter(program, inputs, step_limit)
    return RecordedRun(interpreter.run(), interpreter.snapshots)


class RunMapping:
    """Pins that lay one recorded run over an SsaForm."""

    def __init__(self, form, run):
        self.form = form
        self.run = run
        self.program = form.program
        self.loops = self.program.loops()
        self.universe = form.universe
        self.pins = []
        self.assertions = {a.key: a for a in form.assertions}

    def build(self):
        self.map_region(list(range(len(self.run.path))), [lp for lp in self.loops if lp.parent is None],
                        (), ())
        return self.pins

    def map_region(self, positions, loops, prefix, ctx):
        path = self.run.path
        heads = {loop.head: loop for loop in loops}
        i = 0
        while i < len(positions):
            index = path[positions[i]].index
            loop = heads.get(index)
            if loop is None:
                self.map_step(positions[i], prefix + ((index,),))
                i += 1
                continue
            j = i
            while j < len(positions) and loop.contains(path[positions[j]].index):
                j += 1
            visits = []
            for pos in positions[i:j]:
                if path[pos].index == loop.head:
                    visits.append([])
                visits[-1].append(pos)
            self.map_execution(loop, visits, prefix, ctx)
            i = j

    def map_execution(self, loop, visits, prefix, ctx):
        inst = self.form.instance(loop.head, ctx)
        if inst is None:
            raise MalformedSsa(f'no loop instance at {loop.head} for copies {ctx}')
        depth = self.form.depth
        window = visits[-depth:]
        looped = len(visits) > depth
        self.pins.append(inst.loop_select if looped else bv.not_(inst.loop_select))
        if looped:
            store = self.run.snapshots[window[0][0]]
            for cell, lb in inst.loopback.items():
                info = self.universe.cell(cell)
                if info.owner is not None or info.flag or cell == FREED_POINTER:
                    continue
                value = self.cell_value(store, cell)
                if value is _MISSING:
                    continue
                term = self.concrete(lb.sort, value, info.type)
                if term is not None:
                    self.pins.append(bv.eq(lb, term))
        for number, positions in enumerate(window, start=1):
            self.map_region(positions, loop.children, prefix + ((loop.head, number),), ctx + (number,))

    def map_step(self, position, key):
        step = self.run.path[position]
        visit = self.form.visits.get(key)
        if visit is None:
            raise MalformedSsa(f'run visits {key} which the SSA does not encode')
        self.pins.append(visit.guard)
        raw = list(step.inputs)
        for record in visit.inputs:
            if record.condition is not None and len(raw) < len(record.symbols):
                continue
            for term, t in record.symbols:
                if not raw:
                    break
                value = input_value(t, raw.pop(0))
                pinned = self.concrete(term.sort, value, t)
                if pinned is not None:
                    self.pins.append(bv.eq(term, pinned))
        instr = self.program.instructions[step.index]
        if instr.kind.value == 'ASSIGN' and visit.assigned and step.value is not None:
            _, term, t = visit.assigned[-1]
            pinned = self.concrete(term.sort, step.value, t)
            if pinned is not None:
                self.pins.append(bv.eq(term, pinned))
        assertion = self.assertions.get(key)
        if assertion is not None and step.value is not None:
            self.pins.append(assertion.cond if step.value else bv.not_(assertion.cond))

    def cell_value(self, store, cell):
        uid, _, name = cell.partition('.')
        if uid not in store:
            return _MISSING
        value = store[uid]
        if name:
            return value.get(name, _MISSING) if isinstance(value, dict) else _MISSING
        return value

    def concrete(self, sort, value, t):
        """The term for a concrete value, None when it has no fixed encoding."""
        if value is None and t.is_pointer:
            return bv.addr(0, sort.width)
        if isinstance(value, Ref):
            if value.kind == 'var':
                obj = next((o for o in self.universe.static_objects() if o.name == value.key), None)
                return None if obj is None else bv.addr(self.universe.tag(obj), sort.width)
            if value.kind == 'unknown':
                return bv.addr(self.universe.tag(self.universe.unknown), sort.width)
            return None
        if sort.is_bool:
            return bv.boolean(value)
        if sort.is_array:
            if not isinstance(value, list):
                return None
            return bv.array_const([int(v) for v in value], sort.width)
        if isinstance(value, (bool, int)):
            return bv.const(int(value), sort.width)
        return None


def concrete_check(form, run):
    """True iff the recorded run extends to a model of the SSA constraints."""
    pins = RunMapping(form, run).build()
    with SolverInstance() as solver:
        for term in form.all_constraints():
            solver.add(term)
        for term in pins:
            solver.add(term)
        outcome, _ = solver.solve()
    logger.debug('concrete check over %d steps: %s', len(run.path), outcome.value)
    return outcome == SolveResult.SAT
