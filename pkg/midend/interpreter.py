"""
Concrete execution of a GotoProgram.

Shares values, memory and input handling with the AST interpreter. Reads
never fail: a null or out-of-bounds read yields zero and a write to one is
dropped, because the instrumented assertions report those errors. The
freed-object tracker is not simulated through its nondeterministic choices;
comparing a pointer with it asks whether the pointer targets a freed object,
which is the outcome some choice sequence produces.
"""

import logging
from dataclasses import dataclass, field

from core import settings
from frontend import models as m
from frontend.interpreter import (UNKNOWN, ConcreteMemory, HeapObject, InputStream, Ref, StopRun,
                                  arithmetic, compare, convert, fits, havoc_value, input_value,
                                  zero_value)
from midend.instrument import FREED_POINTER
from midend.models import InstrKind

logger = logging.getLogger(__name__)


@dataclass
class Step:
    index: int
    value: object = None
    inputs: tuple = ()


@dataclass
class GotoRunResult:
    status: str
    store: dict
    assertions: list = field(default_factory=list)
    path: list = field(default_factory=list)
    inputs_used: int = 0
    steps: int = 0

    def failed(self):
        """Ids of the properties violated at least once, in first-violation order."""
        seen = []
        for pid, ok in self.assertions:
            if not ok and pid not in seen:
                seen.append(pid)
        return seen

    def violates(self, pid):
        return pid in self.failed()


class GotoInterpreter:

    def __init__(self, program, inputs=(), step_limit=None, record=False, stop_at=None):
        self.program = program
        self.inputs = inputs if isinstance(inputs, InputStream) else InputStream(inputs)
        self.step_limit = step_limit or settings.STEP_LIMIT
        self.record = record
        self.stop_at = stop_at
        self.memory = ConcreteMemory()
        self.assertions = []
        self.path = []
        self.steps = 0

    def run(self):
        status = 'finished'
        pc = 0
        try:
            while True:
                self.steps += 1
                if self.steps > self.step_limit:
                    raise StopRun('step_limit')
                pc = self.execute(pc)
        except StopRun as stop:
            status = stop.status
        logger.debug('GOTO run %s after %d steps, %d inputs', status, self.steps, self.inputs.position)
        return GotoRunResult(status, self.memory.store, self.assertions, self.path,
                             self.inputs.position, self.steps)

    def execute(self, pc):
        instr = self.program.instructions[pc]
        kind = instr.kind
        start = self.inputs.position
        value = None
        if kind == InstrKind.END:
            self.note(pc, None, start)
            raise StopRun('finished')
        if kind == InstrKind.DECL:
            t = instr.lhs.type
            value = havoc_value(t, self.inputs) if instr.havoc else zero_value(t)
            self.memory.store[instr.lhs.uid] = value
        elif kind == InstrKind.ASSIGN:
            if not (isinstance(instr.lhs, m.Var) and instr.lhs.uid == FREED_POINTER):
                where = self.location(instr.lhs)
                value = self.eval(instr.rhs)
                self.write(where, value)
        elif kind == InstrKind.ASSUME:
            if not self.eval(instr.cond):
                self.note(pc, None, start)
                raise StopRun('assume_failed')
        elif kind == InstrKind.ASSERT:
            ok = bool(self.eval(instr.cond))
            self.assertions.append((instr.property_id, ok))
            value = ok
            if not ok and self.stop_at is not None and instr.property_id == self.stop_at:
                self.note(pc, value, start)
                raise StopRun('violated')
        elif kind == InstrKind.GOTO:
            self.note(pc, None, start)
            if instr.cond is None or self.eval(instr.cond):
                return instr.target
            return pc + 1
        elif kind == InstrKind.MALLOC:
            value = self.memory.allocate(instr.elem_type, instr.site)
            self.write(self.location(instr.lhs), value)
        elif kind == InstrKind.FREE:
            ref = self.eval(instr.rhs)
            if isinstance(ref, Ref) and ref.kind == 'heap':
                self.memory.heap[ref.key].freed = True
        elif kind in (InstrKind.CALL, InstrKind.RETURN):
            raise ValueError(f'{kind.value} left in the program at {pc}; inline calls first')
        self.note(pc, value, start)
        return pc + 1

    def note(self, pc, value, start):
        if self.record:
            self.path.append(Step(pc, value, tuple(self.inputs.values[start:self.inputs.position])))

    # Memory

    def location(self, e):
        """(container, key) for an lvalue, None when the write goes nowhere."""
        store = self.memory.store
        if isinstance(e, m.Var):
            return store, e.uid
        if isinstance(e, m.Index):
            array = store[e.base.uid]
            index = self.eval(e.index)
            return (array, index) if 0 <= index < len(array) else None
        if isinstance(e, m.Field) and not e.arrow:
            return store[e.base.uid], e.name
        pointer = e.pointer if isinstance(e, m.Deref) else e.base
        target = self.memory.target(store[pointer.uid])
        if target is None or isinstance(e, m.Deref):
            return target
        return _get(target), e.name

    def write(self, where, value):
        if where is None:
            return
        container, key = where
        if isinstance(container, HeapObject):
            container.value = value
        else:
            container[key] = value

    def read_through(self, e):
        pointer = e.pointer if isinstance(e, m.Deref) else e.base
        ref = self.memory.store[pointer.uid]
        if ref is UNKNOWN:
            return havoc_value(e.type, self.inputs)
        where = self.location(e)
        if where is None:
            return zero_value(e.type)
        return _get(where)

    # Expressions

    def eval(self, e):
        return getattr(self, f'eval_{type(e).__name__.lower()}')(e)

    def eval_const(self, e):
        return convert(e.value, e.type)

    def eval_var(self, e):
        return self.memory.store[e.uid]

    def eval_unary(self, e):
        value = self.eval(e.operand)
        if e.op == '!':
            return 0 if value else 1
        if e.op == '-':
            return e.type.normalize(-value)
        return value

    def eval_binary(self, e):
        op = e.op
        a = self.eval(e.left)
        b = self.eval(e.right)
        if op == '&&':
            return 1 if a and b else 0
        if op == '||':
            return 1 if a or b else 0
        if op in ('+', '-', '*'):
            return e.type.normalize(arithmetic(op, a, b))
        if op in ('==', '!=') and self._tracker(e):
            other = a if _is_tracker(e.right) else b
            freed = self.memory.is_freed(other)
            return 1 if freed == (op == '==') else 0
        return 1 if compare(op, a, b) else 0

    def _tracker(self, e):
        return _is_tracker(e.left) or _is_tracker(e.right)

    def eval_ternary(self, e):
        cond, then, other = self.eval(e.cond), self.eval(e.then), self.eval(e.other)
        return then if cond else other

    def eval_cast(self, e):
        return convert(self.eval(e.operand), e.type)

    def eval_addressof(self, e):
        return Ref('var', e.operand.uid)

    def eval_deref(self, e):
        return self.read_through(e)

    def eval_field(self, e):
        if e.arrow:
            return self.read_through(e)
        return self.memory.store[e.base.uid][e.name]

    def eval_index(self, e):
        array = self.memory.store[e.base.uid]
        index = self.eval(e.index)
        return array[index] if 0 <= index < len(array) else zero_value(e.type)

    def eval_nondet(self, e):
        if e.type.is_pointer:
            return UNKNOWN
        if isinstance(e.type, (m.StructType, m.ArrayType)):
            return havoc_value(e.type, self.inputs)
        return input_value(e.type, self.inputs.next())

    def eval_overflowcheck(self, e):
        values = [self.eval(o) for o in e.operands]
        exact = -values[0] if len(values) == 1 else arithmetic(e.op, values[0], values[1])
        return 1 if fits(e.operands[0].type, exact) else 0

    def eval_freechoice(self, e):
        return 1

    def eval_leakcheck(self, e):
        leaked = any(o.site == e.site and not o.freed for o in self.memory.heap.values())
        return 0 if leaked else 1


def _get(where):
    container, key = where
    if isinstance(container, HeapObject):
        return container.value
    return container[key]


def _is_tracker(e):
    while isinstance(e, m.Cast):
        e = e.operand
    return isinstance(e, m.Var) and e.uid == FREED_POINTER


def run_goto(program, inputs=(), step_limit=None, record=False, stop_at=None):
    return GotoInterpreter(program, inputs, step_limit, record, stop_at).run()

