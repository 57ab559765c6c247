"""
Concrete interpreter for typed MiniC trees.

It is the reference semantics that lowering, instrumentation and the SSA
encoding are tested against. Values are Python ints (bools are 0/1), None
for the null pointer, Ref for addresses, dicts for structs and lists for
arrays. Runtime errors are recorded as events and execution goes on with a
safe result, so one run reports every error it meets.

Environment choices come from an InputStream: every nondet call, every
uninitialised scalar local and every numeric read through unknown memory
consumes one value. Pointers of unknown origin (pointer parameters of the
entry function, uninitialised pointer locals, pointers read from unknown
memory) are the single Ref UNKNOWN.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

from core import settings
from frontend import models as m

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ref:
    kind: str  # 'var', 'heap' or 'unknown'
    key: object = None

    def __str__(self):
        if self.kind == 'var':
            return f'&{self.key}'
        if self.kind == 'heap':
            return f'&heap{self.key}'
        return '&unknown'


UNKNOWN = Ref('unknown')


class InputStream:
    """Nondet values in consumption order; zeros once exhausted."""

    def __init__(self, values=()):
        self.values = list(values)
        self.position = 0

    def next(self):
        value = self.values[self.position] if self.position < len(self.values) else 0
        self.position += 1
        return value

    @property
    def consumed(self):
        return self.values[:self.position]


def input_value(t, raw):
    """An environment value of scalar type `t`."""
    if t.is_bool:
        return 1 if raw else 0
    if t.is_pointer:
        return UNKNOWN
    return t.normalize(raw)


def zero_value(t):
    if t.is_pointer:
        return None
    if isinstance(t, m.StructType):
        return {name: zero_value(ft) for name, ft in t.fields}
    if isinstance(t, m.ArrayType):
        return [zero_value(t.element) for _ in range(t.length)]
    return 0


def havoc_value(t, inputs):
    """Value of an uninitialised local: inputs for numbers, UNKNOWN for pointers."""
    if isinstance(t, m.StructType):
        return {name: havoc_value(ft, inputs) for name, ft in t.fields}
    if isinstance(t, m.ArrayType):
        return [havoc_value(t.element, inputs) for _ in range(t.length)]
    if t.is_pointer:
        return UNKNOWN
    return input_value(t, inputs.next())


def convert(value, target):
    if target.is_pointer:
        return None if value == 0 or value is None else value
    if target.is_bool:
        return 1 if value else 0
    if isinstance(target, m.IntType):
        return target.normalize(value)
    return value


def fits(t, value):
    return not (isinstance(t, m.IntType) and t.signed) or t.min_value <= value <= t.max_value


def arithmetic(op, a, b):
    if op == '+':
        return a + b
    if op == '-':
        return a - b
    return a * b


def compare(op, a, b):
    if op == '==':
        return a == b
    if op == '!=':
        return a != b
    if op == '<':
        return a < b
    if op == '<=':
        return a <= b
    if op == '>':
        return a > b
    return a >= b


@dataclass
class HeapObject:
    value: object
    site: object
    freed: bool = False


class ConcreteMemory:
    """Variables by unique id plus numbered heap objects."""

    def __init__(self):
        self.store = {}
        self.heap = {}

    def allocate(self, t, site):
        number = len(self.heap) + 1
        self.heap[number] = HeapObject(zero_value(t), site)
        return Ref('heap', number)

    def target(self, ref):
        """(container, key) holding the object `ref` points to, or None."""
        if ref is None or ref.kind == 'unknown':
            return None
        if ref.kind == 'var':
            return self.store, ref.key
        return self.heap[ref.key], 'value'

    def is_freed(self, ref):
        return ref is not None and ref.kind == 'heap' and self.heap[ref.key].freed

    def leaked_sites(self):
        return sorted({str(o.site) for o in self.heap.values() if not o.freed})


@dataclass
class RunResult:
    status: str
    store: dict
    assertions: list = field(default_factory=list)
    events: list = field(default_factory=list)
    inputs_used: int = 0
    steps: int = 0
    return_value: Optional[object] = None

    @property
    def failed_assertions(self):
        return [loc for loc, ok in self.assertions if not ok]

    def categories(self):
        return sorted({category for category, _ in self.events})


class StopRun(Exception):
    def __init__(self, status):
        super().__init__(status)
        self.status = status


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        super().__init__()
        self.value = value


class _Unknown:
    """Location in memory the program knows nothing about."""


UNKNOWN_LOCATION = _Unknown()


class Interpreter:

    def __init__(self, program, inputs=(), step_limit=None, check_leaks=False):
        if not program.typed:
            raise ValueError('the interpreter runs type-checked programs only')
        self.program = program
        self.inputs = inputs if isinstance(inputs, InputStream) else InputStream(inputs)
        self.step_limit = step_limit or settings.STEP_LIMIT
        self.check_leaks = check_leaks
        self.memory = ConcreteMemory()
        self.functions = {f.name: f for f in program.functions}
        self.assertions = []
        self.events = []
        self.steps = 0

    # Driver

    def run(self):
        status = 'finished'
        value = None
        try:
            for decl in self.program.globals:
                self.memory.store[decl.uid] = zero_value(decl.decl_type)
            for decl in self.program.globals:
                if decl.init is not None:
                    self.memory.store[decl.uid] = self.eval(decl.init)
            entry = self.functions[self.program.entry]
            args = [havoc_value(p.type, self.inputs) for p in entry.params]
            value = self.invoke(entry, args)
            if self.check_leaks:
                for _site in self.memory.leaked_sites():
                    self.event('memory-leak', entry.loc)
        except StopRun as stop:
            status = stop.status
        logger.debug('AST run %s after %d steps, %d inputs', status, self.steps, self.inputs.position)
        return RunResult(status, self.memory.store, self.assertions, self.events,
                         self.inputs.position, self.steps, value)

    def tick(self):
        self.steps += 1
        if self.steps > self.step_limit:
            raise StopRun('step_limit')

    def event(self, category, loc):
        self.events.append((category, loc))

    def invoke(self, func, args):
        for p, a in zip(func.params, args):
            self.memory.store[p.uid] = a
        try:
            self.execute(func.body)
        except _Return as ret:
            return ret.value
        if func.return_type.is_void:
            return None
        return zero_value(func.return_type)

    # Statements

    def execute(self, s):
        self.tick()
        getattr(self, f'exec_{type(s).__name__.lower()}')(s)

    def exec_block(self, s):
        for child in s.body:
            self.execute(child)

    def exec_decl(self, s):
        if s.init is not None:
            self.memory.store[s.uid] = self.eval(s.init)
        else:
            self.memory.store[s.uid] = havoc_value(s.decl_type, self.inputs)

    def exec_assign(self, s):
        target = self.location(s.target)
        value = self.eval(s.value)
        self.write(target, value)

    def exec_exprstmt(self, s):
        self.eval(s.expr)

    def exec_if(self, s):
        if self.eval(s.cond):
            self.execute(s.then)
        elif s.other is not None:
            self.execute(s.other)

    def exec_while(self, s):
        while self.eval(s.cond):
            self.tick()
            try:
                self.execute(s.body)
            except _Break:
                break
            except _Continue:
                pass
            if s.step is not None:
                self.execute(s.step)

    def exec_break(self, s):
        raise _Break()

    def exec_continue(self, s):
        raise _Continue()

    def exec_return(self, s):
        raise _Return(self.eval(s.value) if s.value is not None else None)

    def exec_assert(self, s):
        self.assertions.append((s.loc, bool(self.eval(s.cond))))

    def exec_assume(self, s):
        if not self.eval(s.cond):
            raise StopRun('assume_failed')

    def exec_malloc(self, s):
        target = self.location(s.target)
        self.write(target, self.memory.allocate(s.elem_type, s.loc))

    def exec_free(self, s):
        ref = self.eval(s.pointer)
        if ref is None:
            self.event('null-deref', s.loc)
        elif self.memory.is_freed(ref):
            self.event('double-free', s.loc)
        elif ref.kind == 'heap':
            self.memory.heap[ref.key].freed = True

    # Locations

    def location(self, e):
        """(container, key) of an lvalue, or UNKNOWN_LOCATION, or None when out of bounds."""
        if isinstance(e, m.Var):
            return self.memory.store, e.uid
        if isinstance(e, m.Index):
            if e.base.type.is_pointer:
                return UNKNOWN_LOCATION
            base = self.location(e.base)
            index = self.eval(e.index)
            if base is None or base is UNKNOWN_LOCATION:
                return base
            array = self.read(base, e.base.type)
            if not 0 <= index < len(array):
                self.event('bounds', e.loc)
                return None
            return array, index
        if isinstance(e, m.Field) and not e.arrow:
            base = self.location(e.base)
            if base is None or base is UNKNOWN_LOCATION:
                return base
            return self.read(base, e.base.type), e.name
        if isinstance(e, (m.Deref, m.Field)):
            ref = self.eval(e.pointer if isinstance(e, m.Deref) else e.base)
            if ref is None:
                self.event('null-deref', e.loc)
                return None
            if self.memory.is_freed(ref):
                self.event('freed-deref', e.loc)
            target = self.memory.target(ref)
            if target is None:
                return UNKNOWN_LOCATION
            if isinstance(e, m.Field):
                container, key = target
                return self.read((container, key), None), e.name
            return target
        raise ValueError(f'not an lvalue: {type(e).__name__}')

    def read(self, where, t):
        if where is UNKNOWN_LOCATION:
            return havoc_value(t, self.inputs) if t is not None else {}
        if where is None:
            return zero_value(t) if t is not None else {}
        container, key = where
        if isinstance(container, HeapObject):
            return container.value
        return container[key]

    def write(self, where, value):
        if where is None or where is UNKNOWN_LOCATION:
            return
        container, key = where
        if isinstance(container, HeapObject):
            container.value = value
        else:
            container[key] = value

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
            result = -value
            if not fits(e.type, result):
                self.event('overflow', e.loc)
            return e.type.normalize(result)
        return value

    def eval_binary(self, e):
        op = e.op
        if op == '&&':
            return 1 if self.eval(e.left) and self.eval(e.right) else 0
        if op == '||':
            return 1 if self.eval(e.left) or self.eval(e.right) else 0
        a = self.eval(e.left)
        b = self.eval(e.right)
        if op in ('+', '-', '*'):
            result = arithmetic(op, a, b)
            if not fits(e.type, result):
                self.event('overflow', e.loc)
            return e.type.normalize(result)
        return 1 if compare(op, a, b) else 0

    def eval_addressof(self, e):
        return Ref('var', e.operand.uid)

    def _read_lvalue(self, e):
        return self.read(self.location(e), e.type)

    eval_deref = _read_lvalue
    eval_field = _read_lvalue

    def eval_index(self, e):
        return self._read_lvalue(e)

    def eval_ternary(self, e):
        return self.eval(e.then) if self.eval(e.cond) else self.eval(e.other)

    def eval_cast(self, e):
        return convert(self.eval(e.operand), e.type)

    def eval_call(self, e):
        args = [self.eval(a) for a in e.args]
        return self.invoke(self.functions[e.name], args)

    def eval_nondet(self, e):
        if e.type.is_void:
            return None
        return input_value(e.type, 0 if e.type.is_pointer else self.inputs.next())


def run_program(program, inputs=(), step_limit=None, check_leaks=False):
    return Interpreter(program, inputs, step_limit, check_leaks).run()


def visible_store(program, store):
    """Globals and locals of the entry function by unique id, without temporaries."""
    entry = f'{program.entry}::'
    visible = {}
    for uid, value in store.items():
        if uid.startswith(('$', '__')):
            continue
        info = program.variables.get(uid)
        if uid.startswith(entry) or (info is not None and info.is_global):
            visible[uid] = value
    return visible
