"""
The guarded-goto program every analysis runs on.

Instructions refer to typed frontend expressions. After lowering those are
side-effect free: calls, nondet choices and reads through pointers have been
moved into instructions of their own, so an expression only reads variables,
static struct fields and static array elements.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import networkx as nx

from frontend import models as m


class InstrKind(str, Enum):
    DECL = 'DECL'
    ASSIGN = 'ASSIGN'
    ASSUME = 'ASSUME'
    ASSERT = 'ASSERT'
    GOTO = 'GOTO'
    MALLOC = 'MALLOC'
    FREE = 'FREE'
    CALL = 'CALL'
    RETURN = 'RETURN'
    SKIP = 'SKIP'
    END = 'END'


class PropertyCategory(str, Enum):
    USER = 'user-assert'
    OVERFLOW = 'overflow'
    BOUNDS = 'bounds'
    NULL_DEREF = 'null-deref'
    FREED_DEREF = 'freed-deref'
    DOUBLE_FREE = 'double-free'
    MEMORY_LEAK = 'memory-leak'


class Label:
    """Jump target while a function is being lowered."""

    def __init__(self, name=''):
        self.name = name

    def __repr__(self):
        return f'<label {self.name}>'


@dataclass(eq=False)
class GotoInstr:
    kind: InstrKind
    loc: m.SourceLocation = m.NOWHERE
    lhs: Optional[m.Expr] = None
    rhs: Optional[m.Expr] = None
    cond: Optional[m.Expr] = None
    target: Optional[object] = None
    site: Optional[int] = None
    elem_type: Optional[m.TypeExpr] = None
    callee: str = ''
    args: List[m.Expr] = field(default_factory=list)
    property_id: str = ''
    category: Optional[PropertyCategory] = None
    description: str = ''
    havoc: bool = True
    label: Optional[Label] = None

    @property
    def is_unconditional(self):
        return self.cond is None or (isinstance(self.cond, m.Const) and self.cond.value != 0)

    def expressions(self):
        """Every expression the instruction evaluates."""
        out = [e for e in (self.lhs, self.rhs, self.cond) if e is not None]
        out.extend(self.args)
        return out


@dataclass
class Property:
    id: str
    description: str
    location: int
    category: PropertyCategory
    loc: m.SourceLocation = m.NOWHERE

    def __str__(self):
        return f'[{self.id}] {self.description}'


@dataclass
class Site:
    id: int
    elem_type: m.TypeExpr
    loc: m.SourceLocation = m.NOWHERE


@dataclass
class Loop:
    head: int
    latch: int
    parent: Optional['Loop'] = None
    children: list = field(default_factory=list)

    def contains(self, index):
        return self.head <= index <= self.latch

    @property
    def depth(self):
        d, loop = 0, self.parent
        while loop is not None:
            d, loop = d + 1, loop.parent
        return d

    def __hash__(self):
        return hash((self.head, self.latch))

    def __eq__(self, other):
        return isinstance(other, Loop) and (self.head, self.latch) == (other.head, other.latch)

    def __repr__(self):
        return f'Loop({self.head}..{self.latch})'


@dataclass
class FunctionBody:
    """A lowered function before inlining; jump targets are local indices."""
    name: str
    params: list
    return_type: m.TypeExpr
    instructions: list
    loc: m.SourceLocation = m.NOWHERE


@dataclass
class GotoProgram:
    instructions: List[GotoInstr]
    variables: dict
    structs: dict = field(default_factory=dict)
    entry: str = 'main'
    file: str = '<input>'
    functions: dict = field(default_factory=dict)
    properties: List[Property] = field(default_factory=list)
    sites: dict = field(default_factory=dict)
    leak_checked: bool = False

    @property
    def end(self):
        return len(self.instructions) - 1

    def successors(self, i):
        instr = self.instructions[i]
        if instr.kind == InstrKind.END:
            return []
        if instr.kind == InstrKind.GOTO:
            if instr.is_unconditional:
                return [instr.target]
            if isinstance(instr.cond, m.Const) and instr.cond.value == 0:
                return [i + 1]
            return [i + 1, instr.target] if instr.target != i + 1 else [i + 1]
        return [i + 1]

    def cfg(self):
        """The instruction graph: one node per instruction, an edge per possible successor."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.instructions)))
        graph.add_edges_from((i, s) for i in range(len(self.instructions)) for s in self.successors(i))
        return graph

    def jump_targets(self):
        return {ins.target for ins in self.instructions if ins.kind == InstrKind.GOTO}

    def loops(self):
        """Natural loops from back edges, outermost first, with nesting filled in."""
        found = []
        for i, ins in enumerate(self.instructions):
            if ins.kind == InstrKind.GOTO and ins.target is not None and ins.target <= i:
                found.append(Loop(ins.target, i))
        found.sort(key=lambda lp: (lp.head, -lp.latch))
        for loop in found:
            enclosing = [o for o in found if o is not loop and o.head <= loop.head
                         and loop.latch <= o.latch]
            if enclosing:
                loop.parent = max(enclosing, key=lambda o: o.head)
                loop.parent.children.append(loop)
        return found

    def property(self, pid):
        for p in self.properties:
            if p.id == pid:
                return p
        return None

    def assertion_index(self, pid):
        for i, ins in enumerate(self.instructions):
            if ins.kind == InstrKind.ASSERT and ins.property_id == pid:
                return i
        return None

    def variable(self, uid):
        return self.variables.get(uid)


# Expressions only instrumentation produces

@dataclass(eq=False)
class OverflowCheck(m.Expr):
    """True iff `op` applied to `operands` in unbounded arithmetic fits their signed type."""
    op: str
    operands: list = field(default_factory=list)

    def children(self):
        return tuple(self.operands)

    def render(self, text):
        if len(self.operands) == 1:
            return f'!overflow(-{text(self.operands[0])})'
        left, right = (text(o) for o in self.operands)
        return f'!overflow({left} {self.op} {right})'


@dataclass(eq=False)
class FreeChoice(m.Expr):
    """Free Boolean deciding whether a free updates the tracking pointer."""
    number: int = 0

    def render(self, text):
        return f'choice{self.number}'


@dataclass(eq=False)
class LeakCheck(m.Expr):
    """True iff the concrete object of `site` is unallocated or freed."""
    site: int = 0

    def render(self, text):
        return f'!leaked(site {self.site})'


def is_unknown_memory(e):
    """Lvalues inside memory reached by indexing a pointer."""
    if isinstance(e, m.Index):
        return e.base.type.is_pointer or is_unknown_memory(e.base)
    if isinstance(e, m.Field) and not e.arrow:
        return is_unknown_memory(e.base)
    return False


def walk_with_context(e, ctx=None, post=False):
    """
    Yields (node, context) pairs; `context` is the condition under which the
    node is evaluated under C short-circuit rules, None when always. With
    `post` children come before their parent.
    """
    if not post:
        yield e, ctx
    if isinstance(e, m.Binary) and e.op in ('&&', '||'):
        yield from walk_with_context(e.left, ctx, post)
        side = e.left if e.op == '&&' else negate(e.left)
        yield from walk_with_context(e.right, conjoin(ctx, side), post)
    elif isinstance(e, m.Ternary):
        yield from walk_with_context(e.cond, ctx, post)
        yield from walk_with_context(e.then, conjoin(ctx, e.cond), post)
        yield from walk_with_context(e.other, conjoin(ctx, negate(e.cond)), post)
    else:
        for child in e.children():
            yield from walk_with_context(child, ctx, post)
    if post:
        yield e, ctx


def negate(e):
    if isinstance(e, m.Unary) and e.op == '!':
        return e.operand
    return m.Unary('!', e, loc=e.loc, type=m.BOOL)


def conjoin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return m.Binary('&&', a, b, loc=b.loc, type=m.BOOL)


def implication(ctx, cond):
    if ctx is None:
        return cond
    return m.Binary('||', negate(ctx), cond, loc=cond.loc, type=m.BOOL)


def rebuild(program, before=None, after=None):
    """
    Splices instruction lists in before/after the instructions at the given
    indices. A jump to instruction i lands on the first instruction inserted
    before it. Property locations are recomputed.
    """
    before = before or {}
    after = after or {}
    old = program.instructions
    mapping = {}
    out = []
    for i, instr in enumerate(old):
        inserted = before.get(i, [])
        mapping[i] = len(out)
        out.extend(inserted)
        out.append(instr)
        out.extend(after.get(i, []))
    for instr in out:
        if instr.kind == InstrKind.GOTO and isinstance(instr.target, int):
            instr.target = mapping[instr.target]
    program.instructions = out
    refresh_properties(program)
    return program


def refresh_properties(program):
    by_id = {p.id: p for p in program.properties}
    properties = []
    for i, instr in enumerate(program.instructions):
        if instr.kind == InstrKind.ASSERT and instr.property_id:
            prop = by_id.get(instr.property_id)
            if prop is None:
                prop = Property(instr.property_id, instr.description, i, instr.category, instr.loc)
            prop.location = i
            properties.append(prop)
    program.properties = properties
