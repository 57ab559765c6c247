"""
The SSA constraint system of a GotoProgram.

Symbols are interned solver terms named `<base>#<where><copies>`, where the
copy suffix `~c1.c2` lists the unwinding copy of every enclosing loop
instance. Every symbol is either free (inputs, loop-back values, selectors)
or defined exactly once by an equality.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from solver import models as bv


class SymbolKind(str, Enum):
    PLAIN = 'plain'
    PHI = 'phi'
    LOOPBACK = 'loopback'
    GUARD = 'guard'
    LOOP_SELECT = 'loop-select'
    OBJECT_SELECT = 'object-select'
    FREE_GUARD = 'free-guard'
    DEREF = 'deref'
    NONDET = 'nondet'


@dataclass(frozen=True)
class SsaSymbol:
    term: bv.Term
    kind: SymbolKind
    location: int = -1
    cell: str = ''

    @property
    def name(self):
        return self.term.payload


def copy_suffix(ctx):
    return '~' + '.'.join(str(c) for c in ctx) if ctx else ''


@dataclass(frozen=True)
class Edge:
    target: int
    guard: bv.Term
    state: dict = field(compare=False)
    source: Optional[int] = None


@dataclass
class InputRecord:
    """Nondet values one instruction visit consumes, in consumption order."""
    key: tuple
    location: int
    symbols: list
    condition: Optional[bv.Term] = None


@dataclass
class Visit:
    """One encoded instance of one instruction."""
    key: tuple
    location: int
    guard: bv.Term
    assigned: list = field(default_factory=list)
    inputs: list = field(default_factory=list)


@dataclass
class AssertionInstance:
    property_id: str
    guard: bv.Term
    cond: bv.Term
    location: int
    key: tuple
    instance: Optional['LoopInstance'] = None
    copy: int = 0

    @property
    def violation(self):
        return bv.and_(self.guard, bv.not_(self.cond))


@dataclass
class LoopCopy:
    number: int
    entry_guard: bv.Term
    entry_state: dict
    latch_guard: bv.Term = None
    latch_state: Optional[dict] = None
    children: list = field(default_factory=list)


@dataclass(eq=False)
class LoopInstance:
    """One loop as it appears in one unwinding copy of its enclosing loops."""
    loop: object
    ctx: Tuple[int, ...]
    key_prefix: tuple
    parent: Optional['LoopInstance'] = None
    parent_copy: int = 0
    loop_select: bv.Term = None
    loopback: Dict[str, bv.Term] = field(default_factory=dict)
    phi: Dict[str, bv.Term] = field(default_factory=dict)
    pre_guard: bv.Term = None
    pre_state: Optional[dict] = None
    modified: List[str] = field(default_factory=list)
    live: List[str] = field(default_factory=list)
    copies: List[LoopCopy] = field(default_factory=list)

    @property
    def head(self):
        return self.loop.head

    @property
    def label(self):
        return f'{self.loop.head}{copy_suffix(self.ctx)}'

    @property
    def last(self):
        return self.copies[-1]

    def __repr__(self):
        return f'<loop instance {self.label}: {len(self.copies)} copies>'


@dataclass(eq=False)
class MergeRecord:
    """
    A join some loop exits flow into. New unwinding copies add edges, so the
    definitions of its symbols are re-issued under a fresh assumption
    literal whenever the edge list grows.
    """
    target: int
    ctx: Tuple[int, ...]
    guard: bv.Term
    cells: Dict[str, bv.Term]
    edges: List[Edge] = field(default_factory=list)
    version: int = 0

    @property
    def key(self):
        return self.target, self.ctx

    def add_edge(self, edge):
        self.edges.append(edge)
        self.version += 1

    def values(self):
        """(symbol, defining term) for the guard and every merged cell."""
        out = [(self.guard, bv.any_of(e.guard for e in self.edges))]
        for cell, sym in self.cells.items():
            value = self.edges[-1].state[cell]
            for edge in reversed(self.edges[:-1]):
                value = bv.ite(edge.guard, edge.state[cell], value)
            out.append((sym, value))
        return out

    def definitions(self):
        return [bv.eq(sym, value) for sym, value in self.values()]


@dataclass
class SsaForm:
    program: object
    memory: object
    depth: int = 1
    constraints: List[bv.Term] = field(default_factory=list)
    symbols: Dict[str, SsaSymbol] = field(default_factory=dict)
    definitions: Dict[str, bv.Term] = field(default_factory=dict)
    instances: List[LoopInstance] = field(default_factory=list)
    assertions: List[AssertionInstance] = field(default_factory=list)
    merges: Dict[tuple, MergeRecord] = field(default_factory=dict)
    visits: Dict[tuple, Visit] = field(default_factory=dict)
    inputs: List[InputRecord] = field(default_factory=list)
    entry_guard: bv.Term = None
    final_guard: bv.Term = None
    final_state: Optional[dict] = None
    builder: object = field(default=None, repr=False)

    @property
    def universe(self):
        return self.memory.universe

    def instance(self, head, ctx):
        for inst in self.instances:
            if inst.loop.head == head and inst.ctx == tuple(ctx):
                return inst
        return None

    def merge_constraints(self):
        out = []
        for merge in self.merges.values():
            out.extend(merge.definitions())
        return out

    def all_constraints(self):
        """The whole system at the current depth, for a fresh solver."""
        return self.constraints + self.merge_constraints()

    def assertions_for(self, property_id):
        return [a for a in self.assertions if a.property_id == property_id]

    def top_instances(self):
        return [i for i in self.instances if i.parent is None]

    def extend(self):
        """Adds one unwinding copy to every loop instance."""
        return self.builder.extend()
