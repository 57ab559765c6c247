"""
Guarded templates and their abstract values.

A template row constrains the loop-back values of one loop: for every
instance of that loop, `pre-guard ∧ loop-select ⟹ e(lb) ≤ d` for a
polyhedral row, or `... ⟹ lb ∈ d` for a shape row over an address set.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

from solver import models as bv


class RowKind(str, Enum):
    POLY = 'poly'
    SHAPE = 'shape'


class _Extreme:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


BOTTOM = _Extreme('⊥')
TOP = _Extreme('⊤')


@dataclass(frozen=True)
class TemplateRow:
    kind: RowKind
    head: int
    cells: Tuple[str, ...]
    coefficients: Tuple[int, ...] = ()
    label: str = ''

    @property
    def is_poly(self):
        return self.kind == RowKind.POLY

    def __str__(self):
        return self.label


@dataclass
class Template:
    domain: str
    rows: List[TemplateRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __add__(self, other):
        shared = set(self.rows) & set(other.rows)
        if shared:
            raise ValueError(f'templates share rows: {sorted(map(str, shared))}')
        if not self.rows:
            return other
        if not other.rows:
            return self
        return Template(f'{self.domain}*{other.domain}', self.rows + other.rows)

    def bottom(self):
        return AbstractValue([BOTTOM] * len(self.rows))

    def top(self):
        return AbstractValue([TOP] * len(self.rows))

    def heads(self):
        return sorted({row.head for row in self.rows})


@dataclass
class AbstractValue:
    values: list

    def __getitem__(self, index):
        return self.values[index]

    def __setitem__(self, index, value):
        self.values[index] = value

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def copy(self):
        return AbstractValue(list(self.values))

    @property
    def is_top(self):
        return all(v is TOP for v in self.values)


@dataclass(frozen=True)
class SymbolicPath:
    """One literal per loop-select guard; the all-negative path gets no invariant."""
    literals: Tuple[Tuple[object, bool], ...]

    @property
    def is_bottom(self):
        return not any(positive for _, positive in self.literals)

    @property
    def term(self):
        return bv.all_of(sym if positive else bv.not_(sym) for sym, positive in self.literals)

    @property
    def negated(self):
        """Only the negative literals: the loops this path never enters from a back edge."""
        return bv.all_of(bv.not_(sym) for sym, positive in self.literals if not positive)

    def __str__(self):
        return ' & '.join(('' if positive else '!') + sym.payload for sym, positive in self.literals)


@dataclass
class TemplateInvariant:
    template: Template
    value: AbstractValue


@dataclass
class PathInvariant:
    template: Template
    entries: List[Tuple[SymbolicPath, AbstractValue]] = field(default_factory=list)
