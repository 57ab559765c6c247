"""
Hash-consed bitvector terms.

Terms are interned: building the same operator over the same arguments twice
returns the same object, so identity equality is structural equality and
every cache in the solver can key on the term itself. The constructors fold
constants and apply a handful of local rewrites.
"""

import itertools
from dataclasses import dataclass

from core.exceptions import WidthMismatch


@dataclass(frozen=True)
class Sort:
    kind: str
    width: int = 1
    length: int = 0

    @property
    def is_bool(self):
        return self.kind == 'bool'

    @property
    def is_bv(self):
        return self.kind == 'bv'

    @property
    def is_array(self):
        return self.kind == 'array'

    def __str__(self):
        if self.is_bool:
            return 'bool'
        if self.is_bv:
            return f'bv{self.width}'
        return f'bv{self.width}[{self.length}]'


BOOL = Sort('bool', 1)


def bv_sort(width):
    if width < 1:
        raise WidthMismatch(f'bitvector width must be positive, got {width}')
    return Sort('bv', width)


def array_sort(length, elem_width):
    return Sort('array', elem_width, length)


def mask(width):
    return (1 << width) - 1


def to_signed(value, width):
    value &= mask(width)
    if value >> (width - 1):
        return value - (1 << width)
    return value


def to_unsigned(value, width):
    return value & mask(width)


def min_signed(width):
    return -(1 << (width - 1))


def max_signed(width):
    return (1 << (width - 1)) - 1


class Term:
    __slots__ = ('op', 'args', 'sort', 'payload', 'tid')

    def __init__(self, op, args, sort, payload, tid):
        self.op = op
        self.args = args
        self.sort = sort
        self.payload = payload
        self.tid = tid

    @property
    def width(self):
        return self.sort.width

    @property
    def is_const(self):
        return self.op in ('const', 'addr', 'aconst')

    @property
    def is_true(self):
        return self.op == 'const' and self.payload is True

    @property
    def is_false(self):
        return self.op == 'const' and self.payload is False

    @property
    def name(self):
        return self.payload if self.op == 'symbol' else None

    def __repr__(self):
        from solver.printer import term_to_str
        return term_to_str(self)

    def __lt__(self, other):
        return self.tid < other.tid


_table = {}
_serial = itertools.count()


def _make(op, args, sort, payload=None):
    key = (op, sort, payload, tuple(a.tid for a in args))
    term = _table.get(key)
    if term is None:
        term = _table.setdefault(key, Term(op, tuple(args), sort, payload, next(_serial)))
    return term


def _check_same(a, b):
    if a.sort != b.sort:
        raise WidthMismatch(f'operands of sorts {a.sort} and {b.sort}')


def _check_bv(*terms):
    for t in terms:
        if not t.sort.is_bv:
            raise WidthMismatch(f'expected a bitvector, got {t.sort}')


def _check_bool(*terms):
    for t in terms:
        if not t.sort.is_bool:
            raise WidthMismatch(f'expected a Boolean, got {t.sort}')


# Leaves

def true():
    return _make('const', (), BOOL, True)


def false():
    return _make('const', (), BOOL, False)


def boolean(value):
    return true() if value else false()


def const(value, width):
    return _make('const', (), bv_sort(width), value & mask(width))


def addr(tag, width):
    """Address literal: a distinct small-integer tag per object, 0 for null."""
    return _make('addr', (), bv_sort(width), tag)


def array_const(values, elem_width):
    values = tuple(v & mask(elem_width) for v in values)
    return _make('aconst', (), array_sort(len(values), elem_width), values)


def symbol(name, sort):
    return _make('symbol', (), sort, name)


def value_of(term):
    """Python value of a constant term (bool, int, or tuple for arrays)."""
    if term.op == 'const' or term.op == 'addr' or term.op == 'aconst':
        return term.payload
    raise ValueError(f'{term!r} is not a constant')


# Boolean connectives

def not_(a):
    _check_bool(a)
    if a.op == 'const':
        return boolean(not a.payload)
    if a.op == 'not':
        return a.args[0]
    return _make('not', (a,), BOOL)


def _connective(op, args, unit, absorbing):
    flat = []
    seen = set()
    for a in args:
        _check_bool(a)
        parts = a.args if a.op == op else (a,)
        for p in parts:
            if p.op == 'const':
                if p.payload is absorbing:
                    return boolean(absorbing)
                continue
            if p.tid in seen:
                continue
            seen.add(p.tid)
            flat.append(p)
    for p in flat:
        if p.op == 'not' and p.args[0].tid in seen:
            return boolean(absorbing)
    if not flat:
        return boolean(unit)
    if len(flat) == 1:
        return flat[0]
    return _make(op, flat, BOOL)


def and_(*args):
    return _connective('and', args, True, False)


def or_(*args):
    return _connective('or', args, False, True)


def implies(a, b):
    return or_(not_(a), b)


def all_of(terms):
    return and_(*terms)


def any_of(terms):
    return or_(*terms)


# Polymorphic

def eq(a, b):
    _check_same(a, b)
    if a is b:
        return true()
    if a.is_const and b.is_const:
        return boolean(a.payload == b.payload)
    if a.sort.is_bool:
        if a.is_const:
            return b if a.payload else not_(b)
        if b.is_const:
            return a if b.payload else not_(a)
    if b.tid < a.tid:
        a, b = b, a
    return _make('eq', (a, b), BOOL)


def ne(a, b):
    return not_(eq(a, b))


def ite(c, a, b):
    _check_bool(c)
    _check_same(a, b)
    if c.op == 'const':
        return a if c.payload else b
    if a is b:
        return a
    if c.op == 'not':
        c, a, b = c.args[0], b, a
    if a.sort.is_bool:
        if a.is_true and b.is_false:
            return c
        if a.is_false and b.is_true:
            return not_(c)
        if a.is_true:
            return or_(c, b)
        if b.is_false:
            return and_(c, a)
        if a.is_false:
            return and_(not_(c), b)
        if b.is_true:
            return or_(not_(c), a)
    return _make('ite', (c, a, b), a.sort)


# Arithmetic

def add(a, b):
    _check_bv(a, b)
    _check_same(a, b)
    if a.op == 'const' and b.op == 'const':
        return const(a.payload + b.payload, a.width)
    if a.op == 'const' and a.payload == 0:
        return b
    if b.op == 'const' and b.payload == 0:
        return a
    if b.tid < a.tid:
        a, b = b, a
    return _make('add', (a, b), a.sort)


def sub(a, b):
    _check_bv(a, b)
    _check_same(a, b)
    if a.op == 'const' and b.op == 'const':
        return const(a.payload - b.payload, a.width)
    if b.op == 'const' and b.payload == 0:
        return a
    if a is b:
        return const(0, a.width)
    return _make('sub', (a, b), a.sort)


def neg(a):
    _check_bv(a)
    if a.op == 'const':
        return const(-a.payload, a.width)
    if a.op == 'neg':
        return a.args[0]
    return _make('neg', (a,), a.sort)


def mul(a, b):
    _check_bv(a, b)
    _check_same(a, b)
    if a.op == 'const' and b.op == 'const':
        return const(a.payload * b.payload, a.width)
    if b.op == 'const':
        a, b = b, a
    if a.op == 'const':
        if a.payload == 0:
            return a
        if a.payload == 1:
            return b
        if a.payload == mask(a.width):
            return neg(b)
    elif b.tid < a.tid:
        a, b = b, a
    return _make('mul', (a, b), a.sort)


# Comparisons

def _compare(op, a, b, fold):
    _check_bv(a, b)
    _check_same(a, b)
    if a.is_const and b.is_const:
        return boolean(fold(a.payload, b.payload, a.width))
    return _make(op, (a, b), BOOL)


def ult(a, b):
    if a is b:
        return false()
    return _compare('ult', a, b, lambda x, y, w: x < y)


def ule(a, b):
    if a is b:
        return true()
    return _compare('ule', a, b, lambda x, y, w: x <= y)


def slt(a, b):
    if a is b:
        return false()
    return _compare('slt', a, b, lambda x, y, w: to_signed(x, w) < to_signed(y, w))


def sle(a, b):
    if a is b:
        return true()
    return _compare('sle', a, b, lambda x, y, w: to_signed(x, w) <= to_signed(y, w))


def ugt(a, b):
    return ult(b, a)


def uge(a, b):
    return ule(b, a)


def sgt(a, b):
    return slt(b, a)


def sge(a, b):
    return sle(b, a)


def lt(a, b, signed):
    return slt(a, b) if signed else ult(a, b)


def le(a, b, signed):
    return sle(a, b) if signed else ule(a, b)


# Width changes

def zext(a, width):
    _check_bv(a)
    if width < a.width:
        raise WidthMismatch(f'cannot zero-extend bv{a.width} to bv{width}')
    if width == a.width:
        return a
    if a.op == 'const':
        return const(a.payload, width)
    return _make('zext', (a,), bv_sort(width), width)


def sext(a, width):
    _check_bv(a)
    if width < a.width:
        raise WidthMismatch(f'cannot sign-extend bv{a.width} to bv{width}')
    if width == a.width:
        return a
    if a.op == 'const':
        return const(to_signed(a.payload, a.width), width)
    return _make('sext', (a,), bv_sort(width), width)


def trunc(a, width):
    _check_bv(a)
    if width > a.width:
        raise WidthMismatch(f'cannot truncate bv{a.width} to bv{width}')
    if width == a.width:
        return a
    if a.op == 'const':
        return const(a.payload, width)
    if a.op in ('zext', 'sext') and a.args[0].width == width:
        return a.args[0]
    return _make('trunc', (a,), bv_sort(width), width)


def extend(a, width, signed):
    return sext(a, width) if signed else zext(a, width)


def resize(a, width, signed):
    """C integer conversion: truncate or extend according to the source signedness."""
    if width <= a.width:
        return trunc(a, width)
    return extend(a, width, signed)


def bool_to_bv(a, width):
    return ite(a, const(1, width), const(0, width))


# Arrays

def select(arr, index):
    if not arr.sort.is_array:
        raise WidthMismatch(f'select on non-array sort {arr.sort}')
    _check_bv(index)
    if arr.op == 'store' and arr.args[1] is index:
        return arr.args[2]
    if index.op == 'const':
        if arr.op == 'aconst':
            if index.payload < arr.sort.length:
                return const(arr.payload[index.payload], arr.sort.width)
            return const(0, arr.sort.width)
        if arr.op == 'store' and arr.args[1].op == 'const':
            inner_index = arr.args[1]
            if inner_index.width == index.width and inner_index.payload != index.payload:
                return select(arr.args[0], index)
    return _make('select', (arr, index), bv_sort(arr.sort.width))


def store(arr, index, value):
    if not arr.sort.is_array:
        raise WidthMismatch(f'store on non-array sort {arr.sort}')
    _check_bv(index, value)
    if value.width != arr.sort.width:
        raise WidthMismatch(f'storing bv{value.width} into {arr.sort}')
    if index.op == 'const' and index.payload >= arr.sort.length:
        return arr
    return _make('store', (arr, index, value), arr.sort)


def walk(term):
    """Post-order iteration over the distinct subterms of `term`."""
    seen = set()
    stack = [(term, False)]
    while stack:
        node, expanded = stack.pop()
        if node.tid in seen:
            continue
        if expanded:
            seen.add(node.tid)
            yield node
            continue
        stack.append((node, True))
        for child in reversed(node.args):
            if child.tid not in seen:
                stack.append((child, False))


def symbols_of(term):
    return [t for t in walk(term) if t.op == 'symbol']
