"""
Template arithmetic that never wraps.

Operands are widened before every operation: one bit for addition,
subtraction and negation, twice the operand width plus one for
multiplication. Results are read back as two's-complement values of the
widened width.
"""

from solver import models as bv


def widen(term, signed, width=None):
    """`term` one bit wider (or to `width`), keeping its value under its own signedness."""
    width = width or term.width + 1
    return bv.extend(term, width, signed)


def width_extension(term, signed=True):
    """
    Rebuilds an add/sub/mul/neg tree over bitvector leaves so that no
    operation can overflow. Leaves are read as signed or unsigned numbers
    according to `signed`, a bool or a callable taking the leaf.
    """
    op = term.op
    if op in ('add', 'sub', 'mul'):
        a, b = (width_extension(arg, signed) for arg in term.args)
        if op == 'mul':
            width = 2 * max(a.width, b.width) + 1
        else:
            width = max(a.width, b.width) + 1
        a, b = bv.sext(a, width), bv.sext(b, width)
        return {'add': bv.add, 'sub': bv.sub, 'mul': bv.mul}[op](a, b)
    if op == 'neg':
        a = width_extension(term.args[0], signed)
        return bv.neg(bv.sext(a, a.width + 1))
    leaf_signed = signed(term) if callable(signed) else signed
    return term if leaf_signed else bv.zext(term, term.width + 1)


def linear_combination(items):
    """
    Σ c·x over (coefficient, term, signed) items, wide enough for every
    value of the leaves.
    """
    items = [(c, t, s) for c, t, s in items if c]
    if not items:
        return bv.const(0, 2)
    leaf = max(t.width for _, t, _ in items) + 1
    scale = max(abs(c) for c, _, _ in items).bit_length() + 1
    width = leaf + scale + max(len(items) - 1, 0).bit_length()
    total = None
    for coefficient, term, signed in items:
        x = bv.sext(widen(term, signed, leaf), width)
        if coefficient == 1:
            part = x
        elif coefficient == -1:
            part = bv.neg(x)
        else:
            part = bv.mul(bv.const(coefficient, width), x)
        total = part if total is None else bv.add(total, part)
    return total


def signed_value(value, width):
    """A model value of a widened term as a Python int."""
    return bv.to_signed(value, width)


def max_value(width):
    return bv.max_signed(width)


def min_value(width):
    return bv.min_signed(width)
