"""Direct evaluation of terms over concrete symbol values."""

from core.exceptions import UnknownSymbol
from solver.models import mask, to_signed, walk


def _apply(term, vals):
    op = term.op
    w = term.sort.width
    if op == 'not':
        return not vals[0]
    if op == 'and':
        return all(vals)
    if op == 'or':
        return any(vals)
    if op == 'eq':
        return vals[0] == vals[1]
    if op == 'ite':
        return vals[1] if vals[0] else vals[2]
    if op == 'add':
        return (vals[0] + vals[1]) & mask(w)
    if op == 'sub':
        return (vals[0] - vals[1]) & mask(w)
    if op == 'neg':
        return (-vals[0]) & mask(w)
    if op == 'mul':
        return (vals[0] * vals[1]) & mask(w)
    if op in ('ult', 'ule', 'slt', 'sle'):
        a, b = vals
        if op[0] == 's':
            aw = term.args[0].width
            a, b = to_signed(a, aw), to_signed(b, aw)
        return a < b if op.endswith('lt') else a <= b
    if op == 'zext':
        return vals[0]
    if op == 'sext':
        return to_signed(vals[0], term.args[0].width) & mask(w)
    if op == 'trunc':
        return vals[0] & mask(w)
    if op == 'select':
        arr, index = vals
        return arr[index] if index < len(arr) else 0
    if op == 'store':
        arr, index, value = vals
        if index >= len(arr):
            return arr
        return arr[:index] + (value,) + arr[index + 1:]
    raise ValueError(f'cannot evaluate operator {op}')


def evaluate(term, assignment, default=None):
    """
    Evaluate `term`; `assignment` maps symbol terms to values (bool, int, or
    tuple of ints for arrays). Missing symbols raise UnknownSymbol unless a
    `default` callable is given, which receives the symbol.
    """
    values = {}
    for node in walk(term):
        if node.op in ('const', 'addr', 'aconst'):
            values[node.tid] = node.payload
        elif node.op == 'symbol':
            if node in assignment:
                values[node.tid] = assignment[node]
            elif default is not None:
                values[node.tid] = default(node)
            else:
                raise UnknownSymbol(f'no value for {node.payload}')
        else:
            values[node.tid] = _apply(node, [values[a.tid] for a in node.args])
    return values[term.tid]


def zero_value(sym):
    if sym.sort.is_bool:
        return False
    if sym.sort.is_array:
        return (0,) * sym.sort.length
    return 0
