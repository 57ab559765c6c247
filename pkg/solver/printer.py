from solver.models import to_signed

_INFIX = {
    'add': '+', 'sub': '-', 'mul': '*', 'eq': '==',
    'ult': '<u', 'ule': '<=u', 'slt': '<', 'sle': '<=',
}


def term_to_str(term, names=None):
    """Stable infix rendering; `names` maps address tags to object names."""
    op = term.op
    if op == 'symbol':
        return term.payload
    if op == 'const':
        if term.sort.is_bool:
            return 'true' if term.payload else 'false'
        return str(to_signed(term.payload, term.width))
    if op == 'addr':
        if names and term.payload in names:
            return names[term.payload]
        return f'&{term.payload}' if term.payload else 'NULL'
    if op == 'aconst':
        return '{' + ', '.join(str(v) for v in term.payload) + '}'
    args = [term_to_str(a, names) for a in term.args]
    if op == 'not':
        if term.args[0].op == 'eq':
            return args[0].replace(' == ', ' != ', 1)
        return f'!{args[0]}'
    if op in ('and', 'or'):
        joiner = ' && ' if op == 'and' else ' || '
        return '(' + joiner.join(args) + ')'
    if op in _INFIX:
        return f'({args[0]} {_INFIX[op]} {args[1]})'
    if op == 'neg':
        return f'-{args[0]}'
    if op == 'ite':
        return f'({args[0]} ? {args[1]} : {args[2]})'
    if op in ('zext', 'sext', 'trunc'):
        return f'{op}{term.width}({args[0]})'
    if op == 'select':
        return f'{args[0]}[{args[1]}]'
    if op == 'store':
        return f'{args[0]} with [{args[1]}] := {args[2]}'
    return f'{op}({", ".join(args)})'
