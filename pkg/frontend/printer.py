"""Pretty printer: MiniC trees back to compilable source text."""

from frontend import models as m

INDENT = '    '


def declarator(t, name=''):
    """C declarator syntax for `t name`."""
    if isinstance(t, m.ArrayType):
        return declarator(t.element, f'{name}[{t.length}]')
    if isinstance(t, m.PointerType):
        return declarator(t.target, f'*{name}')
    return f'{t} {name}'.rstrip()


def expr_to_str(e, top=True):
    text = _expr(e)
    if top and text.startswith('(') and _balanced_outer(text):
        return text[1:-1]
    return text


def _balanced_outer(text):
    depth = 0
    for i, ch in enumerate(text):
        if ch == '(':
            depth += 1
        elif ch == ')':
            depth -= 1
            if depth == 0 and i != len(text) - 1:
                return False
    return True


def _expr(e):
    if isinstance(e, m.Const):
        return e.text or str(e.value)
    if isinstance(e, m.Var):
        return e.name
    if isinstance(e, m.Unary):
        return f'{e.op}{_expr(e.operand)}'
    if isinstance(e, m.Binary):
        return f'({_expr(e.left)} {e.op} {_expr(e.right)})'
    if isinstance(e, m.AddressOf):
        return f'&{_expr(e.operand)}'
    if isinstance(e, m.Deref):
        return f'(*{_expr(e.pointer)})'
    if isinstance(e, m.Field):
        return f'{_expr(e.base)}{"->" if e.arrow else "."}{e.name}'
    if isinstance(e, m.Index):
        return f'{_expr(e.base)}[{expr_to_str(e.index)}]'
    if isinstance(e, m.Ternary):
        return f'({_expr(e.cond)} ? {_expr(e.then)} : {_expr(e.other)})'
    if isinstance(e, m.Cast):
        if e.implicit:
            return _expr(e.operand)
        return f'(({declarator(e.target)}) {_expr(e.operand)})'
    if isinstance(e, m.Call):
        return f'{e.name}({", ".join(expr_to_str(a) for a in e.args)})'
    if isinstance(e, m.Nondet):
        return f'{e.source}()'
    if isinstance(e, m.SizeOf):
        return f'sizeof({declarator(e.target)})'
    render = getattr(e, 'render', None)
    if render is not None:
        return render(_expr)
    return f'<{type(e).__name__}>'


def _simple(s):
    """Statement text without the trailing semicolon, for for-loop headers."""
    if isinstance(s, m.Decl):
        text = declarator(s.decl_type, s.name)
        if s.init is not None:
            text += f' = {expr_to_str(s.init)}'
        return text
    if isinstance(s, m.Assign):
        return f'{_expr(s.target)} {s.op} {expr_to_str(s.value)}'
    if isinstance(s, m.Malloc):
        return f'{_expr(s.target)} = malloc(sizeof({declarator(s.elem_type)}))'
    if isinstance(s, m.ExprStmt):
        return expr_to_str(s.expr)
    if isinstance(s, m.Block):
        return ', '.join(_simple(x) for x in s.body)
    raise ValueError(f'{type(s).__name__} cannot appear in a for header')


def _stmt(s, depth, out):
    pad = INDENT * depth
    if isinstance(s, m.Block):
        out.append(pad + '{')
        for child in s.body:
            _stmt(child, depth + 1, out)
        out.append(pad + '}')
    elif isinstance(s, (m.Decl, m.Assign, m.Malloc, m.ExprStmt)):
        out.append(pad + _simple(s) + ';')
    elif isinstance(s, m.If):
        out.append(f'{pad}if ({expr_to_str(s.cond)})')
        _stmt(s.then, depth + 1, out)
        if s.other is not None:
            out.append(pad + 'else')
            _stmt(s.other, depth + 1, out)
    elif isinstance(s, m.While):
        if s.step is None:
            out.append(f'{pad}while ({expr_to_str(s.cond)})')
        else:
            out.append(f'{pad}for (; {expr_to_str(s.cond)}; {_simple(s.step)})')
        _stmt(s.body, depth + 1, out)
    elif isinstance(s, m.For):
        init = _simple(s.init) if s.init is not None else ''
        cond = expr_to_str(s.cond) if s.cond is not None else ''
        step = _simple(s.step) if s.step is not None else ''
        out.append(f'{pad}for ({init}; {cond}; {step})')
        _stmt(s.body, depth + 1, out)
    elif isinstance(s, m.Break):
        out.append(pad + 'break;')
    elif isinstance(s, m.Continue):
        out.append(pad + 'continue;')
    elif isinstance(s, m.Return):
        out.append(pad + ('return;' if s.value is None else f'return {expr_to_str(s.value)};'))
    elif isinstance(s, m.Assert):
        out.append(f'{pad}assert({expr_to_str(s.cond)});')
    elif isinstance(s, m.Assume):
        out.append(f'{pad}__CPROVER_assume({expr_to_str(s.cond)});')
    elif isinstance(s, m.Free):
        out.append(f'{pad}free({expr_to_str(s.pointer)});')
    else:
        raise ValueError(f'cannot print {type(s).__name__}')


def _signature(func):
    params = ', '.join(declarator(p.type, p.name) for p in func.params)
    return declarator(func.return_type, f'{func.name}({params})')


def to_source(program):
    out = []
    for st in program.structs.values():
        if not st.fields:
            continue
        out.append(f'struct {st.name} {{')
        for fname, ftype in st.fields:
            out.append(f'{INDENT}{declarator(ftype, fname)};')
        out.append('};')
    for func in program.functions:
        if not func.is_defined:
            out.append(_signature(func) + ';')
    for decl in program.globals:
        out.append(_simple(decl) + ';')
    for func in program.functions:
        if func.is_defined:
            out.append(_signature(func))
            _stmt(func.body, 0, out)
    return '\n'.join(out) + '\n'


def structure(node):
    """Nested tuples describing a tree while ignoring locations and types."""
    if isinstance(node, m.MiniCProgram):
        return ('program', tuple(structure(f) for f in node.functions),
                tuple(structure(d) for d in node.globals))
    if isinstance(node, m.FunctionDef):
        return ('function', node.name, str(node.return_type),
                tuple((p.name, str(p.type)) for p in node.params),
                structure(node.body) if node.body is not None else None)
    if isinstance(node, list):
        return tuple(structure(x) for x in node)
    if isinstance(node, (m.Expr, m.Stmt)):
        fields = []
        for name, value in vars(node).items():
            if name in ('loc', 'type', 'text', 'uid'):
                continue
            if isinstance(value, m.TypeExpr):
                value = str(value)
            elif isinstance(value, (m.Expr, m.Stmt, list)):
                value = structure(value)
            fields.append((name, value))
        return (type(node).__name__, tuple(fields))
    return node
