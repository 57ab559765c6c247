"""
Type checking and normalisation of a parsed MiniC program.

Every expression receives a `type`; implicit conversions become Cast nodes;
conditions are coerced to _Bool; for loops become while loops carrying their
step; compound assignments become plain ones; variables receive unique ids
(`name` for globals, `function::name` for locals, `$n` on shadowing).
"""

import logging

from core.exceptions import (EntryNotFound, NotAnLvalue, TypeCheckError,
                             UnknownIdentifier, UnsupportedConstruct)
from frontend import models as m
from frontend.printer import expr_to_str

logger = logging.getLogger(__name__)

NONDET_PREFIX = '__VERIFIER_nondet_'
POINTER_BYTES = 8


def sizeof(t):
    if isinstance(t, m.IntType):
        return t.width // 8
    if t.is_bool:
        return 1
    if t.is_pointer:
        return POINTER_BYTES
    if isinstance(t, m.ArrayType):
        return t.length * sizeof(t.element)
    if isinstance(t, m.StructType):
        return sum(sizeof(ft) for _, ft in t.fields) or 1
    return 1


def promote(t):
    """Integer promotion: everything narrower than int becomes int."""
    if t.is_bool or (isinstance(t, m.IntType) and t.width < 32):
        return m.INT
    return t


def common_type(a, b):
    a, b = promote(a), promote(b)
    if a == b:
        return a
    if a.width != b.width:
        return a if a.width > b.width else b
    return m.IntType(a.width, False)


def is_null_constant(e):
    while isinstance(e, m.Cast):
        e = e.operand
    return isinstance(e, m.Const) and e.value == 0


def literal_type(const):
    text = const.text or str(const.value)
    if text.startswith("'"):
        return m.INT
    digits = text.rstrip('uUlL')
    suffix = text[len(digits):].lower()
    unsigned = 'u' in suffix
    based = len(digits) > 1 and digits.startswith('0')
    candidates = []
    if 'l' not in suffix:
        if not unsigned:
            candidates.append(m.INT)
        if unsigned or based:
            candidates.append(m.UINT)
    if not unsigned:
        candidates.append(m.LONG)
    candidates.append(m.ULONG)
    for t in candidates:
        if const.value <= t.max_value:
            return t
    raise UnsupportedConstruct(f'integer constant {text} is too large', const.loc)


def cast(e, target, implicit=True):
    if e.type == target:
        return e
    return m.Cast(e, target, implicit=implicit, loc=e.loc, type=target)


def to_bool(e):
    t = e.type
    if t.is_bool:
        return e
    if t.is_pointer:
        null = m.Cast(m.Const(0, '0', loc=e.loc, type=m.INT), t, implicit=True, loc=e.loc, type=t)
        return m.Binary('!=', e, null, loc=e.loc, type=m.BOOL)
    if t.is_integer:
        return m.Binary('!=', e, m.Const(0, '0', loc=e.loc, type=t), loc=e.loc, type=m.BOOL)
    raise TypeCheckError(f'{t} used as a condition', e.loc)


class _Scope:

    def __init__(self, parent=None):
        self.parent = parent
        self.names = {}

    def lookup(self, name):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class TypeChecker:

    def __init__(self, program, entry='main'):
        self.program = program
        self.entry = entry
        self.variables = {}
        self.functions = {f.name: f for f in program.functions}
        self.function = None
        self.scope = _Scope()
        self.globals = self.scope
        self.loop_depth = 0

    def run(self):
        if self.entry not in self.functions or not self.functions[self.entry].is_defined:
            raise EntryNotFound(f'entry function `{self.entry}\' is not defined')
        for decl in self.program.globals:
            self.declare_global(decl)
        for func in self.program.functions:
            for p in func.params:
                self.check_object_type(p.type, p.loc)
            if func.is_defined:
                self.check_function(func)
        self.program.variables = self.variables
        self.program.entry = self.entry
        self.program.typed = True
        logger.info('type checked %d functions, %d variables', len(self.functions), len(self.variables))
        return self.program

    # Declarations

    def check_object_type(self, t, loc):
        if t.is_void:
            raise TypeCheckError('variable of type void', loc)
        if isinstance(t, m.StructType) and not t.fields:
            raise TypeCheckError(f'incomplete type {t}', loc)
        if isinstance(t, m.IntType) and t.width not in (8, 16, 32, 64):
            raise UnsupportedConstruct(f'integer width {t.width}', loc)
        if isinstance(t, m.ArrayType) and not (t.element.is_integer or t.element.is_bool):
            raise UnsupportedConstruct(f'array of {t.element}', loc)
        if isinstance(t, m.StructType):
            for fname, ftype in t.fields:
                if not ftype.is_scalar:
                    raise UnsupportedConstruct(f'field `{fname}\' of type {ftype} in {t}', loc)

    def new_uid(self, name):
        base = f'{self.function.name}::{name}' if self.function else name
        uid = base
        n = 1
        while uid in self.variables:
            uid = f'{base}${n}'
            n += 1
        return uid

    def bind(self, name, vtype, loc, is_param=False):
        if name in self.scope.names:
            raise TypeCheckError(f'redeclaration of `{name}\'', loc)
        uid = self.new_uid(name)
        info = m.VarInfo(uid, name, vtype, function=self.function.name if self.function else '',
                         is_global=self.function is None, is_param=is_param, loc=loc)
        self.variables[uid] = info
        self.scope.names[name] = info
        return info

    def declare_global(self, decl):
        self.check_object_type(decl.decl_type, decl.loc)
        if decl.name in self.globals.names:
            previous = self.globals.names[decl.name]
            if previous.type != decl.decl_type:
                raise TypeCheckError(f'conflicting types for `{decl.name}\'', decl.loc)
            decl.uid = previous.uid
        else:
            decl.uid = self.bind(decl.name, decl.decl_type, decl.loc).uid
        if decl.init is not None:
            decl.init = self.coerce(self.expr(decl.init), decl.decl_type)

    def check_function(self, func):
        self.function = func
        self.scope = _Scope(self.globals)
        for p in func.params:
            p.uid = self.bind(p.name, p.type, p.loc, is_param=True).uid
        func.body = self.block(func.body, new_scope=False)
        self.scope = self.globals
        self.function = None

    # Statements

    def block(self, block, new_scope=True):
        if new_scope:
            self.scope = _Scope(self.scope)
        try:
            block.body = [s for s in (self.stmt(s) for s in block.body) if s is not None]
        finally:
            if new_scope:
                self.scope = self.scope.parent
        return block

    def sub_stmt(self, stmt):
        self.scope = _Scope(self.scope)
        try:
            return self.stmt(stmt) or m.Block([], loc=stmt.loc)
        finally:
            self.scope = self.scope.parent

    def stmt(self, s):
        handler = getattr(self, f'stmt_{type(s).__name__.lower()}')
        return handler(s)

    def stmt_decl(self, s):
        self.check_object_type(s.decl_type, s.loc)
        init = self.coerce(self.expr(s.init), s.decl_type) if s.init is not None else None
        s.uid = self.bind(s.name, s.decl_type, s.loc).uid
        s.init = init
        return s

    def stmt_block(self, s):
        return self.block(s)

    def stmt_assign(self, s):
        target = self.lvalue(s.target)
        if target.type.is_array or target.type.is_struct:
            raise UnsupportedConstruct(f'assignment of {target.type}', s.loc)
        value = self.expr(s.value)
        if s.op != '=':
            op = s.op[0]
            value = self.arith(m.Binary(op, target, value, loc=s.loc))
            s.op = '='
        s.target = target
        s.value = self.coerce(value, target.type)
        return s

    def stmt_exprstmt(self, s):
        s.expr = self.expr(s.expr)
        return s

    def stmt_if(self, s):
        s.cond = to_bool(self.expr(s.cond))
        s.then = self.sub_stmt(s.then)
        if s.other is not None:
            s.other = self.sub_stmt(s.other)
        return s

    def stmt_while(self, s):
        s.cond = to_bool(self.expr(s.cond))
        self.loop_depth += 1
        try:
            s.body = self.sub_stmt(s.body)
            if s.step is not None:
                s.step = self.sub_stmt(s.step)
        finally:
            self.loop_depth -= 1
        return s

    def stmt_for(self, s):
        self.scope = _Scope(self.scope)
        try:
            if isinstance(s.init, m.Block):
                init = m.Block([self.stmt(x) for x in s.init.body], loc=s.init.loc)
            else:
                init = self.stmt(s.init) if s.init is not None else None
            cond = s.cond if s.cond is not None else m.Const(1, '1', loc=s.loc)
            loop = self.stmt_while(m.While(cond, s.body, s.step, loc=s.loc))
        finally:
            self.scope = self.scope.parent
        return m.Block([init, loop] if init is not None else [loop], loc=s.loc)

    def stmt_break(self, s):
        if not self.loop_depth:
            raise TypeCheckError('break outside a loop', s.loc)
        return s

    def stmt_continue(self, s):
        if not self.loop_depth:
            raise TypeCheckError('continue outside a loop', s.loc)
        return s

    def stmt_return(self, s):
        ret = self.function.return_type
        if s.value is None:
            if not ret.is_void:
                raise TypeCheckError('return without a value in a non-void function', s.loc)
            return s
        if ret.is_void:
            raise TypeCheckError('return with a value in a void function', s.loc)
        s.value = self.coerce(self.expr(s.value), ret)
        return s

    def stmt_assert(self, s):
        s.text = expr_to_str(s.cond)
        s.cond = to_bool(self.expr(s.cond))
        return s

    def stmt_assume(self, s):
        s.cond = to_bool(self.expr(s.cond))
        return s

    def stmt_malloc(self, s):
        target = self.lvalue(s.target)
        if not target.type.is_pointer:
            raise TypeCheckError('malloc result assigned to a non-pointer', s.loc)
        self.check_object_type(s.elem_type, s.loc)
        pointee = target.type.target
        if not pointee.is_void and pointee != s.elem_type:
            raise TypeCheckError(f'allocating {s.elem_type} for a {target.type}', s.loc)
        if s.elem_type.is_array:
            raise UnsupportedConstruct('dynamically allocated array', s.loc)
        s.target = target
        return s

    def stmt_free(self, s):
        s.pointer = self.expr(s.pointer)
        if not s.pointer.type.is_pointer:
            raise TypeCheckError('free of a non-pointer', s.loc)
        return s

    # Expressions

    def lvalue(self, e):
        e = self.expr(e)
        if not isinstance(e, (m.Var, m.Deref, m.Field, m.Index)):
            raise NotAnLvalue('assignment to a non-lvalue', e.loc)
        return e

    def coerce(self, e, target):
        t = e.type
        if t == target:
            return e
        if target.is_bool:
            return to_bool(e)
        if target.is_integer and (t.is_integer or t.is_bool):
            return cast(e, target)
        if target.is_pointer:
            if t.is_pointer and (t.target.is_void or target.target.is_void or t == target):
                return cast(e, target)
            if t.is_integer and is_null_constant(e):
                return cast(e, target)
        raise TypeCheckError(f'cannot convert {t} to {target}', e.loc)

    def expr(self, e):
        handler = getattr(self, f'expr_{type(e).__name__.lower()}')
        result = handler(e)
        if result.type is None:
            raise TypeCheckError('expression without a type', e.loc)
        return result

    def expr_const(self, e):
        e.type = literal_type(e)
        return e

    def expr_var(self, e):
        info = self.scope.lookup(e.name)
        if info is None:
            if e.name in self.functions:
                raise UnsupportedConstruct('function used as a value', e.loc)
            raise UnknownIdentifier(f'unknown identifier `{e.name}\'', e.loc)
        e.uid = info.uid
        e.type = info.type
        return e

    def expr_unary(self, e):
        operand = self.expr(e.operand)
        if e.op == '!':
            e.operand = to_bool(operand)
            e.type = m.BOOL
            return e
        if not (operand.type.is_integer or operand.type.is_bool):
            raise TypeCheckError(f'unary {e.op} on {operand.type}', e.loc)
        t = promote(operand.type)
        e.operand = cast(operand, t)
        e.type = t
        return e

    def arith(self, e):
        """Types an arithmetic Binary whose operands may still be untyped."""
        left = e.left if e.left.type is not None else self.expr(e.left)
        right = e.right if e.right.type is not None else self.expr(e.right)
        for side in (left, right):
            if side.type.is_pointer:
                raise UnsupportedConstruct('pointer arithmetic', e.loc)
            if not (side.type.is_integer or side.type.is_bool):
                raise TypeCheckError(f'arithmetic on {side.type}', e.loc)
        t = common_type(left.type, right.type)
        e.left, e.right, e.type = cast(left, t), cast(right, t), t
        return e

    def expr_binary(self, e):
        op = e.op
        if op in ('+', '-', '*'):
            return self.arith(e)
        if op in ('&&', '||'):
            e.left = to_bool(self.expr(e.left))
            e.right = to_bool(self.expr(e.right))
            e.type = m.BOOL
            return e
        left, right = self.expr(e.left), self.expr(e.right)
        e.type = m.BOOL
        if left.type.is_pointer or right.type.is_pointer:
            if op not in ('==', '!='):
                raise UnsupportedConstruct('relational comparison of pointers', e.loc)
            pointer = left.type if left.type.is_pointer else right.type
            e.left, e.right = self.coerce(left, pointer), self.coerce(right, pointer)
            return e
        for side in (left, right):
            if not (side.type.is_integer or side.type.is_bool):
                raise TypeCheckError(f'comparison of {side.type}', e.loc)
        t = common_type(left.type, right.type)
        e.left, e.right = cast(left, t), cast(right, t)
        return e

    def expr_addressof(self, e):
        operand = self.expr(e.operand)
        if not isinstance(operand, (m.Var, m.Deref, m.Field, m.Index)):
            raise NotAnLvalue('address-of applied to a non-lvalue', e.loc)
        if not isinstance(operand, m.Var):
            raise UnsupportedConstruct('address of a non-variable lvalue', e.loc)
        if operand.type.is_array:
            raise UnsupportedConstruct('address of an array', e.loc)
        self.variables[operand.uid].address_taken = True
        e.operand = operand
        e.type = m.PointerType(operand.type)
        return e

    def expr_deref(self, e):
        pointer = self.expr(e.pointer)
        if not pointer.type.is_pointer:
            raise TypeCheckError(f'dereference of non-pointer type {pointer.type}', e.loc)
        if pointer.type.target.is_void:
            raise TypeCheckError('dereference of void *', e.loc)
        e.pointer = pointer
        e.type = pointer.type.target
        return e

    def expr_field(self, e):
        base = self.expr(e.base)
        st = base.type
        if e.arrow:
            if not st.is_pointer:
                raise TypeCheckError(f'-> applied to {st}', e.loc)
            st = st.target
        if not isinstance(st, m.StructType):
            raise TypeCheckError(f'field access on {st}', e.loc)
        ftype = st.field_type(e.name)
        if ftype is None:
            raise TypeCheckError(f'{st} has no field `{e.name}\'', e.loc)
        e.base = base
        e.type = ftype
        return e

    def expr_index(self, e):
        base = self.expr(e.base)
        index = self.expr(e.index)
        if not (index.type.is_integer or index.type.is_bool):
            raise TypeCheckError(f'array index of type {index.type}', e.loc)
        e.index = cast(index, promote(index.type))
        if base.type.is_array:
            e.type = base.type.element
        elif base.type.is_pointer:
            # unknown memory: reads are nondet, writes are lost
            if base.type.target.is_void:
                raise TypeCheckError('indexing a void *', e.loc)
            e.type = base.type.target
        else:
            raise TypeCheckError(f'indexing a value of type {base.type}', e.loc)
        e.base = base
        return e

    def expr_ternary(self, e):
        cond = to_bool(self.expr(e.cond))
        then, other = self.expr(e.then), self.expr(e.other)
        if then.type.is_pointer or other.type.is_pointer:
            t = then.type if then.type.is_pointer else other.type
            if is_null_constant(then) and other.type.is_pointer:
                t = other.type
        elif then.type.is_bool and other.type.is_bool:
            t = m.BOOL
        else:
            t = common_type(then.type, other.type)
        e.cond, e.then, e.other, e.type = cond, self.coerce(then, t), self.coerce(other, t), t
        return e

    def expr_cast(self, e):
        operand = self.expr(e.operand)
        target = e.target
        if target.is_void or target.is_struct or target.is_array:
            raise UnsupportedConstruct(f'cast to {target}', e.loc)
        if target.is_pointer and operand.type.is_integer and not is_null_constant(operand):
            raise UnsupportedConstruct('cast of an integer to a pointer', e.loc)
        if operand.type.is_pointer and not target.is_pointer:
            raise UnsupportedConstruct('cast of a pointer to an integer', e.loc)
        e.operand = to_bool(operand) if target.is_bool else operand
        e.type = target
        return e

    def expr_call(self, e):
        func = self.functions.get(e.name)
        if e.name.startswith(NONDET_PREFIX) or func is None or not func.is_defined:
            if func is None and not e.name.startswith(NONDET_PREFIX):
                raise UnknownIdentifier(f'call to undeclared function `{e.name}\'', e.loc)
            ret = func.return_type if func is not None else _nondet_type(e.name, e.loc)
            for a in e.args:
                self.expr(a)
            if ret.is_void:
                return m.Nondet(source=e.name, loc=e.loc, type=m.VOID)
            return m.Nondet(source=e.name, loc=e.loc, type=ret)
        if len(e.args) != len(func.params):
            raise TypeCheckError(f'`{e.name}\' takes {len(func.params)} arguments', e.loc)
        e.args = [self.coerce(self.expr(a), p.type) for a, p in zip(e.args, func.params)]
        for a in e.args:
            if a.type.is_array:
                raise UnsupportedConstruct('array passed as an argument', a.loc)
        e.type = func.return_type
        return e

    def expr_nondet(self, e):
        return e

    def expr_sizeof(self, e):
        return m.Const(sizeof(e.target), str(sizeof(e.target)), loc=e.loc, type=m.ULONG)


_NONDET_TYPES = {
    'int': m.INT, 'uint': m.UINT, 'unsigned': m.UINT, 'long': m.LONG, 'ulong': m.ULONG,
    'char': m.CHAR, 'uchar': m.IntType(8, False), 'short': m.IntType(16, True),
    'ushort': m.IntType(16, False), 'bool': m.BOOL, '_Bool': m.BOOL,
}


def _nondet_type(name, loc):
    suffix = name[len(NONDET_PREFIX):]
    if suffix not in _NONDET_TYPES:
        raise UnsupportedConstruct(f'unknown nondet builtin `{name}\'', loc)
    return _NONDET_TYPES[suffix]


def typecheck(program, entry='main'):
    """Annotate `program` in place and return it."""
    return TypeChecker(program, entry).run()


def walk_typed(program):
    """Yields every expression node of a typed program."""
    stack = [d.init for d in program.globals if d.init is not None]
    for func in program.functions:
        if func.body is not None:
            stack.extend(_stmt_exprs(func.body))
    while stack:
        node = stack.pop()
        if isinstance(node, m.Expr):
            yield node
            stack.extend(node.children())


def _stmt_exprs(s):
    if isinstance(s, m.Block):
        for child in s.body:
            yield from _stmt_exprs(child)
    elif isinstance(s, m.Decl):
        if s.init is not None:
            yield s.init
    elif isinstance(s, m.Assign):
        yield s.target
        yield s.value
    elif isinstance(s, m.ExprStmt):
        yield s.expr
    elif isinstance(s, m.If):
        yield s.cond
        yield from _stmt_exprs(s.then)
        if s.other is not None:
            yield from _stmt_exprs(s.other)
    elif isinstance(s, m.While):
        yield s.cond
        yield from _stmt_exprs(s.body)
        if s.step is not None:
            yield from _stmt_exprs(s.step)
    elif isinstance(s, m.Return):
        if s.value is not None:
            yield s.value
    elif isinstance(s, (m.Assert, m.Assume)):
        yield s.cond
    elif isinstance(s, m.Malloc):
        yield s.target
    elif isinstance(s, m.Free):
        yield s.pointer
