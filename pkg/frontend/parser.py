"""
MiniC front end: a tiny preprocessor followed by pycparser.

The preprocessor removes comments, drops #include and #pragma lines and
expands constant #define macros. Every removed line is replaced by an empty
one so pycparser's line numbers match the source file. The pycparser tree is
then converted into frontend.models nodes.
"""

import logging
import re

from pycparser import c_ast, c_parser
from pycparser.plyparser import ParseError

from core.exceptions import MiniCSyntaxError, UnsupportedConstruct
from frontend import models as m

logger = logging.getLogger(__name__)

BUILTIN_MACROS = {
    'NULL': '((void *)0)',
    'true': '1',
    'false': '0',
    'CHAR_MIN': '(-128)',
    'CHAR_MAX': '127',
    'SCHAR_MIN': '(-128)',
    'SCHAR_MAX': '127',
    'UCHAR_MAX': '255',
    'SHRT_MIN': '(-32768)',
    'SHRT_MAX': '32767',
    'USHRT_MAX': '65535',
    'INT_MIN': '(-2147483647 - 1)',
    'INT_MAX': '2147483647',
    'UINT_MAX': '4294967295u',
    'LONG_MIN': '(-9223372036854775807l - 1)',
    'LONG_MAX': '9223372036854775807l',
    'ULONG_MAX': '18446744073709551615ul',
}

PRELUDE = 'typedef _Bool bool;\ntypedef unsigned long size_t;\n'

ASSUME_BUILTINS = ('__CPROVER_assume', '__VERIFIER_assume', 'assume')
ASSERT_BUILTINS = ('assert', '__CPROVER_assert')
STOP_BUILTINS = ('abort', 'exit')
NONDET_PREFIX = '__VERIFIER_nondet_'
SUPPORTED_BINARY = ('+', '-', '*', '<', '<=', '>', '>=', '==', '!=', '&&', '||')

_LEXEMES = re.compile(r'//[^\n]*|/\*.*?\*/|"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'', re.S)
_DEFINE = re.compile(r'define\s+([A-Za-z_]\w*)(\()?\s*(.*)$')
_WORD = re.compile(r'[A-Za-z_]\w*')
_POSITION = re.compile(r':(\d+):(\d+):?\s*(.*)$', re.S)


def strip_comments(text):
    def replace(match):
        lexeme = match.group(0)
        if lexeme.startswith('/*'):
            return ' ' + '\n' * lexeme.count('\n')
        if lexeme.startswith('//'):
            return ''
        return lexeme
    return _LEXEMES.sub(replace, text)


def _expand(line, macros):
    for _ in range(32):
        changed = False

        def substitute(match):
            nonlocal changed
            word = match.group(0)
            if word in macros:
                changed = True
                return macros[word]
            return word
        line = _WORD.sub(substitute, line)
        if not changed:
            return line
    return line


def preprocess(text, filename='<input>'):
    macros = dict(BUILTIN_MACROS)
    lines = strip_comments(text).split('\n')
    out = []
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        loc = m.SourceLocation(filename, lineno, 1)
        if not stripped.startswith('#'):
            out.append(_expand(line, macros))
            continue
        if stripped.endswith('\\'):
            raise UnsupportedConstruct('multi-line preprocessor directive', loc)
        directive = stripped[1:].strip()
        word = directive.split(None, 1)[0] if directive else ''
        if word in ('include', 'pragma', ''):
            out.append('')
        elif word == 'define':
            match = _DEFINE.match(directive)
            if match is None:
                raise MiniCSyntaxError('malformed #define', loc)
            if match.group(2):
                raise UnsupportedConstruct(f'function-like macro {match.group(1)}', loc)
            macros[match.group(1)] = _expand(match.group(3).strip(), macros)
            out.append('')
        else:
            raise UnsupportedConstruct(f'preprocessor directive #{word}', loc)
    return '\n'.join(out)


def parse(source_text, filename='<input>'):
    """Parse MiniC source into an untyped MiniCProgram."""
    body = preprocess(source_text, filename)
    text = PRELUDE + f'# 1 "{filename}"\n' + body
    try:
        tree = c_parser.CParser().parse(text, filename=filename)
    except ParseError as exc:
        match = _POSITION.search(str(exc))
        line = int(match.group(1)) if match else None
        column = int(match.group(2)) if match else None
        detail = match.group(3) if match else str(exc)
        raise MiniCSyntaxError(f'syntax error {detail}'.strip(),
                               m.SourceLocation(filename, line or 0, column or 0),
                               line=line, column=column) from exc
    program = _Converter(filename).convert(tree)
    logger.info('parsed %s: %d functions, %d globals', filename,
                len(program.functions), len(program.globals))
    return program


def parse_file(path):
    with open(path, encoding='utf-8') as handle:
        return parse(handle.read(), str(path))


def parse_files(paths):
    """Concatenate several translation units into one program."""
    programs = [parse_file(p) for p in paths]
    first = programs[0]
    for other in programs[1:]:
        for func in other.functions:
            existing = first.function(func.name)
            if existing is None:
                first.functions.append(func)
            elif not existing.is_defined and func.is_defined:
                first.functions[first.functions.index(existing)] = func
        first.globals.extend(other.globals)
        first.structs.update(other.structs)
    return first


_INT_NAMES = {
    ('int',): (32, True), ('signed',): (32, True), ('signed', 'int'): (32, True),
    ('unsigned',): (32, False), ('unsigned', 'int'): (32, False),
    ('long',): (64, True), ('long', 'int'): (64, True), ('signed', 'long'): (64, True),
    ('long', 'long'): (64, True), ('long', 'long', 'int'): (64, True),
    ('unsigned', 'long'): (64, False), ('unsigned', 'long', 'int'): (64, False),
    ('unsigned', 'long', 'long'): (64, False),
    ('short',): (16, True), ('short', 'int'): (16, True), ('signed', 'short'): (16, True),
    ('unsigned', 'short'): (16, False), ('unsigned', 'short', 'int'): (16, False),
    ('char',): (8, True), ('signed', 'char'): (8, True), ('unsigned', 'char'): (8, False),
}


class _Converter:

    def __init__(self, filename):
        self.filename = filename
        self.typedefs = {}
        self.structs = {}
        self.function = ''
        self.scopes = [{}]

    def loc(self, node):
        coord = getattr(node, 'coord', None)
        if coord is None:
            return m.SourceLocation(self.filename, 0, 0, self.function)
        return m.SourceLocation(coord.file or self.filename, coord.line or 0,
                                coord.column or 0, self.function)

    def unsupported(self, what, node):
        raise UnsupportedConstruct(what, self.loc(node))

    # Top level

    def convert(self, tree):
        functions = []
        globals_ = []
        for ext in tree.ext:
            if isinstance(ext, c_ast.FuncDef):
                func = self.function_def(ext)
                self._add_function(functions, func)
            elif isinstance(ext, c_ast.Typedef):
                self.typedef(ext)
            elif isinstance(ext, c_ast.Decl):
                if isinstance(ext.type, c_ast.FuncDecl):
                    self._add_function(functions, self.prototype(ext))
                elif ext.name is None:
                    self.convert_type(ext.type)
                else:
                    decl = self.declaration(ext)
                    self.scopes[0][decl.name] = decl.decl_type
                    globals_.append(decl)
            elif isinstance(ext, c_ast.Pragma):
                continue
            else:
                self.unsupported(f'top-level {type(ext).__name__}', ext)
        return m.MiniCProgram(functions=functions, globals=globals_,
                              structs=dict(self.structs), file=self.filename)

    @staticmethod
    def _add_function(functions, func):
        for i, existing in enumerate(functions):
            if existing.name == func.name:
                if func.is_defined:
                    functions[i] = func
                return
        functions.append(func)

    def typedef(self, node):
        if node.name in ('bool', 'size_t') and node.name in self.typedefs:
            return
        base = node.type
        if isinstance(base, c_ast.TypeDecl) and isinstance(base.type, c_ast.Struct) \
                and base.type.name is None:
            base.type.name = node.name
        self.typedefs[node.name] = self.convert_type(base)

    def _signature(self, decl_node):
        func_decl = decl_node.type
        params = []
        args = func_decl.args.params if func_decl.args is not None else []
        for p in args:
            if isinstance(p, c_ast.EllipsisParam):
                self.unsupported('variadic function', p)
            if isinstance(p, c_ast.Typename):
                if isinstance(self.convert_type(p.type), m.VoidType):
                    continue
                self.unsupported('unnamed parameter', p)
            ptype = self.convert_type(p.type)
            if ptype.is_array:
                ptype = m.PointerType(ptype.element)
            params.append(m.Param(p.name, ptype, loc=self.loc(p)))
        return params, self.convert_type(func_decl.type)

    def prototype(self, node):
        params, ret = self._signature(node)
        return m.FunctionDef(node.name, params, ret, None, self.loc(node))

    def function_def(self, node):
        self.function = node.decl.name
        if node.param_decls:
            self.unsupported('K&R parameter declarations', node)
        params, ret = self._signature(node.decl)
        self.scopes.append({p.name: p.type for p in params})
        try:
            body = self.block(node.body)
        finally:
            self.scopes.pop()
        func = m.FunctionDef(node.decl.name, params, ret, body, self.loc(node))
        self.function = ''
        return func

    # Types

    def convert_type(self, node):
        if isinstance(node, (c_ast.TypeDecl, c_ast.Typename)):
            return self.convert_type(node.type)
        if isinstance(node, c_ast.IdentifierType):
            return self.base_type(node.names, node)
        if isinstance(node, c_ast.PtrDecl):
            if isinstance(node.type, c_ast.FuncDecl):
                self.unsupported('function pointer', node)
            return m.PointerType(self.convert_type(node.type))
        if isinstance(node, c_ast.ArrayDecl):
            element = self.convert_type(node.type)
            if element.is_array:
                self.unsupported('multi-dimensional array', node)
            if element.is_pointer:
                self.unsupported('array of pointers', node)
            if node.dim is None:
                return m.PointerType(element)
            return m.ArrayType(element, self.constant_value(node.dim))
        if isinstance(node, c_ast.Struct):
            return self.struct(node)
        if isinstance(node, c_ast.Union):
            self.unsupported('union', node)
        if isinstance(node, c_ast.Enum):
            self.unsupported('enum', node)
        if isinstance(node, c_ast.FuncDecl):
            self.unsupported('function type', node)
        self.unsupported(f'type {type(node).__name__}', node)

    def base_type(self, names, node):
        names = tuple(names)
        if names in _INT_NAMES:
            width, signed = _INT_NAMES[names]
            return m.IntType(width, signed)
        if names == ('_Bool',):
            return m.BOOL
        if names == ('void',):
            return m.VOID
        if len(names) == 1 and names[0] in self.typedefs:
            return self.typedefs[names[0]]
        if {'float', 'double'} & set(names):
            self.unsupported('floating-point type', node)
        self.unsupported(f'type {" ".join(names)}', node)

    def struct(self, node):
        name = node.name or f'__anonymous_{len(self.structs)}'
        st = self.structs.get(name)
        if st is None:
            st = m.StructType(name)
            self.structs[name] = st
        if node.decls is not None:
            fields = []
            for d in node.decls:
                ftype = self.convert_type(d.type)
                if ftype.is_struct and not ftype.fields and ftype.name == name:
                    self.unsupported('recursive struct by value', d)
                fields.append((d.name, ftype))
            names = [f for f, _ in fields]
            if len(set(names)) != len(names):
                self.unsupported(f'duplicate field in struct {name}', node)
            object.__setattr__(st, 'fields', tuple(fields))
        return st

    def constant_value(self, node):
        expr = self.expr(node)
        value = _fold_constant(expr)
        if value is None or value <= 0:
            self.unsupported('array length must be a positive constant', node)
        return value

    # Declarations and statements

    def declaration(self, node):
        if node.bitsize is not None:
            self.unsupported('bit field', node)
        if 'static' in (node.storage or []) and self.function:
            self.unsupported('static local variable', node)
        dtype = self.convert_type(node.type)
        init = None
        if node.init is not None:
            if isinstance(node.init, c_ast.InitList):
                self.unsupported('initializer list', node.init)
            init = self.expr(node.init)
        return m.Decl(node.name, dtype, init, loc=self.loc(node))

    def declare(self, name, dtype):
        self.scopes[-1][name] = dtype

    def lookup(self, name):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def block(self, node):
        self.scopes.append({})
        try:
            items = []
            for item in node.block_items or []:
                items.extend(self.statement(item))
            return m.Block(items, loc=self.loc(node))
        finally:
            self.scopes.pop()

    def as_block(self, node):
        if isinstance(node, c_ast.Compound):
            return self.block(node)
        self.scopes.append({})
        try:
            stmts = self.statement(node)
        finally:
            self.scopes.pop()
        if len(stmts) == 1:
            return stmts[0]
        return m.Block(stmts, loc=self.loc(node))

    def statement(self, node):
        """Returns a list: one source statement may become several."""
        loc = self.loc(node)
        if isinstance(node, c_ast.Decl):
            if isinstance(node.type, c_ast.FuncDecl):
                return []
            if node.name is None:
                self.convert_type(node.type)
                return []
            if node.init is not None and _allocation_call(node.init) is not None:
                init, node.init = node.init, None
                decl = self.declaration(node)
                self.declare(decl.name, decl.decl_type)
                elem_type = self._malloc_call(init)
                return [decl, m.Malloc(m.Var(decl.name, loc=loc), elem_type, loc=loc)]
            decl = self.declaration(node)
            self.declare(decl.name, decl.decl_type)
            return [decl]
        if isinstance(node, c_ast.DeclList):
            out = []
            for d in node.decls:
                out.extend(self.statement(d))
            return out
        if isinstance(node, c_ast.Compound):
            return [self.block(node)]
        if isinstance(node, c_ast.Assignment):
            return [self.assignment(node)]
        if isinstance(node, c_ast.UnaryOp) and node.op in ('p++', 'p--', '++', '--'):
            target = self.lvalue(node.expr)
            self._reject_pointer_arithmetic(target, node)
            op = '+=' if '+' in node.op else '-='
            return [m.Assign(target, m.Const(1, '1', loc=loc), op, loc=loc)]
        if isinstance(node, c_ast.FuncCall):
            return [self.call_statement(node)]
        if isinstance(node, c_ast.If):
            other = self.as_block(node.iffalse) if node.iffalse is not None else None
            return [m.If(self.expr(node.cond), self.as_block(node.iftrue), other, loc=loc)]
        if isinstance(node, c_ast.While):
            return [m.While(self.expr(node.cond), self.as_block(node.stmt), loc=loc)]
        if isinstance(node, c_ast.For):
            self.scopes.append({})
            try:
                init = None
                if node.init is not None:
                    init_stmts = self.statement(node.init)
                    init = init_stmts[0] if len(init_stmts) == 1 else m.Block(init_stmts, loc=loc)
                cond = self.expr(node.cond) if node.cond is not None else None
                step = None
                if node.next is not None:
                    steps = self.statement(node.next)
                    step = steps[0] if len(steps) == 1 else m.Block(steps, loc=loc)
                body = self.as_block(node.stmt)
            finally:
                self.scopes.pop()
            return [m.For(init, cond, step, body, loc=loc)]
        if isinstance(node, c_ast.Break):
            return [m.Break(loc=loc)]
        if isinstance(node, c_ast.Continue):
            return [m.Continue(loc=loc)]
        if isinstance(node, c_ast.Return):
            return [m.Return(self.expr(node.expr) if node.expr is not None else None, loc=loc)]
        if isinstance(node, c_ast.EmptyStatement):
            return []
        if isinstance(node, c_ast.ExprList):
            out = []
            for e in node.exprs:
                out.extend(self.statement(e))
            return out
        if isinstance(node, c_ast.DoWhile):
            self.unsupported('do-while loop', node)
        if isinstance(node, (c_ast.Switch, c_ast.Goto, c_ast.Label)):
            self.unsupported(type(node).__name__.lower(), node)
        if isinstance(node, c_ast.Pragma):
            return []
        # expression statement without effect
        return [m.ExprStmt(self.expr(node), loc=loc)]

    def _malloc_call(self, node):
        """Element type of `malloc(sizeof(T))`, possibly under a cast; None otherwise."""
        node = _allocation_call(node)
        if node is None:
            return None
        args = node.args.exprs if node.args is not None else []
        if node.name.name == 'calloc':
            if len(args) != 2 or _fold_constant(self.expr(args[0])) != 1:
                self.unsupported('calloc must allocate exactly one object', node)
            args = args[1:]
        if len(args) != 1 or not (isinstance(args[0], c_ast.UnaryOp) and args[0].op == 'sizeof'):
            self.unsupported('malloc argument must be sizeof(T)', node)
        operand = args[0].expr
        return self.sizeof_type(operand, node)

    def sizeof_type(self, operand, node):
        if isinstance(operand, c_ast.Typename):
            return self.convert_type(operand.type)
        found = self.declared_type(self.expr(operand))
        if found is None:
            self.unsupported('sizeof of an expression of unknown type', node)
        return found

    def assignment(self, node):
        loc = self.loc(node)
        target = self.lvalue(node.lvalue)
        malloc = self._malloc_call(node.rvalue)
        if malloc is not None:
            if node.op != '=':
                self.unsupported('compound assignment of malloc', node)
            return m.Malloc(target, malloc, loc=loc)
        if node.op not in ('=', '+=', '-=', '*='):
            self.unsupported(f'assignment operator {node.op}', node)
        if node.op != '=':
            self._reject_pointer_arithmetic(target, node)
        return m.Assign(target, self.expr(node.rvalue), node.op, loc=loc)

    def call_statement(self, node):
        loc = self.loc(node)
        name = node.name.name if isinstance(node.name, c_ast.ID) else None
        if name is None:
            self.unsupported('call through an expression', node)
        args = [self.expr(a) for a in (node.args.exprs if node.args is not None else [])]
        if name in ASSERT_BUILTINS:
            if len(args) < 1:
                self.unsupported('assert without condition', node)
            return m.Assert(args[0], loc=loc)
        if name in ASSUME_BUILTINS:
            return m.Assume(args[0], loc=loc)
        if name in STOP_BUILTINS:
            return m.Assume(m.Const(0, '0', loc=loc), loc=loc)
        if name == '__VERIFIER_error' or name == 'reach_error':
            return m.Assert(m.Const(0, '0', loc=loc), loc=loc)
        if name == 'free':
            if len(args) != 1:
                self.unsupported('free takes one argument', node)
            return m.Free(args[0], loc=loc)
        if name in ('malloc', 'calloc'):
            self.unsupported('allocation result must be assigned', node)
        return m.ExprStmt(m.Call(name, args, loc=loc), loc=loc)

    # Expressions

    def lvalue(self, node):
        expr = self.expr(node)
        if not isinstance(expr, (m.Var, m.Deref, m.Field, m.Index)):
            self.unsupported('assignment to a non-lvalue', node)
        return expr

    def declared_type(self, expr):
        """Best-effort static type used to spot pointer arithmetic early."""
        if isinstance(expr, m.Var):
            return self.lookup(expr.name)
        if isinstance(expr, m.Cast) and not expr.implicit:
            return expr.target
        if isinstance(expr, m.Deref):
            t = self.declared_type(expr.pointer)
            return t.target if isinstance(t, m.PointerType) else None
        if isinstance(expr, m.Index):
            t = self.declared_type(expr.base)
            if isinstance(t, (m.PointerType, m.ArrayType)):
                return t.target if isinstance(t, m.PointerType) else t.element
        if isinstance(expr, m.Field):
            t = self.declared_type(expr.base)
            if expr.arrow and isinstance(t, m.PointerType):
                t = t.target
            if isinstance(t, m.StructType):
                return t.field_type(expr.name)
        return None

    def _reject_pointer_arithmetic(self, expr, node):
        if isinstance(self.declared_type(expr), m.PointerType):
            self.unsupported('pointer arithmetic', node)

    def expr(self, node):
        loc = self.loc(node)
        if isinstance(node, c_ast.Constant):
            return self.constant(node)
        if isinstance(node, c_ast.ID):
            return m.Var(node.name, loc=loc)
        if isinstance(node, c_ast.UnaryOp):
            op = node.op
            if op in ('p++', 'p--', '++', '--'):
                self.unsupported('side effect inside an expression', node)
            if op == 'sizeof':
                return m.SizeOf(target=self.sizeof_type(node.expr, node), loc=loc)
            operand = self.expr(node.expr)
            if op == '&':
                return m.AddressOf(operand, loc=loc)
            if op == '*':
                return m.Deref(operand, loc=loc)
            if op == '+':
                return operand
            if op in ('-', '!'):
                if op == '-':
                    self._reject_pointer_arithmetic(operand, node)
                return m.Unary(op, operand, loc=loc)
            self.unsupported(f'operator {op}', node)
        if isinstance(node, c_ast.BinaryOp):
            if node.op not in SUPPORTED_BINARY:
                self.unsupported(f'operator {node.op}', node)
            left = self.expr(node.left)
            right = self.expr(node.right)
            if node.op in ('+', '-', '*'):
                self._reject_pointer_arithmetic(left, node)
                self._reject_pointer_arithmetic(right, node)
            return m.Binary(node.op, left, right, loc=loc)
        if isinstance(node, c_ast.TernaryOp):
            return m.Ternary(self.expr(node.cond), self.expr(node.iftrue),
                             self.expr(node.iffalse), loc=loc)
        if isinstance(node, c_ast.Cast):
            target = self.convert_type(node.to_type)
            return m.Cast(self.expr(node.expr), target, implicit=False, loc=loc)
        if isinstance(node, c_ast.ArrayRef):
            return m.Index(self.expr(node.name), self.expr(node.subscript), loc=loc)
        if isinstance(node, c_ast.StructRef):
            return m.Field(self.expr(node.name), node.field.name, node.type == '->', loc=loc)
        if isinstance(node, c_ast.FuncCall):
            if not isinstance(node.name, c_ast.ID):
                self.unsupported('call through an expression', node)
            name = node.name.name
            if name in ('malloc', 'calloc'):
                self.unsupported('malloc inside an expression', node)
            args = [self.expr(a) for a in (node.args.exprs if node.args is not None else [])]
            return m.Call(name, args, loc=loc)
        if isinstance(node, c_ast.Assignment):
            self.unsupported('assignment inside an expression', node)
        if isinstance(node, c_ast.ExprList):
            self.unsupported('comma operator', node)
        self.unsupported(f'expression {type(node).__name__}', node)

    def constant(self, node):
        loc = self.loc(node)
        kind = node.type
        text = node.value
        if kind in ('float', 'double', 'long double'):
            self.unsupported('floating-point constant', node)
        if kind == 'string':
            self.unsupported('string literal', node)
        if kind == 'char':
            return m.Const(_char_value(text), text, loc=loc)
        digits = text.rstrip('uUlL')
        if digits.lower().startswith('0x'):
            value = int(digits, 16)
        elif len(digits) > 1 and digits.startswith('0'):
            value = int(digits, 8)
        else:
            value = int(digits)
        return m.Const(value, text, loc=loc)


def _allocation_call(node):
    while isinstance(node, c_ast.Cast):
        node = node.expr
    if isinstance(node, c_ast.FuncCall) and isinstance(node.name, c_ast.ID) \
            and node.name.name in ('malloc', 'calloc'):
        return node
    return None


_ESCAPES = {'n': 10, 't': 9, 'r': 13, '0': 0, '\\': 92, "'": 39, '"': 34, 'a': 7, 'b': 8,
            'f': 12, 'v': 11}


def _char_value(text):
    body = text[1:-1]
    if body.startswith('\\'):
        rest = body[1:]
        if rest.isdigit() and len(rest) > 1:
            return int(rest, 8)
        if rest.startswith('x'):
            return int(rest[1:], 16)
        return _ESCAPES.get(rest, ord(rest[0]))
    return ord(body)


def _fold_constant(expr):
    if isinstance(expr, m.Const):
        return expr.value
    if isinstance(expr, m.Unary) and expr.op == '-':
        inner = _fold_constant(expr.operand)
        return None if inner is None else -inner
    if isinstance(expr, m.Binary) and expr.op in ('+', '-', '*'):
        a, b = _fold_constant(expr.left), _fold_constant(expr.right)
        if a is None or b is None:
            return None
        return {'+': a + b, '-': a - b, '*': a * b}[expr.op]
    if isinstance(expr, m.Cast):
        return _fold_constant(expr.operand)
    return None


fold_constant = _fold_constant
