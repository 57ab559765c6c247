"""
Types and syntax tree of MiniC.

Expression and statement nodes are plain dataclasses. The parser fills in
`loc`; the type checker fills in `type` and rewrites implicit conversions
into explicit Cast nodes.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple


@dataclass(frozen=True)
class SourceLocation:
    file: str = '<input>'
    line: int = 0
    column: int = 0
    function: str = ''

    def __str__(self):
        return f'{self.file}:{self.line}:{self.column}'


NOWHERE = SourceLocation()


# Types

class TypeExpr:
    is_integer = False
    is_bool = False
    is_pointer = False
    is_struct = False
    is_array = False
    is_void = False

    @property
    def is_scalar(self):
        return self.is_integer or self.is_bool or self.is_pointer


@dataclass(frozen=True)
class IntType(TypeExpr):
    width: int
    signed: bool

    is_integer = True

    @property
    def min_value(self):
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max_value(self):
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def normalize(self, value):
        """Wrap a mathematical integer into this type's range."""
        value &= (1 << self.width) - 1
        if self.signed and value >> (self.width - 1):
            value -= 1 << self.width
        return value

    def __str__(self):
        names = {8: 'char', 16: 'short', 32: 'int', 64: 'long'}
        base = names.get(self.width, f'int{self.width}')
        if self.width == 8 and self.signed:
            return 'signed char'
        return base if self.signed else f'unsigned {base}'


@dataclass(frozen=True)
class BoolType(TypeExpr):
    is_bool = True

    def __str__(self):
        return '_Bool'


@dataclass(frozen=True)
class VoidType(TypeExpr):
    is_void = True

    def __str__(self):
        return 'void'


@dataclass(frozen=True)
class PointerType(TypeExpr):
    target: TypeExpr

    is_pointer = True

    def __str__(self):
        return f'{self.target} *'


@dataclass(frozen=True)
class ArrayType(TypeExpr):
    element: TypeExpr
    length: int

    is_array = True

    def __str__(self):
        return f'{self.element}[{self.length}]'


@dataclass(frozen=True, eq=False)
class StructType(TypeExpr):
    """Nominal: two struct types are equal iff their tags are."""
    name: str
    fields: Tuple = field(default=(), compare=False)

    is_struct = True

    def __eq__(self, other):
        return isinstance(other, StructType) and other.name == self.name

    def __hash__(self):
        return hash(('struct', self.name))

    def field_type(self, name):
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None

    def __str__(self):
        return f'struct {self.name}'


INT = IntType(32, True)
UINT = IntType(32, False)
LONG = IntType(64, True)
ULONG = IntType(64, False)
CHAR = IntType(8, True)
BOOL = BoolType()
VOID = VoidType()
NULL_TYPE = PointerType(VOID)


# Expressions

@dataclass(eq=False)
class Expr:
    loc: SourceLocation = field(default=NOWHERE, repr=False, kw_only=True)
    type: Optional[TypeExpr] = field(default=None, repr=False, kw_only=True)

    def children(self):
        return ()


@dataclass(eq=False)
class Const(Expr):
    value: int
    text: str = ''


@dataclass(eq=False)
class Var(Expr):
    name: str
    uid: str = ''


@dataclass(eq=False)
class Unary(Expr):
    op: str
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(eq=False)
class AddressOf(Expr):
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(eq=False)
class Deref(Expr):
    pointer: Expr

    def children(self):
        return (self.pointer,)


@dataclass(eq=False)
class Field(Expr):
    """`base.name`, or `base->name` when `arrow` is set."""
    base: Expr
    name: str
    arrow: bool = False

    def children(self):
        return (self.base,)


@dataclass(eq=False)
class Index(Expr):
    base: Expr
    index: Expr

    def children(self):
        return (self.base, self.index)


@dataclass(eq=False)
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr

    def children(self):
        return (self.cond, self.then, self.other)


@dataclass(eq=False)
class Cast(Expr):
    operand: Expr
    target: TypeExpr = None
    implicit: bool = True

    def children(self):
        return (self.operand,)


@dataclass(eq=False)
class Call(Expr):
    name: str
    args: List[Expr] = field(default_factory=list)

    def children(self):
        return tuple(self.args)


@dataclass(eq=False)
class Nondet(Expr):
    """Value chosen by the environment; `source` names the originating call."""
    source: str = ''


@dataclass(eq=False)
class SizeOf(Expr):
    target: TypeExpr = None


# Statements

@dataclass(eq=False)
class Stmt:
    loc: SourceLocation = field(default=NOWHERE, repr=False, kw_only=True)


@dataclass(eq=False)
class Decl(Stmt):
    name: str
    decl_type: TypeExpr
    init: Optional[object] = None
    uid: str = ''


@dataclass(eq=False)
class Assign(Stmt):
    target: Expr
    value: Expr
    op: str = '='


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class Block(Stmt):
    body: List[Stmt] = field(default_factory=list)


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Stmt
    other: Optional[Stmt] = None


@dataclass(eq=False)
class While(Stmt):
    """`step` is the desugared increment of a for loop; `continue` runs it."""
    cond: Expr
    body: Stmt
    step: Optional[Stmt] = None


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    step: Optional[Stmt]
    body: Stmt


@dataclass(eq=False)
class Break(Stmt):
    pass


@dataclass(eq=False)
class Continue(Stmt):
    pass


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass(eq=False)
class Assert(Stmt):
    cond: Expr
    text: str = ''


@dataclass(eq=False)
class Assume(Stmt):
    cond: Expr


@dataclass(eq=False)
class Malloc(Stmt):
    target: Expr
    elem_type: TypeExpr = None


@dataclass(eq=False)
class Free(Stmt):
    pointer: Expr


# Program

@dataclass
class Param:
    name: str
    type: TypeExpr
    uid: str = ''
    loc: SourceLocation = NOWHERE


@dataclass
class FunctionDef:
    name: str
    params: List[Param]
    return_type: TypeExpr
    body: Optional[Block]
    loc: SourceLocation = NOWHERE

    @property
    def is_defined(self):
        return self.body is not None


@dataclass
class VarInfo:
    uid: str
    name: str
    type: TypeExpr
    function: str = ''
    is_global: bool = False
    is_param: bool = False
    loc: SourceLocation = NOWHERE
    address_taken: bool = False


@dataclass
class MiniCProgram:
    functions: List[FunctionDef]
    globals: List[Decl]
    structs: dict = field(default_factory=dict)
    file: str = '<input>'
    typed: bool = False
    variables: dict = field(default_factory=dict)
    entry: str = 'main'

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        return None


def walk_expr(expr):
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))