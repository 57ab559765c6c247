"""
Lowering of typed MiniC functions into guarded-goto instruction lists.

Loops take the shape

    head:  SKIP
           <hoisted parts of the condition>
           GOTO exit IF !cond
           <body>
    cont:  SKIP
           <step>
           GOTO head
    exit:  SKIP

so every loop is a contiguous range [head, latch] whose only back edge is
the final GOTO. Calls, nondet choices, reads through pointers and reads of
unknown memory are hoisted into temporaries in evaluation order; those
hoisted under a short-circuit operator sit behind a jump so they run
exactly when C would evaluate them.
"""

import itertools
import logging

from core.exceptions import EntryNotFound, UnsupportedConstruct
from frontend import models as m
from frontend.printer import expr_to_str
from midend.inline import number_sites, splice
from midend.models import (FunctionBody, GotoInstr, GotoProgram, InstrKind, Label,
                           is_unknown_memory, negate)

logger = logging.getLogger(__name__)

UNKNOWN_MEMORY = '<unknown memory>'
RETURN_PREFIX = '$ret'


class Temporaries:
    """Fresh variables shared by all functions of one program."""

    def __init__(self, variables):
        self.variables = variables
        self.counter = itertools.count(1)

    def fresh(self, t, function, prefix='$tmp'):
        uid = f'{prefix}{next(self.counter)}'
        self.variables[uid] = m.VarInfo(uid, uid, t, function=function)
        return m.Var(uid, uid, type=t)


class FunctionLowering:

    def __init__(self, func, temporaries):
        self.func = func
        self.temps = temporaries
        self.out = []
        self.pending_decls = []
        self.loops = []

    # Emission

    def emit(self, kind, loc, **fields):
        instr = GotoInstr(kind, loc, **fields)
        self.out.append(instr)
        return instr

    def place(self, label, loc):
        return self.emit(InstrKind.SKIP, loc, label=label)

    def jump(self, label, loc, cond=None):
        return self.emit(InstrKind.GOTO, loc, target=label, cond=cond)

    def temp(self, t, loc):
        var = self.temps.fresh(t, self.func.name)
        var.loc = loc
        self.pending_decls.append(GotoInstr(InstrKind.DECL, loc, lhs=var, havoc=False))
        return var

    # Driver

    def run(self):
        self.statement(self.func.body)
        self.out = resolve_labels(self.out)
        params = [p.uid for p in self.func.params]
        return FunctionBody(self.func.name, params, self.func.return_type, self.out, self.func.loc)

    def statement(self, s):
        """Lowers one statement; temporaries are declared ahead of its code."""
        if isinstance(s, (m.Block, m.If, m.While)):
            getattr(self, f'stmt_{type(s).__name__.lower()}')(s)
            return
        saved, self.out = self.out, []
        saved_decls, self.pending_decls = self.pending_decls, []
        try:
            getattr(self, f'stmt_{type(s).__name__.lower()}')(s)
            code = self.pending_decls + self.out
        finally:
            self.out, self.pending_decls = saved, saved_decls
        self.out.extend(code)

    def condition(self, e):
        """Lowers a condition, keeping its hoisted code and temporaries in order."""
        saved, self.out = self.out, []
        saved_decls, self.pending_decls = self.pending_decls, []
        try:
            pure = self.expr(e)
            code = self.pending_decls + self.out
        finally:
            self.out, self.pending_decls = saved, saved_decls
        self.out.extend(code)
        return pure

    # Statements

    def stmt_block(self, s):
        for child in s.body:
            self.statement(child)

    def stmt_decl(self, s):
        var = m.Var(s.name, s.uid, loc=s.loc, type=s.decl_type)
        if s.init is None:
            self.emit(InstrKind.DECL, s.loc, lhs=var, havoc=True)
            return
        value = self.expr(s.init)
        self.emit(InstrKind.DECL, s.loc, lhs=var, havoc=False)
        self.emit(InstrKind.ASSIGN, s.loc, lhs=var, rhs=value)

    def stmt_assign(self, s):
        if is_unknown_memory(s.target):
            # the store is lost; the value is still computed
            value = self.expr(s.value)
            self.emit(InstrKind.ASSIGN, s.loc, lhs=self.temp(value.type, s.loc), rhs=value)
            return
        target = self.lvalue(s.target)
        value = self.expr(s.value)
        self.emit(InstrKind.ASSIGN, s.loc, lhs=target, rhs=value, description=pointer_text(s.target))

    def stmt_exprstmt(self, s):
        value = self.expr(s.expr)
        if value is None or isinstance(value, (m.Const, m.Var)):
            return
        self.emit(InstrKind.ASSIGN, s.loc, lhs=self.temp(value.type, s.loc), rhs=value)

    def stmt_if(self, s):
        cond = self.condition(s.cond)
        other = Label('else')
        end = Label('endif')
        self.jump(other if s.other is not None else end, s.loc, negate(cond))
        self.statement(s.then)
        if s.other is not None:
            self.jump(end, s.loc)
            self.place(other, s.loc)
            self.statement(s.other)
        self.place(end, s.loc)

    def stmt_while(self, s):
        head, cont, exit_ = Label('head'), Label('cont'), Label('exit')
        self.place(head, s.loc)
        cond = self.condition(s.cond)
        if not (isinstance(cond, m.Const) and cond.value != 0):
            self.jump(exit_, s.loc, negate(cond))
        self.loops.append((cont, exit_))
        try:
            self.statement(s.body)
        finally:
            self.loops.pop()
        self.place(cont, s.loc)
        if s.step is not None:
            self.statement(s.step)
        self.jump(head, s.loc)
        self.place(exit_, s.loc)

    def stmt_break(self, s):
        self.jump(self.loops[-1][1], s.loc)

    def stmt_continue(self, s):
        self.jump(self.loops[-1][0], s.loc)

    def stmt_return(self, s):
        value = self.expr(s.value) if s.value is not None else None
        self.emit(InstrKind.RETURN, s.loc, rhs=value)

    def stmt_assert(self, s):
        cond = self.expr(s.cond)
        self.emit(InstrKind.ASSERT, s.loc, cond=cond, description=f'assertion {s.text}')

    def stmt_assume(self, s):
        self.emit(InstrKind.ASSUME, s.loc, cond=self.expr(s.cond))

    def stmt_malloc(self, s):
        if isinstance(s.target, m.Var):
            self.emit(InstrKind.MALLOC, s.loc, lhs=s.target, elem_type=s.elem_type)
            return
        if is_unknown_memory(s.target):
            holder = self.temp(s.target.type, s.loc)
            self.emit(InstrKind.MALLOC, s.loc, lhs=holder, elem_type=s.elem_type)
            return
        target = self.lvalue(s.target)
        holder = self.temp(s.target.type, s.loc)
        self.emit(InstrKind.MALLOC, s.loc, lhs=holder, elem_type=s.elem_type)
        self.emit(InstrKind.ASSIGN, s.loc, lhs=target, rhs=holder, description=pointer_text(s.target))

    def stmt_free(self, s):
        self.emit(InstrKind.FREE, s.loc, rhs=self.pointer_var(self.expr(s.pointer)),
                  description=expr_to_str(s.pointer))

    # Lvalues

    def pointer_var(self, pure):
        """A variable holding the pointer value `pure`."""
        if isinstance(pure, m.Var):
            return pure
        holder = self.temp(pure.type, pure.loc)
        self.emit(InstrKind.ASSIGN, pure.loc, lhs=holder, rhs=pure)
        return holder

    def lvalue(self, e):
        """Pure lvalue: a variable, a static field or element, or *p / p->f with p a variable."""
        if isinstance(e, m.Var):
            return e
        if isinstance(e, m.Deref):
            pointer = self.pointer_var(self.expr(e.pointer))
            return m.Deref(pointer, loc=e.loc, type=e.type)
        if isinstance(e, m.Field):
            if e.arrow:
                pointer = self.pointer_var(self.expr(e.base))
                return m.Field(pointer, e.name, True, loc=e.loc, type=e.type)
            if isinstance(e.base, m.Deref):
                pointer = self.pointer_var(self.expr(e.base.pointer))
                return m.Field(pointer, e.name, True, loc=e.loc, type=e.type)
            base = self.lvalue(e.base)
            if not isinstance(base, m.Var):
                raise UnsupportedConstruct('field of a non-variable struct', e.loc)
            return m.Field(base, e.name, False, loc=e.loc, type=e.type)
        if isinstance(e, m.Index):
            base = self.lvalue(e.base)
            if not isinstance(base, m.Var):
                raise UnsupportedConstruct('array that is not a variable', e.loc)
            index = self.expr(e.index)
            return m.Index(base, index, loc=e.loc, type=e.type)
        raise UnsupportedConstruct(f'lvalue {type(e).__name__}', e.loc)

    # Expressions

    def hoist(self, rhs, t, loc, description=''):
        holder = self.temp(t, loc)
        self.emit(InstrKind.ASSIGN, loc, lhs=holder, rhs=rhs, description=description)
        return holder

    def guarded(self, mark, cond, loc, when_true=True):
        """Puts the code emitted since `mark` behind a jump taken unless `cond` == when_true."""
        if len(self.out) == mark:
            return
        code = self.out[mark:]
        del self.out[mark:]
        skip = Label('skip')
        self.jump(skip, loc, negate(cond) if when_true else cond)
        self.out.extend(code)
        self.place(skip, loc)

    def expr(self, e):
        if is_unknown_memory(e):
            return self.hoist(m.Nondet(UNKNOWN_MEMORY, loc=e.loc, type=e.type), e.type, e.loc)
        return getattr(self, f'expr_{type(e).__name__.lower()}')(e)

    def expr_const(self, e):
        return e

    def expr_var(self, e):
        return e

    def expr_unary(self, e):
        return m.Unary(e.op, self.expr(e.operand), loc=e.loc, type=e.type)

    def expr_binary(self, e):
        left = self.expr(e.left)
        mark = len(self.out)
        right = self.expr(e.right)
        if e.op in ('&&', '||'):
            self.guarded(mark, left, e.loc, when_true=e.op == '&&')
        return m.Binary(e.op, left, right, loc=e.loc, type=e.type)

    def expr_ternary(self, e):
        cond = self.expr(e.cond)
        mark = len(self.out)
        then = self.expr(e.then)
        self.guarded(mark, cond, e.loc, when_true=True)
        mark = len(self.out)
        other = self.expr(e.other)
        self.guarded(mark, cond, e.loc, when_true=False)
        return m.Ternary(cond, then, other, loc=e.loc, type=e.type)

    def expr_cast(self, e):
        return m.Cast(self.expr(e.operand), e.target, e.implicit, loc=e.loc, type=e.type)

    def expr_addressof(self, e):
        return e

    def expr_deref(self, e):
        pointer = self.pointer_var(self.expr(e.pointer))
        return self.hoist(m.Deref(pointer, loc=e.loc, type=e.type), e.type, e.loc, expr_to_str(e))

    def expr_field(self, e):
        if e.arrow or isinstance(e.base, m.Deref):
            return self.hoist(self.lvalue(e), e.type, e.loc, expr_to_str(e))
        base = self.lvalue(e.base)
        if not isinstance(base, m.Var):
            raise UnsupportedConstruct('field of a non-variable struct', e.loc)
        return m.Field(base, e.name, False, loc=e.loc, type=e.type)

    def expr_index(self, e):
        return self.lvalue(e)

    def expr_call(self, e):
        args = [self.expr(a) for a in e.args]
        holder = None
        if not e.type.is_void:
            holder = self.temp(e.type, e.loc)
        self.emit(InstrKind.CALL, e.loc, lhs=holder, callee=e.name, args=args)
        return holder

    def expr_nondet(self, e):
        if e.type.is_void:
            return None
        return self.hoist(e, e.type, e.loc)

    def expr_sizeof(self, e):
        raise UnsupportedConstruct('sizeof survived type checking', e.loc)


def pointer_text(e):
    """Source text of a dereferencing lvalue, kept for check descriptions."""
    if isinstance(e, m.Deref) or (isinstance(e, m.Field) and (e.arrow or isinstance(e.base, m.Deref))):
        return expr_to_str(e)
    return ''


def resolve_labels(instructions):
    positions = {}
    for i, instr in enumerate(instructions):
        if instr.label is not None:
            positions[instr.label] = i
    for instr in instructions:
        if instr.kind == InstrKind.GOTO and isinstance(instr.target, Label):
            instr.target = positions[instr.target]
    return instructions


def lower_function(func, temporaries):
    return FunctionLowering(func, temporaries).run()


def lower(program):
    """
    Lowers a typed program. The entry body is spliced after a prologue that
    declares and initialises globals and havocs the entry parameters; the
    other defined functions are kept for inline_calls.
    """
    if not program.typed:
        raise ValueError('lower expects a type-checked program')
    entry = program.function(program.entry)
    if entry is None or not entry.is_defined:
        raise EntryNotFound(f'entry function `{program.entry}\' is not defined')
    variables = dict(program.variables)
    temps = Temporaries(variables)
    bodies = {f.name: lower_function(f, temps) for f in program.functions if f.is_defined}

    prologue = FunctionLowering(m.FunctionDef('$init', [], m.VOID, m.Block([])), temps)
    for decl in program.globals:
        var = m.Var(decl.name, decl.uid, loc=decl.loc, type=decl.decl_type)
        prologue.emit(InstrKind.DECL, decl.loc, lhs=var, havoc=False)
    for decl in program.globals:
        if decl.init is not None:
            var = m.Var(decl.name, decl.uid, loc=decl.loc, type=decl.decl_type)
            prologue.statement(m.Assign(var, decl.init, loc=decl.loc))
    for p in entry.params:
        var = m.Var(p.name, p.uid, loc=p.loc, type=p.type)
        prologue.emit(InstrKind.DECL, p.loc, lhs=var, havoc=True)
    instructions = resolve_labels(prologue.out)

    main = bodies[entry.name]
    holder = None
    if not entry.return_type.is_void:
        holder = temps.fresh(entry.return_type, entry.name, prefix=RETURN_PREFIX)
        instructions.append(GotoInstr(InstrKind.DECL, entry.loc, lhs=holder, havoc=False))
    end_loc = m.SourceLocation(entry.loc.file, entry.loc.line, entry.loc.column, entry.name)
    instructions.extend(splice(main, holder, {}, end_loc, offset=len(instructions)))
    instructions.append(GotoInstr(InstrKind.END, end_loc))

    goto = GotoProgram(instructions, variables, program.structs, program.entry, program.file,
                       functions={name: b for name, b in bodies.items() if name != entry.name})
    number_sites(goto)
    logger.info('lowered %s: %d instructions, %d callable functions', program.entry,
                len(goto.instructions), len(goto.functions))
    return goto

