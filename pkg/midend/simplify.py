"""Local constant propagation and expression simplification."""

import dataclasses
import logging

from frontend import models as m
from frontend.interpreter import arithmetic, compare, convert, fits
from midend.models import GotoInstr, InstrKind, OverflowCheck

logger = logging.getLogger(__name__)


def _const(value, t, loc):
    if t.is_bool:
        value = 1 if value else 0
    return m.Const(value, str(value), loc=loc, type=t)


def _is_const(e):
    return isinstance(e, m.Const)


def _truth(e):
    return _is_const(e) and e.value != 0


def _falsity(e):
    return _is_const(e) and e.value == 0


def fold(e, env=None):
    """Folded copy of `e`; `env` maps variable uids to known constants."""
    env = env or {}
    if isinstance(e, m.Var):
        known = env.get(e.uid)
        return _const(known, e.type, e.loc) if known is not None else e
    if isinstance(e, m.Const):
        if e.type.is_pointer:
            return e
        return _const(convert(e.value, e.type), e.type, e.loc)
    if isinstance(e, m.Unary):
        operand = fold(e.operand, env)
        if _is_const(operand):
            if e.op == '!':
                return _const(0 if operand.value else 1, e.type, e.loc)
            if e.op == '-':
                return _const(e.type.normalize(-operand.value), e.type, e.loc)
            return _const(operand.value, e.type, e.loc)
        if e.op == '!' and isinstance(operand, m.Unary) and operand.op == '!':
            return operand.operand
        return dataclasses.replace(e, operand=operand)
    if isinstance(e, m.Binary):
        return _fold_binary(e, fold(e.left, env), fold(e.right, env))
    if isinstance(e, m.Ternary):
        cond = fold(e.cond, env)
        then, other = fold(e.then, env), fold(e.other, env)
        if _is_const(cond):
            return then if cond.value else other
        return dataclasses.replace(e, cond=cond, then=then, other=other)
    if isinstance(e, m.Cast):
        operand = fold(e.operand, env)
        if _is_const(operand) and not e.type.is_pointer and not operand.type.is_pointer:
            return _const(convert(operand.value, e.type), e.type, e.loc)
        return dataclasses.replace(e, operand=operand)
    if isinstance(e, OverflowCheck):
        operands = [fold(o, env) for o in e.operands]
        if all(_is_const(o) for o in operands):
            t = e.operands[0].type
            if e.op == '-' and len(operands) == 1:
                exact = -operands[0].value
            else:
                exact = arithmetic(e.op, operands[0].value, operands[1].value)
            return _const(1 if fits(t, exact) else 0, m.BOOL, e.loc)
        return dataclasses.replace(e, operands=operands)
    if isinstance(e, m.Index):
        return dataclasses.replace(e, index=fold(e.index, env))
    return e


def _fold_binary(e, left, right):
    op = e.op
    if op == '&&':
        if _truth(left):
            return right
        if _truth(right):
            return left
        if _falsity(left) or _falsity(right):
            return _const(0, e.type, e.loc)
    elif op == '||':
        if _falsity(left):
            return right
        if _falsity(right):
            return left
        if _truth(left) or _truth(right):
            return _const(1, e.type, e.loc)
    elif _is_const(left) and _is_const(right) and not left.type.is_pointer:
        if op in ('+', '-', '*'):
            return _const(e.type.normalize(arithmetic(op, left.value, right.value)), e.type, e.loc)
        return _const(1 if compare(op, left.value, right.value) else 0, e.type, e.loc)
    return dataclasses.replace(e, left=left, right=right)


def _propagated(program, uid):
    info = program.variables.get(uid)
    return (info is not None and not info.address_taken
            and (info.type.is_integer or info.type.is_bool))


def simplify(program):
    """
    Folds constants through straight-line code, removes branches on
    constants and declarations overwritten by the next instruction. Facts
    are forgotten at every jump target.
    """
    targets = program.jump_targets()
    env = {}
    folded_jumps = 0
    for i, instr in enumerate(program.instructions):
        if i in targets:
            env = {}
        lhs = instr.lhs
        if isinstance(lhs, (m.Index, m.Field, m.Deref)):
            instr.lhs = _fold_lvalue(lhs, env)
        if instr.rhs is not None:
            instr.rhs = fold(instr.rhs, env)
        if instr.cond is not None:
            instr.cond = fold(instr.cond, env)
        if instr.kind == InstrKind.GOTO and instr.cond is not None and _is_const(instr.cond):
            folded_jumps += 1
            if instr.cond.value:
                instr.cond = None
            else:
                instr.kind, instr.cond, instr.target = InstrKind.SKIP, None, None
        if instr.kind == InstrKind.ASSUME and _truth(instr.cond):
            instr.kind, instr.cond = InstrKind.SKIP, None
        _transfer(program, instr, env)
    _drop_dead_decls(program)
    logger.debug('simplify: %d constant branches', folded_jumps)
    return program


def _fold_lvalue(lhs, env):
    if isinstance(lhs, m.Index):
        return dataclasses.replace(lhs, index=fold(lhs.index, env))
    return lhs


def _transfer(program, instr, env):
    if instr.kind == InstrKind.CALL:
        env.clear()
        return
    lhs = instr.lhs
    if not isinstance(lhs, m.Var):
        return
    uid = lhs.uid
    env.pop(uid, None)
    if not _propagated(program, uid):
        return
    if instr.kind == InstrKind.DECL and not instr.havoc:
        env[uid] = 0
    elif instr.kind == InstrKind.ASSIGN and _is_const(instr.rhs):
        env[uid] = instr.rhs.value


def _drop_dead_decls(program):
    instructions = program.instructions
    targets = program.jump_targets()
    for i, instr in enumerate(instructions[:-1]):
        following = instructions[i + 1]
        if (instr.kind == InstrKind.DECL and not instr.havoc and i + 1 not in targets
                and following.kind == InstrKind.ASSIGN and isinstance(following.lhs, m.Var)
                and following.lhs.uid == instr.lhs.uid and not _reads(following.rhs, instr.lhs.uid)):
            instructions[i] = GotoInstr(InstrKind.SKIP, instr.loc)


def _reads(e, uid):
    return any(isinstance(node, m.Var) and node.uid == uid for node in m.walk_expr(e))
