"""
Property instrumentation of a lowered, inlined GotoProgram.

Each pass inserts ASSERT instructions ahead of the instruction whose
evaluation could go wrong. Checks on operands of `&&`, `||` and `?:` are
made conditional on the operand actually being evaluated. Property ids are
handed out by number_properties once every pass has run.
"""

import logging
from collections import defaultdict

from frontend import models as m
from frontend.printer import expr_to_str
from midend.models import (FreeChoice, GotoInstr, InstrKind, LeakCheck, OverflowCheck,
                           PropertyCategory, implication, rebuild, refresh_properties,
                           walk_with_context)

logger = logging.getLogger(__name__)

FREED_POINTER = '__fr'
VOID_POINTER = m.PointerType(m.VOID)


def _assertion(cond, loc, category, description):
    return GotoInstr(InstrKind.ASSERT, loc, cond=cond, category=category, description=description)


def _is_signed(t):
    return isinstance(t, m.IntType) and t.signed


def _null(t, loc):
    return m.Cast(m.Const(0, '0', loc=loc, type=m.INT), t, loc=loc, type=t)


def _binary(op, left, right, loc):
    return m.Binary(op, left, right, loc=loc, type=m.BOOL)


def _checked_nodes(instr):
    if instr.kind == InstrKind.ASSERT and instr.category is not None:
        return
    for e in instr.expressions():
        yield from walk_with_context(e, post=True)


# Overflow

def instrument_overflow(program):
    """Asserts before each signed +, -, * and unary - that the exact result fits."""
    before = defaultdict(list)
    for i, instr in enumerate(program.instructions):
        for node, ctx in _checked_nodes(instr):
            if isinstance(node, m.Binary) and node.op in ('+', '-', '*') and _is_signed(node.type):
                check = OverflowCheck(node.op, [node.left, node.right], loc=node.loc, type=m.BOOL)
            elif isinstance(node, m.Unary) and node.op == '-' and _is_signed(node.type):
                check = OverflowCheck('-', [node.operand], loc=node.loc, type=m.BOOL)
            else:
                continue
            description = f'arithmetic overflow on signed {node.op} in {expr_to_str(node)}'
            before[i].append(_assertion(implication(ctx, check), instr.loc,
                                        PropertyCategory.OVERFLOW, description))
    logger.debug('overflow checks: %d', sum(len(v) for v in before.values()))
    return rebuild(program, before=before)


# Array bounds

def instrument_bounds(program):
    before = defaultdict(list)
    for i, instr in enumerate(program.instructions):
        for node, ctx in _checked_nodes(instr):
            if not (isinstance(node, m.Index) and node.base.type.is_array):
                continue
            index = node.index
            name = node.base.name if isinstance(node.base, m.Var) else expr_to_str(node.base)
            text = expr_to_str(node)
            lower = _binary('>=', index, m.Const(0, '0', loc=node.loc, type=index.type), node.loc)
            length = node.base.type.length
            upper = _binary('<', index, m.Const(length, str(length), loc=node.loc, type=index.type),
                            node.loc)
            before[i].append(_assertion(implication(ctx, lower), instr.loc, PropertyCategory.BOUNDS,
                                        f"array `{name}' lower bound in {text}"))
            before[i].append(_assertion(implication(ctx, upper), instr.loc, PropertyCategory.BOUNDS,
                                        f"array `{name}' upper bound in {text}"))
    return rebuild(program, before=before)


# Pointers

def freed_pointer(program):
    """The tracking variable for freed objects, declared on first use."""
    info = program.variables.get(FREED_POINTER)
    if info is None:
        info = m.VarInfo(FREED_POINTER, FREED_POINTER, VOID_POINTER, is_global=True)
        program.variables[FREED_POINTER] = info
    return m.Var(FREED_POINTER, FREED_POINTER, type=VOID_POINTER)


def _not_freed(pointer, fr, loc):
    # a null pointer is reported by the null check only
    return _binary('||', _binary('==', pointer, _null(pointer.type, loc), loc),
                   _binary('!=', m.Cast(pointer, VOID_POINTER, loc=loc, type=VOID_POINTER), fr, loc),
                   loc)


def instrument_free_tracking(program, leak_check=False):
    """
    Declares the freed-object tracker, initialised to null, and follows every
    free(p) with `__fr = choice ? p : __fr`. With `leak_check` a leak
    assertion per allocation site is placed before END.
    """
    fr = freed_pointer(program)
    before = defaultdict(list)
    after = defaultdict(list)
    if not any(ins.kind == InstrKind.DECL and ins.lhs is not None and ins.lhs.uid == FREED_POINTER
               for ins in program.instructions):
        before[0].append(GotoInstr(InstrKind.DECL, program.instructions[0].loc, lhs=fr, havoc=False))
    frees = 0
    for i, instr in enumerate(program.instructions):
        if instr.kind != InstrKind.FREE:
            continue
        frees += 1
        pointer = m.Cast(instr.rhs, VOID_POINTER, loc=instr.loc, type=VOID_POINTER)
        choice = FreeChoice(frees, loc=instr.loc, type=m.BOOL)
        update = m.Ternary(choice, pointer, fr, loc=instr.loc, type=VOID_POINTER)
        after[i].append(GotoInstr(InstrKind.ASSIGN, instr.loc, lhs=fr, rhs=update))
    if leak_check:
        end = program.end
        for site in sorted(program.sites.values(), key=lambda s: s.id):
            description = f'dynamically allocated memory never freed (allocated at line {site.loc.line})'
            check = LeakCheck(site.id, loc=program.instructions[end].loc, type=m.BOOL)
            before[end].append(_assertion(check, program.instructions[end].loc,
                                          PropertyCategory.MEMORY_LEAK, description))
        program.leak_checked = True
    logger.debug('free tracking: %d frees, %d sites', frees, len(program.sites))
    return rebuild(program, before=before, after=after)


def _dereferences(instr):
    for node, ctx in _checked_nodes(instr):
        if isinstance(node, m.Deref):
            yield node.pointer, ctx
        elif isinstance(node, m.Field) and node.arrow:
            yield node.base, ctx


def instrument_pointer_checks(program):
    """Null and use-after-free checks on every dereference; null and double-free checks on free."""
    fr = freed_pointer(program)
    before = defaultdict(list)
    for i, instr in enumerate(program.instructions):
        loc = instr.loc
        if instr.kind == InstrKind.FREE:
            p = instr.rhs
            text = instr.description or expr_to_str(p)
            before[i].append(_assertion(_binary('!=', p, _null(p.type, loc), loc), loc,
                                        PropertyCategory.NULL_DEREF,
                                        f'free argument must not be NULL in free({text})'))
            before[i].append(_assertion(_not_freed(p, fr, loc), loc, PropertyCategory.DOUBLE_FREE,
                                        f'double free in free({text})'))
            continue
        for p, ctx in _dereferences(instr):
            if p.uid == FREED_POINTER:
                continue
            text = instr.description or f'*{expr_to_str(p)}'
            nonnull = _binary('!=', p, _null(p.type, loc), loc)
            before[i].append(_assertion(implication(ctx, nonnull), loc, PropertyCategory.NULL_DEREF,
                                        f'dereference failure: pointer NULL in {text}'))
            before[i].append(_assertion(implication(ctx, _not_freed(p, fr, loc)), loc,
                                        PropertyCategory.FREED_DEREF,
                                        f'dereference failure: deallocated dynamic object in {text}'))
    return rebuild(program, before=before)


# Numbering

def number_properties(program):
    """Ids `<function>.<n>` in instruction order; unlabelled asserts are user assertions."""
    counters = defaultdict(int)
    for instr in program.instructions:
        if instr.kind != InstrKind.ASSERT:
            continue
        function = instr.loc.function or program.entry
        counters[function] += 1
        instr.property_id = f'{function}.{counters[function]}'
        if instr.category is None:
            instr.category = PropertyCategory.USER
    program.properties = []
    refresh_properties(program)
    logger.info('%d properties', len(program.properties))
    return program
