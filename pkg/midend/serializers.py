"""Text forms of GotoPrograms for --show-goto and --show-properties."""

from frontend.printer import declarator, expr_to_str
from midend.models import InstrKind


def instr_to_str(instr):
    kind = instr.kind
    if kind == InstrKind.DECL:
        text = f'DECL {declarator(instr.lhs.type, instr.lhs.name)}'
        return text if instr.havoc else text + ' := 0'
    if kind == InstrKind.ASSIGN:
        return f'ASSIGN {expr_to_str(instr.lhs)} := {expr_to_str(instr.rhs)}'
    if kind in (InstrKind.ASSUME, InstrKind.ASSERT):
        text = f'{kind.value} {expr_to_str(instr.cond)}'
        if instr.property_id:
            text += f'  // [{instr.property_id}] {instr.description}'
        return text
    if kind == InstrKind.GOTO:
        if instr.is_unconditional:
            return f'GOTO {instr.target}'
        return f'GOTO {instr.target} IF {expr_to_str(instr.cond)}'
    if kind == InstrKind.MALLOC:
        return f'MALLOC {expr_to_str(instr.lhs)} := new {instr.elem_type}  // site {instr.site}'
    if kind == InstrKind.FREE:
        return f'FREE {expr_to_str(instr.rhs)}'
    if kind == InstrKind.CALL:
        args = ', '.join(expr_to_str(a) for a in instr.args)
        lhs = f'{expr_to_str(instr.lhs)} := ' if instr.lhs is not None else ''
        return f'CALL {lhs}{instr.callee}({args})'
    if kind == InstrKind.RETURN:
        return 'RETURN' if instr.rhs is None else f'RETURN {expr_to_str(instr.rhs)}'
    return kind.value


def goto_to_str(program):
    """One numbered instruction per line, with its source line; loop heads are marked."""
    heads = {loop.head for loop in program.loops()}
    width = len(str(len(program.instructions)))
    lines = [f'// {program.entry} in {program.file}']
    for i, instr in enumerate(program.instructions):
        mark = '*' if i in heads else ' '
        lines.append(f'{i:>{width}}{mark} {instr_to_str(instr)}  (line {instr.loc.line})')
    return '\n'.join(lines) + '\n'


def property_line(prop, status=None):
    text = f'[{prop.id}] {prop.description}'
    return f'{text}: {status}' if status is not None else text


def properties_to_str(program):
    return ''.join(f'{property_line(p)} (line {p.loc.line})\n' for p in program.properties)
