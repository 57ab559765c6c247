"""Inlining of calls to defined functions."""

import dataclasses
import logging

import networkx as nx

from core.exceptions import RecursionDetected
from frontend import models as m
from midend.models import GotoInstr, InstrKind, Site

logger = logging.getLogger(__name__)


def rename_expr(e, renaming):
    """Deep copy of `e` with variable uids replaced through `renaming`."""
    if e is None:
        return None
    if isinstance(e, m.Var):
        uid = renaming.get(e.uid, e.uid)
        return m.Var(e.name, uid, loc=e.loc, type=e.type)
    changes = {}
    for f in dataclasses.fields(e):
        value = getattr(e, f.name)
        if isinstance(value, m.Expr):
            changes[f.name] = rename_expr(value, renaming)
        elif isinstance(value, list) and value and isinstance(value[0], m.Expr):
            changes[f.name] = [rename_expr(v, renaming) for v in value]
    return dataclasses.replace(e, **changes)


def copy_instr(instr, renaming):
    return dataclasses.replace(
        instr,
        lhs=rename_expr(instr.lhs, renaming),
        rhs=rename_expr(instr.rhs, renaming),
        cond=rename_expr(instr.cond, renaming),
        args=[rename_expr(a, renaming) for a in instr.args],
        label=None,
    )


def splice(body, holder, renaming, loc, offset=0):
    """
    Copies a lowered function body for insertion at index `offset`. Variables
    are renamed; RETURN becomes an assignment to `holder` followed by a jump
    to a closing SKIP.
    """
    copied = [copy_instr(instr, renaming) for instr in body.instructions]
    out = []
    mapping = {}
    returns = []
    for i, instr in enumerate(copied):
        mapping[i] = len(out)
        if instr.kind == InstrKind.RETURN:
            if instr.rhs is not None and holder is not None:
                out.append(GotoInstr(InstrKind.ASSIGN, instr.loc, lhs=holder, rhs=instr.rhs))
            ret = GotoInstr(InstrKind.GOTO, instr.loc)
            returns.append(ret)
            out.append(ret)
        else:
            out.append(instr)
    mapping[len(copied)] = len(out)
    out.append(GotoInstr(InstrKind.SKIP, loc))
    for instr in out:
        if instr.kind == InstrKind.GOTO:
            if instr in returns:
                instr.target = offset + mapping[len(copied)]
            else:
                instr.target = offset + mapping[instr.target]
    return out


def call_graph(functions):
    graph = nx.DiGraph()
    for name, body in functions.items():
        graph.add_node(name)
        graph.add_edges_from((name, i.callee) for i in body.instructions if i.kind == InstrKind.CALL)
    return graph


def check_acyclic(graph, roots):
    """Raises RecursionDetected naming the first cycle found from `roots`."""
    for root in roots:
        try:
            edges = nx.find_cycle(graph, source=root)
        except nx.NetworkXNoCycle:
            continue
        cycle = [caller for caller, _ in edges] + [edges[0][0]]
        raise RecursionDetected(f'recursive call chain {" -> ".join(cycle)}')


def number_sites(program):
    """Gives every MALLOC a unique site id, in instruction order."""
    program.sites = {}
    for instr in program.instructions:
        if instr.kind == InstrKind.MALLOC:
            site = len(program.sites) + 1
            instr.site = site
            program.sites[site] = Site(site, instr.elem_type, instr.loc)
    return program


def _rename_locals(program, callee, suffix):
    renaming = {}
    for uid, info in list(program.variables.items()):
        if info.function == callee and not info.is_global and '@' not in uid:
            new = f'{uid}@{suffix}'
            renaming[uid] = new
            program.variables[new] = dataclasses.replace(info, uid=new)
    return renaming


def inline_calls(program):
    """
    Replaces every CALL by a renamed copy of the callee. Inlined parameters
    and locals carry the suffix `@n` of the n-th inlined call.
    """
    roots = sorted({i.callee for i in program.instructions if i.kind == InstrKind.CALL})
    graph = call_graph(program.functions)
    graph.add_node(program.entry)
    graph.add_edges_from((program.entry, callee) for callee in roots)
    check_acyclic(graph, [program.entry])
    counter = sum(1 for uid in program.variables if '@' in uid)
    inlined = 0
    while True:
        index = next((i for i, ins in enumerate(program.instructions)
                      if ins.kind == InstrKind.CALL), None)
        if index is None:
            break
        call = program.instructions[index]
        body = program.functions[call.callee]
        counter += 1
        renaming = _rename_locals(program, call.callee, counter)
        code = []
        for uid, arg in zip(body.params, call.args):
            info = program.variables[renaming[uid]]
            param = m.Var(info.name, info.uid, loc=call.loc, type=info.type)
            code.append(GotoInstr(InstrKind.DECL, call.loc, lhs=param, havoc=False))
            code.append(GotoInstr(InstrKind.ASSIGN, call.loc, lhs=param, rhs=arg))
        code.extend(splice(body, call.lhs, renaming, call.loc, offset=index + len(code)))
        shift = len(code) - 1
        rest = program.instructions[index + 1:]
        for instr in program.instructions[:index] + rest:
            if instr.kind == InstrKind.GOTO and instr.target > index:
                instr.target += shift
        program.instructions = program.instructions[:index] + code + rest
        inlined += 1
    if inlined:
        number_sites(program)
        logger.info('inlined %d calls', inlined)
    return program
