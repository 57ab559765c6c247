"""
May-points-to and must-alias analyses over an inlined GotoProgram, the
materialisation count per allocation site, and the object universe.

Both analyses are forward dataflow problems over the instruction graph and
run to a fixpoint with a worklist. Their lattices are finite, so no widening
is needed. Heap objects are summarised per allocation site.
"""

import logging
from collections import deque

from frontend import models as m
from memmodel.models import (NULL, UNKNOWN_OBJECT, Cell, MemoryModel, MustAliasRel, ObjectId,
                             ObjectKind, ObjectUniverse, PointsToMap, field_cell, site_summary,
                             static_object, value_cells)
from midend.instrument import FREED_POINTER
from midend.models import InstrKind

logger = logging.getLogger(__name__)


def pointer_lvalue_cell(e):
    """Cell written by a direct (non-dereferencing) lvalue, else None."""
    if isinstance(e, m.Var):
        return e.uid
    if isinstance(e, m.Field) and not e.arrow and isinstance(e.base, m.Var):
        return field_cell(e.base.uid, e.name)
    return None


def dereferenced(e):
    """(pointer variable, field name or None) for `*p` and `p->f`."""
    if isinstance(e, m.Deref):
        return e.pointer, None
    if isinstance(e, m.Field) and e.arrow:
        return e.base, e.name
    return None, None


def target_cell(target, name=None):
    """Cell of `target` reached through a pointer, optionally at field `name`."""
    if target.kind in (ObjectKind.NULL, ObjectKind.UNKNOWN):
        return None
    prefix = target.prefix
    return field_cell(prefix, name) if name else prefix


class ForwardAnalysis:
    """Worklist fixpoint over the instruction graph; subclasses give transfer and join."""

    def __init__(self, program):
        self.program = program
        self.states = [None] * len(program.instructions)
        self.cfg = program.cfg()

    def boundary(self):
        raise NotImplementedError

    def transfer(self, index, state):
        raise NotImplementedError

    def join(self, old, new):
        raise NotImplementedError

    def analyze(self):
        self.states[0] = self.boundary()
        work = deque([0])
        queued = {0}
        rounds = 0
        while work:
            index = work.popleft()
            queued.discard(index)
            rounds += 1
            out = self.transfer(index, self.states[index])
            for succ in self.cfg.successors(index):
                old = self.states[succ]
                new = out if old is None else self.join(old, out)
                if new != old:
                    self.states[succ] = new
                    if succ not in queued:
                        queued.add(succ)
                        work.append(succ)
        logger.debug('%s: fixpoint after %d transfers', type(self).__name__, rounds)
        return self.states


class PointsTo(ForwardAnalysis):

    def boundary(self):
        return {}

    def join(self, old, new):
        merged = dict(old)
        for cell, targets in new.items():
            merged[cell] = merged.get(cell, frozenset()) | targets
        return merged

    def targets(self, e, state):
        """May-targets of a pointer-valued expression."""
        if isinstance(e, m.Var):
            return state.get(e.uid, frozenset())
        if isinstance(e, m.Const):
            return frozenset([NULL])
        if isinstance(e, m.Cast):
            if isinstance(e.operand, m.Const):
                return frozenset([NULL])
            return self.targets(e.operand, state)
        if isinstance(e, m.AddressOf):
            return frozenset([static_object(self.program.variables[e.operand.uid])])
        if isinstance(e, m.Ternary):
            return self.targets(e.then, state) | self.targets(e.other, state)
        if isinstance(e, m.Field) and not e.arrow:
            return state.get(field_cell(e.base.uid, e.name), frozenset())
        pointer, name = dereferenced(e)
        if pointer is not None:
            out = set()
            for target in self.targets(pointer, state):
                if target == NULL:
                    out.add(NULL)
                elif target == UNKNOWN_OBJECT:
                    out.add(UNKNOWN_OBJECT)
                else:
                    out |= state.get(target_cell(target, name), frozenset())
            return frozenset(out)
        return frozenset([UNKNOWN_OBJECT])

    def declare(self, state, var, havoc):
        value = frozenset([UNKNOWN_OBJECT if havoc else NULL])
        for cell in value_cells(var.uid, var.type):
            if cell.is_pointer:
                state[cell.name] = value

    def transfer(self, index, state):
        instr = self.program.instructions[index]
        kind = instr.kind
        if kind == InstrKind.DECL:
            state = dict(state)
            self.declare(state, instr.lhs, instr.havoc)
            return state
        if kind == InstrKind.MALLOC:
            state = dict(state)
            state[instr.lhs.uid] = frozenset([site_summary(self.program.sites[instr.site])])
            return state
        if kind != InstrKind.ASSIGN or not instr.lhs.type.is_pointer:
            return state
        value = self.targets(instr.rhs, state)
        state = dict(state)
        direct = pointer_lvalue_cell(instr.lhs)
        if direct is not None:
            state[direct] = value
            return state
        pointer, name = dereferenced(instr.lhs)
        if pointer is None:
            return state
        for target in self.targets(pointer, state):
            cell = target_cell(target, name)
            if cell is not None:
                state[cell] = state.get(cell, frozenset()) | value
        return state


class MustAlias(ForwardAnalysis):
    """
    Partitions of pointer cells; a cell in no class is alone. A summary cell
    only joins a class when its site allocates at most once per run, so the
    cell stands for a single concrete object.
    """

    def __init__(self, program, points_to):
        super().__init__(program)
        self.points_to = points_to
        loops = program.loops()
        self.single_sites = {ins.site for i, ins in enumerate(program.instructions)
                             if ins.kind == InstrKind.MALLOC
                             and not any(loop.contains(i) for loop in loops)}

    def boundary(self):
        return frozenset()

    def join(self, old, new):
        out = set()
        for a in old:
            for b in new:
                common = a & b
                if len(common) > 1:
                    out.add(frozenset(common))
        return frozenset(out)

    @staticmethod
    def detach(state, cell):
        out = set()
        for group in state:
            rest = group - {cell}
            if len(rest) > 1:
                out.add(rest)
        return out

    @staticmethod
    def attach(state, cell, source):
        for group in list(state):
            if source in group:
                state.discard(group)
                state.add(group | {cell})
                return state
        state.add(frozenset([cell, source]))
        return state

    def precise_cell(self, index, pointer, name):
        """The one cell `*pointer` (or `pointer->name`) can denote, else None."""
        targets = self.points_to.targets(index, pointer.uid) - {NULL}
        if len(targets) != 1:
            return None
        target = next(iter(targets))
        if target.kind == ObjectKind.STATIC or (target.is_summary and target.site in self.single_sites):
            return target_cell(target, name)
        return None

    def copied_cell(self, index, e):
        """The cell whose pointer `e` copies, when that is certain."""
        while isinstance(e, m.Cast) and not isinstance(e.operand, m.Const):
            e = e.operand
        direct = pointer_lvalue_cell(e)
        if direct is not None:
            return direct
        pointer, name = dereferenced(e)
        if pointer is None:
            return None
        return self.precise_cell(index, pointer, name)

    def written_cells(self, index, lhs):
        """Every cell the write may change and the one it surely changes, if any."""
        direct = pointer_lvalue_cell(lhs)
        if direct is not None:
            return [direct], direct
        pointer, name = dereferenced(lhs)
        if pointer is None:
            return [], None
        cells = [target_cell(t, name) for t in self.points_to.targets(index, pointer.uid)]
        return [c for c in cells if c is not None], self.precise_cell(index, pointer, name)

    def transfer(self, index, state):
        instr = self.program.instructions[index]
        if instr.kind in (InstrKind.DECL, InstrKind.MALLOC):
            cells = [c.name for c in value_cells(instr.lhs.uid, instr.lhs.type) if c.is_pointer]
            out = set(state)
            for cell in cells:
                out = self.detach(out, cell)
            return frozenset(out)
        if instr.kind != InstrKind.ASSIGN or not instr.lhs.type.is_pointer:
            return state
        written, exact = self.written_cells(index, instr.lhs)
        out = set(state)
        for cell in written:
            out = self.detach(out, cell)
        source = self.copied_cell(index, instr.rhs)
        if exact is not None and source is not None and source != exact:
            out = self.attach(out, exact, source)
        return frozenset(out)


def may_points_to(program):
    """Flow-sensitive may-points-to facts, before each instruction."""
    return PointsToMap(PointsTo(program).analyze())


def must_alias(program, points_to=None):
    points_to = points_to or may_points_to(program)
    return MustAliasRel(MustAlias(program, points_to).analyze())


def materialization_count(program, site, points_to, aliases):
    """
    Largest number of must-alias classes among the pointer cells that may
    target `site` at any one location. The freed-object tracker is not a
    program pointer and does not count.
    """
    summary = site_summary(program.sites[site])
    best = 1
    for index, state in enumerate(points_to.states):
        if state is None:
            continue
        cells = [c for c, targets in state.items() if summary in targets and c != FREED_POINTER]
        if len(cells) <= best:
            continue
        classes = {aliases.class_of(index, c) for c in cells}
        best = max(best, len(classes))
    return best


def used_variables(program):
    seen = {}
    for instr in program.instructions:
        for e in instr.expressions():
            for node in m.walk_expr(e):
                if isinstance(node, m.Var):
                    seen.setdefault(node.uid, program.variables[node.uid])
                elif isinstance(node, m.AddressOf) and isinstance(node.operand, m.Var):
                    program.variables[node.operand.uid].address_taken = True
    return [seen[uid] for uid in sorted(seen)]


def build_object_universe(program, points_to=None, aliases=None):
    """Objects with address tags 1..N (null is 0, unknown last) and every state cell."""
    points_to = points_to or may_points_to(program)
    aliases = aliases or must_alias(program, points_to)
    variables = used_variables(program)
    objects = [static_object(info) for info in variables if info.address_taken]
    cells = []
    for info in variables:
        cells.extend(value_cells(info.uid, info.type))
    counts = {}
    for site_id in sorted(program.sites):
        site = program.sites[site_id]
        n = materialization_count(program, site_id, points_to, aliases)
        counts[site_id] = n
        members = [ObjectId(ObjectKind.DYNAMIC, site=site_id, index=k, type=site.elem_type)
                   for k in range(1, n + 1)]
        members.append(ObjectId(ObjectKind.CONCRETE, site=site_id, type=site.elem_type))
        for obj in members:
            cells.extend(value_cells(obj.prefix, site.elem_type, obj))
            cells.append(Cell(f'{obj.prefix}.$alloc', m.BOOL, obj, flag='alloc'))
            if obj.kind == ObjectKind.CONCRETE:
                cells.append(Cell(f'{obj.prefix}.$freed', m.BOOL, obj, flag='freed'))
        objects.extend(members)
    objects.append(UNKNOWN_OBJECT)
    width = max(1, (len(objects) + 1).bit_length())
    logger.info('object universe: %d objects, %d cells, address width %d',
                len(objects), len(cells), width)
    return ObjectUniverse(objects, counts, cells, width)


def build_memory_model(program):
    points_to = may_points_to(program)
    aliases = must_alias(program, points_to)
    universe = build_object_universe(program, points_to, aliases)
    return MemoryModel(points_to, aliases, universe)
