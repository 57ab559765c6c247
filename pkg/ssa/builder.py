"""
SSA encoding of an inlined, instrumented GotoProgram.

Instructions are encoded in index order with a symbolic state (cell name ->
term) and a guard per location. Every loop instance is cut at its back edge:
at the head each cell the loop writes becomes `ite(ls, lb, before)` with
free `ls` and `lb`, and the body is then laid out once per unwinding copy,
copy c+1 starting from the state copy c reaches at the latch. The last
copy's back edge goes nowhere.

Joins fed by a loop exit are kept as MergeRecords: a deeper unwinding adds
exit edges to them and their definitions are issued again.
"""

import logging
from dataclasses import dataclass
from collections import defaultdict

from core.exceptions import MalformedSsa
from frontend import models as m
from frontend.printer import expr_to_str
from memmodel.analysis import build_memory_model, dereferenced, target_cell
from memmodel.models import NULL, UNKNOWN_OBJECT, field_cell, static_object, value_cells
from midend.models import FreeChoice, InstrKind, LeakCheck, OverflowCheck
from solver import models as bv
from ssa.check import check_well_formed
from ssa.models import (AssertionInstance, Edge, InputRecord, LoopCopy, LoopInstance, MergeRecord,
                        SsaForm, SsaSymbol, SymbolKind, Visit, copy_suffix)

logger = logging.getLogger(__name__)

INDEX_WIDTH = 32


def element_width(t):
    return 1 if t.is_bool else t.width


def as_bool(term):
    if term.sort.is_bool:
        return term
    return bv.ne(term, bv.const(0, term.width))


@dataclass(frozen=True)
class Frame:
    """Where a block is being encoded: the unwinding copy of every enclosing loop."""
    ctx: tuple = ()
    prefix: tuple = ()
    instance: LoopInstance = None
    copy: int = 0
    head: int = None

    @property
    def suffix(self):
        return copy_suffix(self.ctx)

    def key(self, index):
        return self.prefix + ((index,),)


@dataclass
class Point:
    """The instruction visit an expression is evaluated in."""
    index: int
    frame: Frame
    guard: bv.Term
    visit: Visit
    nondets: int = 0


class SsaBuilder:

    def __init__(self, program, memory, depth=1):
        self.program = program
        self.memory = memory
        self.universe = memory.universe
        self.width = self.universe.address_width
        self.loops = program.loops()
        self.loop_at = {loop.head: loop for loop in self.loops}
        self.form = SsaForm(program, memory, depth, builder=self)
        self.null = bv.addr(0, self.width)
        self._modified = {}
        self._derefs = {}
        self._cells = [c.name for c in self.universe.cells]
        self._order = {name: i for i, name in enumerate(self._cells)}

    # Sorts and constants

    def sort_of(self, t):
        if t.is_pointer:
            return bv.bv_sort(self.width)
        if t.is_bool:
            return bv.BOOL
        if t.is_array:
            return bv.array_sort(t.length, element_width(t.element))
        if t.is_integer:
            return bv.bv_sort(t.width)
        raise ValueError(f'no sort for type {t}')

    def zero(self, t):
        if t.is_pointer:
            return self.null
        if t.is_bool:
            return bv.false()
        if t.is_array:
            return bv.array_const((0,) * t.length, element_width(t.element))
        return bv.const(0, t.width)

    def address(self, obj):
        return bv.addr(self.universe.tag(obj), self.width)

    def cell_type(self, name):
        return self.universe.cell(name).type

    def initial_state(self):
        return {c.name: self.zero(c.type) for c in self.universe.cells}

    # Symbols

    def register(self, term, kind, location, cell=''):
        name = term.payload
        if name in self.form.symbols:
            raise MalformedSsa(f'SSA symbol {name} declared twice')
        self.form.symbols[name] = SsaSymbol(term, kind, location, cell)
        return term

    def free(self, name, sort, kind, location, cell=''):
        return self.register(bv.symbol(name, sort), kind, location, cell)

    def define(self, name, value, kind, location, cell=''):
        term = self.register(bv.symbol(name, value.sort), kind, location, cell)
        self.form.definitions[name] = value
        self.form.constraints.append(bv.eq(term, value))
        return term

    def constrain(self, term):
        if not term.is_true:
            self.form.constraints.append(term)

    # Program structure

    def depth_of(self, index):
        return sum(1 for loop in self.loops if loop.contains(index))

    def exited(self, source, target):
        if source is None:
            return []
        return [loop for loop in self.loops if loop.contains(source) and not loop.contains(target)]

    def targets(self, index, uid):
        """Materialised objects a pointer cell may hold before instruction `index`."""
        out = set()
        for target in self.memory.points_to.targets(index, uid):
            for obj in self.universe.expand(target):
                if obj in self.universe.tags:
                    out.add(obj)
        return sorted(out, key=self.universe.tag)

    def object_cells(self, index, pointer, name, sort):
        """(object, cell) pairs `*pointer` or `pointer->name` may denote."""
        out = []
        for obj in self.targets(index, pointer.uid):
            cell = target_cell(obj, name)
            if cell is None or not self.universe.has_cell(cell):
                continue
            if self.sort_of(self.cell_type(cell)) != sort:
                continue
            out.append((obj, cell))
        return out

    def written(self, index):
        """Cells instruction `index` may write."""
        instr = self.program.instructions[index]
        kind = instr.kind
        out = []
        if kind == InstrKind.DECL:
            out = [c.name for c in value_cells(instr.lhs.uid, instr.lhs.type)]
        elif kind == InstrKind.ASSIGN:
            lhs = instr.lhs
            pointer, name = dereferenced(lhs)
            if pointer is not None:
                sort = self.sort_of(lhs.type)
                out = [cell for _, cell in self.object_cells(index, pointer, name, sort)]
            elif isinstance(lhs, m.Var):
                out = [c.name for c in value_cells(lhs.uid, lhs.type)]
            elif isinstance(lhs, m.Field):
                out = [field_cell(lhs.base.uid, lhs.name)]
            elif isinstance(lhs, m.Index):
                out = [lhs.base.uid]
        elif kind == InstrKind.MALLOC:
            out = [instr.lhs.uid]
            for obj in self.universe.heap_objects(instr.site):
                out.extend(c.name for c in self.universe.cells_of(obj))
                out.append(self.universe.flag_cell(obj, 'alloc'))
            out.append(self.universe.flag_cell(self.universe.concrete_object(instr.site), 'freed'))
        elif kind == InstrKind.FREE:
            for obj in self.targets(index, instr.rhs.uid):
                if obj.is_heap:
                    co = self.universe.concrete_object(obj.site)
                    out.append(self.universe.flag_cell(co, 'freed'))
        return [c for c in out if self.universe.has_cell(c)]

    def modified(self, loop):
        """Cells some instruction of `loop` may write, in universe order."""
        key = (loop.head, loop.latch)
        if key not in self._modified:
            cells = set()
            for index in range(loop.head, loop.latch + 1):
                cells.update(self.written(index))
            self._modified[key] = sorted(cells, key=self._order.__getitem__)
        return self._modified[key]

    def read(self, index):
        """Variable and field cells the expressions of instruction `index` read."""
        out = []
        for e in self.program.instructions[index].expressions():
            for node in m.walk_expr(e):
                if isinstance(node, m.Var):
                    out.extend(c.name for c in value_cells(node.uid, node.type))
                elif isinstance(node, m.Field) and not node.arrow and isinstance(node.base, m.Var):
                    out.append(field_cell(node.base.uid, node.name))
        return [c for c in out if self.universe.has_cell(c)]

    def live(self, loop):
        """
        Cells live across the back edge of `loop`: the ones it writes and the
        ones it only reads. A read-only cell keeps its pre-loop value at the
        head, so its loop-back value is the pre-loop term itself.
        """
        cells = set(self.modified(loop))
        for index in range(loop.head, loop.latch + 1):
            cells.update(self.read(index))
        return sorted(cells, key=self._order.__getitem__)

    # Blocks and joins

    def build(self):
        entry = Edge(0, bv.true(), self.initial_state())
        self.form.entry_guard = bv.true()
        self.encode_block(0, self.program.end, entry, Frame())
        logger.info('SSA: %d constraints, %d symbols, %d loop instances, depth %d',
                    len(self.form.constraints), len(self.form.symbols), len(self.form.instances),
                    self.form.depth)
        return self.form

    def encode_block(self, lo, hi, entry, frame):
        """Encodes [lo, hi]; returns the edges leaving it and the back edge to `frame.head`."""
        pending = defaultdict(list)
        pending[lo].append(entry)
        outgoing = []
        back = None
        last_state = entry.state
        index = lo
        while index <= hi:
            guard, state = self.join(index, pending.pop(index, []), frame, last_state)
            last_state = state
            loop = self.loop_at.get(index)
            if loop is not None and index != frame.head:
                for edge in self.encode_loop(loop, guard, state, frame):
                    self.route(edge, pending, outgoing, hi)
                index = loop.latch + 1
                continue
            for edge in self.encode_instruction(index, guard, dict(state), frame):
                if edge.target == frame.head and index == hi:
                    back = edge
                elif edge.target <= index:
                    raise ValueError(f'unstructured back edge {index} -> {edge.target}')
                else:
                    self.route(edge, pending, outgoing, hi)
            index += 1
        return outgoing, back

    @staticmethod
    def route(edge, pending, outgoing, hi):
        if edge.target <= hi:
            pending[edge.target].append(edge)
        else:
            outgoing.append(edge)

    def join(self, index, edges, frame, fallback):
        if not edges:
            return bv.false(), fallback
        if any(self.exited(e.source, index) for e in edges):
            return self.merge(index, edges, frame)
        live = [e for e in edges if not e.guard.is_false]
        if not live:
            return bv.false(), edges[0].state
        if len(live) == 1:
            return live[0].guard, live[0].state
        sfx = frame.suffix
        guard = self.define(f'g#m{index}{sfx}', bv.any_of(e.guard for e in live),
                            SymbolKind.GUARD, index)
        state = dict(live[-1].state)
        for cell in self._cells:
            values = [e.state[cell] for e in live]
            if all(v is values[0] for v in values):
                continue
            value = values[-1]
            for edge in reversed(live[:-1]):
                value = bv.ite(edge.guard, edge.state[cell], value)
            state[cell] = self.define(f'{cell}#m{index}{sfx}', value, SymbolKind.PHI, index, cell)
        return guard, state

    def merge(self, index, edges, frame):
        cells = set()
        for edge in edges:
            for loop in self.exited(edge.source, index):
                cells.update(self.modified(loop))
        for cell in self._cells:
            if any(e.state[cell] is not edges[0].state[cell] for e in edges):
                cells.add(cell)
        sfx = frame.suffix
        guard = self.register(bv.symbol(f'g#m{index}{sfx}', bv.BOOL), SymbolKind.GUARD, index)
        symbols = {}
        for cell in sorted(cells, key=self._order.__getitem__):
            sort = edges[0].state[cell].sort
            symbols[cell] = self.register(bv.symbol(f'{cell}#m{index}{sfx}', sort),
                                          SymbolKind.PHI, index, cell)
        record = MergeRecord(index, frame.ctx, guard, symbols, list(edges))
        self.form.merges[record.key] = record
        state = dict(edges[-1].state)
        state.update(symbols)
        return guard, state

    # Loops

    def encode_loop(self, loop, pre_guard, pre_state, frame):
        """A new loop instance with `depth` copies; returns its exit edges."""
        head = loop.head
        sfx = frame.suffix
        inst = LoopInstance(loop, frame.ctx, frame.prefix, frame.instance, frame.copy,
                            pre_guard=pre_guard, pre_state=pre_state, modified=self.modified(loop),
                            live=self.live(loop))
        if frame.instance is not None:
            frame.instance.copies[frame.copy - 1].children.append(inst)
        inst.loop_select = self.free(f'ls#{head}{sfx}', bv.BOOL, SymbolKind.LOOP_SELECT, head)
        state = dict(pre_state)
        for cell in inst.modified:
            lb = self.free(f'{cell}#lb{head}{sfx}', pre_state[cell].sort, SymbolKind.LOOPBACK, head, cell)
            phi = self.define(f'{cell}#phi{head}{sfx}', bv.ite(inst.loop_select, lb, pre_state[cell]),
                              SymbolKind.PHI, head, cell)
            inst.loopback[cell] = lb
            inst.phi[cell] = phi
            state[cell] = phi
        self.form.instances.append(inst)
        exits = []
        guard = pre_guard
        for number in range(1, self.form.depth + 1):
            out, guard, state = self.encode_copy(inst, number, guard, state)
            exits.extend(out)
        return exits

    def encode_copy(self, inst, number, guard, state):
        frame = Frame(inst.ctx + (number,), inst.key_prefix + ((inst.head, number),), inst, number,
                      inst.head)
        copy = LoopCopy(number, guard, state)
        inst.copies.append(copy)
        out, back = self.encode_block(inst.head, inst.loop.latch, Edge(inst.head, guard, state), frame)
        if back is None:
            copy.latch_guard, copy.latch_state = bv.false(), state
        else:
            copy.latch_guard, copy.latch_state = back.guard, back.state
        return out, copy.latch_guard, copy.latch_state

    def extend(self):
        """One more copy for every existing loop instance; returns the merges that grew."""
        self.form.depth += 1
        grown = []
        for inst in list(self.form.instances):
            last = inst.last
            out, _, _ = self.encode_copy(inst, self.form.depth, last.latch_guard, last.latch_state)
            for edge in out:
                key = (edge.target, inst.ctx[:self.depth_of(edge.target)])
                record = self.form.merges.get(key)
                if record is None:
                    raise MalformedSsa(f'loop exit to {edge.target} has no merge')
                record.add_edge(edge)
                if record not in grown:
                    grown.append(record)
        logger.info('SSA unwound to depth %d: %d constraints, %d loop instances',
                    self.form.depth, len(self.form.constraints), len(self.form.instances))
        return grown

    # Instructions

    def encode_instruction(self, index, guard, state, frame):
        instr = self.program.instructions[index]
        kind = instr.kind
        visit = Visit(frame.key(index), index, guard)
        self.form.visits[visit.key] = visit
        at = Point(index, frame, guard, visit)
        follow = [Edge(index + 1, guard, state, index)]
        if kind == InstrKind.DECL:
            self.encode_decl(instr, state, at)
        elif kind == InstrKind.ASSIGN:
            self.encode_assign(instr, state, at)
        elif kind == InstrKind.ASSUME:
            cond = as_bool(self.value(instr.cond, state, at))
            follow = [Edge(index + 1, bv.and_(guard, cond), state, index)]
        elif kind == InstrKind.ASSERT:
            cond = as_bool(self.value(instr.cond, state, at))
            self.form.assertions.append(AssertionInstance(
                instr.property_id, guard, cond, index, visit.key, frame.instance, frame.copy))
        elif kind == InstrKind.GOTO:
            if instr.cond is None:
                follow = [Edge(instr.target, guard, state, index)]
            elif instr.target != index + 1:
                cond = as_bool(self.value(instr.cond, state, at))
                follow = [Edge(index + 1, bv.and_(guard, bv.not_(cond)), state, index),
                          Edge(instr.target, bv.and_(guard, cond), state, index)]
        elif kind == InstrKind.MALLOC:
            self.encode_malloc(instr, state, at)
        elif kind == InstrKind.FREE:
            self.encode_free(instr, state, at)
        elif kind == InstrKind.END:
            if not frame.ctx:
                self.form.final_guard, self.form.final_state = guard, state
            follow = []
        elif kind in (InstrKind.CALL, InstrKind.RETURN):
            raise ValueError(f'{kind.value} left in the program at {index}; inline calls first')
        return follow

    def nondet(self, t, at):
        """A fresh environment value of scalar or array type `t`."""
        name = f'nondet#{at.index}.{at.nondets}{at.frame.suffix}'
        at.nondets += 1
        term = self.free(name, self.sort_of(t), SymbolKind.NONDET, at.index)
        if t.is_array:
            items = [(bv.select(term, bv.const(i, INDEX_WIDTH)), t.element) for i in range(t.length)]
        else:
            items = [(term, t)]
        record = InputRecord(at.visit.key, at.index, items)
        at.visit.inputs.append(record)
        self.form.inputs.append(record)
        return term

    def havoc(self, t, at):
        if t.is_pointer:
            return self.address(UNKNOWN_OBJECT)
        return self.nondet(t, at)

    def encode_decl(self, instr, state, at):
        var = instr.lhs
        for cell in value_cells(var.uid, var.type):
            if not self.universe.has_cell(cell.name):
                continue
            value = self.havoc(cell.type, at) if instr.havoc else self.zero(cell.type)
            state[cell.name] = value
            if instr.havoc and not cell.type.is_pointer:
                label = cell.name.replace(var.uid, var.name, 1)
                at.visit.assigned.append((label, value, cell.type))

    def encode_assign(self, instr, state, at):
        lhs, rhs = instr.lhs, instr.rhs
        if isinstance(rhs, m.Nondet) and isinstance(lhs.type, m.StructType):
            for cell in value_cells(lhs.uid, lhs.type):
                state[cell.name] = self.havoc(cell.type, at)
            return
        value = self.value(rhs, state, at)
        self.write(lhs, value, state, at)

    def write(self, lhs, value, state, at):
        index, sfx = at.index, at.frame.suffix
        label = expr_to_str(lhs)
        pointer, name = dereferenced(lhs)
        if pointer is not None:
            stored = self.deref_write(pointer, name, value, state, at)
            at.visit.assigned.append((label, stored, lhs.type))
            return
        if isinstance(lhs, m.Index):
            array = lhs.base.uid
            element = bv.bool_to_bv(value, 1) if value.sort.is_bool else value
            offset = self.value(lhs.index, state, at)
            state[array] = self.define(f'{array}#{index}{sfx}', bv.store(state[array], offset, element),
                                       SymbolKind.PLAIN, index, array)
            at.visit.assigned.append((label, value, lhs.type))
            return
        cell = lhs.uid if isinstance(lhs, m.Var) else field_cell(lhs.base.uid, lhs.name)
        state[cell] = self.define(f'{cell}#{index}{sfx}', value, SymbolKind.PLAIN, index, cell)
        at.visit.assigned.append((label, state[cell], lhs.type))

    # Memory

    def deref_read(self, e, state, at):
        """Value of `*p` or `p->f`: one deref symbol tied to every object p may hold."""
        pointer, name = dereferenced(e)
        index, sfx = at.index, at.frame.suffix
        sort = self.sort_of(e.type)
        p = state[pointer.uid]
        cells = self.object_cells(index, pointer, name, sort)
        key = (p, name, sort, tuple(state[c] for _, c in cells))
        cached = self._derefs.get(key)
        if cached is not None:
            return cached
        d = self.free(f'deref#{index}{sfx}', sort, SymbolKind.DEREF, index)
        for obj, cell in cells:
            hit = bv.eq(p, self.address(obj))
            self.constrain(bv.implies(hit, bv.eq(d, state[cell])))
            if obj.is_heap:
                allocated = state[self.universe.flag_cell(obj, 'alloc')]
                self.constrain(bv.implies(bv.and_(at.guard, hit), allocated))
        targets = self.targets(index, pointer.uid)
        if NULL in targets:
            self.constrain(bv.implies(bv.eq(p, self.null), bv.eq(d, self.zero(e.type))))
        if UNKNOWN_OBJECT in targets:
            unknown = bv.eq(p, self.address(UNKNOWN_OBJECT))
            if e.type.is_pointer:
                value = self.address(UNKNOWN_OBJECT)
            else:
                value = self.nondet(e.type, at)
                at.visit.inputs[-1].condition = unknown
            self.constrain(bv.implies(unknown, bv.eq(d, value)))
        self._derefs[key] = d
        return d

    def deref_write(self, pointer, name, value, state, at):
        index, sfx = at.index, at.frame.suffix
        p = state[pointer.uid]
        d = self.define(f'deref#{index}{sfx}', value, SymbolKind.DEREF, index)
        cells = self.object_cells(index, pointer, name, value.sort)
        for obj, cell in cells:
            updated = bv.ite(bv.eq(p, self.address(obj)), d, state[cell])
            state[cell] = self.define(f'{cell}#{index}{sfx}', updated, SymbolKind.PLAIN, index, cell)
        self._derefs[(p, name, value.sort, tuple(state[c] for _, c in cells))] = d
        return d

    def encode_malloc(self, instr, state, at):
        """
        The new pointer is the site's concrete object when its selector is
        set and no pointer holds it yet, else one of the abstract objects.
        """
        index, sfx, site = at.index, at.frame.suffix, instr.site
        universe = self.universe
        objects = universe.dynamic_objects(site)
        co = universe.concrete_object(site)
        select_co = self.free(f'os{site}.co#{index}{sfx}', bv.BOOL, SymbolKind.OBJECT_SELECT, index)
        chosen = self.address(objects[-1])
        for k in range(len(objects) - 1, 0, -1):
            select = self.free(f'os{site}.{k}#{index}{sfx}', bv.BOOL, SymbolKind.OBJECT_SELECT, index)
            chosen = bv.ite(select, self.address(objects[k - 1]), chosen)
        free_co = bv.all_of(bv.ne(state[c.name], self.address(co)) for c in universe.pointer_cells)
        chosen = bv.ite(bv.and_(select_co, free_co), self.address(co), chosen)
        lhs = instr.lhs.uid
        p = state[lhs] = self.define(f'{lhs}#{index}{sfx}', chosen, SymbolKind.PLAIN, index, lhs)
        at.visit.assigned.append((expr_to_str(instr.lhs), p, instr.lhs.type))
        for obj in objects + [co]:
            hit = bv.eq(p, self.address(obj))
            for cell in universe.cells_of(obj):
                fresh = bv.ite(hit, self.zero(cell.type), state[cell.name])
                state[cell.name] = self.define(f'{cell.name}#{index}{sfx}', fresh, SymbolKind.PLAIN,
                                               index, cell.name)
            alloc = universe.flag_cell(obj, 'alloc')
            state[alloc] = self.define(f'{alloc}#{index}{sfx}', bv.or_(hit, state[alloc]),
                                       SymbolKind.PLAIN, index, alloc)
        freed = universe.flag_cell(co, 'freed')
        hit_co = bv.eq(p, self.address(co))
        state[freed] = self.define(f'{freed}#{index}{sfx}', bv.ite(hit_co, bv.false(), state[freed]),
                                   SymbolKind.PLAIN, index, freed)

    def encode_free(self, instr, state, at):
        index, sfx = at.index, at.frame.suffix
        p = state[instr.rhs.uid]
        sites = sorted({obj.site for obj in self.targets(index, instr.rhs.uid) if obj.is_heap})
        for site in sites:
            co = self.universe.concrete_object(site)
            freed = self.universe.flag_cell(co, 'freed')
            updated = bv.ite(bv.eq(p, self.address(co)), bv.true(), state[freed])
            state[freed] = self.define(f'{freed}#{index}{sfx}', updated, SymbolKind.PLAIN, index, freed)

    # Expressions

    def value(self, e, state, at):
        if isinstance(e, m.Const):
            if e.type.is_bool:
                return bv.boolean(e.value)
            if e.type.is_pointer:
                return self.null
            return bv.const(e.value, e.type.width)
        if isinstance(e, m.Var):
            return state[e.uid]
        if isinstance(e, m.Deref) or (isinstance(e, m.Field) and e.arrow):
            return self.deref_read(e, state, at)
        if isinstance(e, m.Field):
            return state[field_cell(e.base.uid, e.name)]
        if isinstance(e, m.Index):
            element = bv.select(state[e.base.uid], self.value(e.index, state, at))
            return bv.ne(element, bv.const(0, 1)) if e.type.is_bool else element
        if isinstance(e, m.Unary):
            operand = self.value(e.operand, state, at)
            if e.op == '!':
                return bv.not_(as_bool(operand))
            if e.op == '-':
                return bv.neg(operand)
            return operand
        if isinstance(e, m.Binary):
            return self.binary(e, state, at)
        if isinstance(e, m.Ternary):
            cond = as_bool(self.value(e.cond, state, at))
            return bv.ite(cond, self.value(e.then, state, at), self.value(e.other, state, at))
        if isinstance(e, m.Cast):
            return self.convert(self.value(e.operand, state, at), e.operand.type, e.type)
        if isinstance(e, m.AddressOf):
            return self.address(static_object(self.program.variables[e.operand.uid]))
        if isinstance(e, m.Nondet):
            return self.havoc(e.type, at)
        if isinstance(e, OverflowCheck):
            return self.fits(e, state, at)
        if isinstance(e, FreeChoice):
            name = f'choice{e.number}#{at.index}{at.frame.suffix}'
            return self.free(name, bv.BOOL, SymbolKind.FREE_GUARD, at.index)
        if isinstance(e, LeakCheck):
            co = self.universe.concrete_object(e.site)
            alloc = state.get(self.universe.flag_cell(co, 'alloc'), bv.false())
            freed = state.get(self.universe.flag_cell(co, 'freed'), bv.false())
            return bv.or_(bv.not_(alloc), freed)
        raise ValueError(f'cannot encode {type(e).__name__}')

    def binary(self, e, state, at):
        op = e.op
        left = self.value(e.left, state, at)
        right = self.value(e.right, state, at)
        if op == '&&':
            return bv.and_(as_bool(left), as_bool(right))
        if op == '||':
            return bv.or_(as_bool(left), as_bool(right))
        if op == '+':
            return bv.add(left, right)
        if op == '-':
            return bv.sub(left, right)
        if op == '*':
            return bv.mul(left, right)
        if op == '==':
            return bv.eq(left, right)
        if op == '!=':
            return bv.ne(left, right)
        signed = isinstance(e.left.type, m.IntType) and e.left.type.signed
        if op == '<':
            return bv.lt(left, right, signed)
        if op == '<=':
            return bv.le(left, right, signed)
        if op == '>':
            return bv.lt(right, left, signed)
        if op == '>=':
            return bv.le(right, left, signed)
        raise ValueError(f'cannot encode operator {op}')

    def convert(self, term, source, target):
        if target.is_bool:
            return as_bool(term)
        if target.is_pointer:
            return term if source.is_pointer else self.null
        if term.sort.is_bool:
            return bv.bool_to_bv(term, target.width)
        signed = isinstance(source, m.IntType) and source.signed
        return bv.resize(term, target.width, signed)

    def fits(self, e, state, at):
        """The operation checked by `e`, done two's-complement wide enough never to wrap."""
        width = e.operands[0].type.width
        values = [self.value(o, state, at) for o in e.operands]
        wide = 2 * width + 1 if e.op == '*' and len(values) == 2 else width + 1
        extended = [bv.sext(v, wide) for v in values]
        if len(extended) == 1:
            exact = bv.neg(extended[0])
        elif e.op == '+':
            exact = bv.add(*extended)
        elif e.op == '-':
            exact = bv.sub(*extended)
        else:
            exact = bv.mul(*extended)
        return bv.eq(bv.sext(bv.trunc(exact, width), wide), exact)


def build_ssa(program, memory=None, depth=1):
    """The SSA form of `program` with every loop instance unwound `depth` times."""
    memory = memory or build_memory_model(program)
    form = SsaBuilder(program, memory, depth).build()
    check_well_formed(form)
    return form
