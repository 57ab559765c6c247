"""
Template construction and instantiation.

Rows are built per loop and instantiated on every instance of that loop in
the current unwinding: over its loop-back symbols under
`pre-guard ∧ loop-select`, and over the state reaching the latch of its
first copy for the inductivity obligation.
"""

import itertools
import logging

from domains.models import BOTTOM, TOP, PathInvariant, RowKind, Template, TemplateRow
from domains.widths import linear_combination, signed_value
from solver import models as bv

logger = logging.getLogger(__name__)

DOMAINS = ('havoc', 'intervals', 'zones', 'octagons')


# Rows

def loop_cells(form, head, written=False):
    """Cells live across the back edge of the loop at `head`, or only those it writes."""
    for inst in form.instances:
        if inst.head == head:
            return list(inst.modified if written else inst.live)
    return []


def loop_heads(form):
    return sorted({inst.head for inst in form.instances})


def numeric_cells(form, head, written=False):
    universe = form.universe
    out = []
    for name in loop_cells(form, head, written):
        cell = universe.cell(name)
        if cell.flag or not cell.type.is_integer:
            continue
        out.append(name)
    return out


def pointer_cells(form, head):
    universe = form.universe
    return [name for name in loop_cells(form, head) if universe.cell(name).type.is_pointer]


def display_name(form, cell):
    return variable_name(form.program, cell)


def variable_name(program, cell):
    """The source name of a cell: the variable it belongs to plus any field path."""
    uid, dot, rest = cell.partition('.')
    info = program.variables.get(uid)
    if info is None:
        return cell
    return info.name + dot + rest


def _poly(form, head, cells, coefficients):
    names = [display_name(form, c) for c in cells]
    label = ''
    for k, name in zip(coefficients, names):
        if not label:
            label = name if k > 0 else f'-{name}'
        else:
            label += f' + {name}' if k > 0 else f' - {name}'
    return TemplateRow(RowKind.POLY, head, tuple(cells), tuple(coefficients), label)


def interval_rows(form):
    rows = []
    for head in loop_heads(form):
        for cell in numeric_cells(form, head):
            rows.append(_poly(form, head, [cell], [1]))
            rows.append(_poly(form, head, [cell], [-1]))
    return rows


def pair_rows(form, signs):
    """Rows over every ordered pair of numeric cells of a loop."""
    rows = []
    for head in loop_heads(form):
        for a, b in itertools.permutations(numeric_cells(form, head), 2):
            for sa, sb in signs:
                rows.append(_poly(form, head, [a, b], [sa, sb]))
    return rows


def make_interval_template(form):
    return Template('intervals', interval_rows(form))


DIFFERENCES = [(1, -1), (-1, 1)]
SUMS = [(1, 1), (-1, -1)]


def make_zone_template(form):
    return Template('zones', interval_rows(form) + pair_rows(form, DIFFERENCES))


def make_octagon_template(form):
    return Template('octagons', interval_rows(form) + pair_rows(form, DIFFERENCES) + pair_rows(form, SUMS))


def make_shape_template(form):
    rows = [TemplateRow(RowKind.SHAPE, head, (cell,), label=display_name(form, cell))
            for head in loop_heads(form) for cell in pointer_cells(form, head)]
    return Template('shape', rows)


def product_template(first, second):
    return first + second


def make_template(form, domain='intervals', heap=False):
    """The template for a domain name, times the shape domain under `heap`."""
    if domain not in DOMAINS:
        raise ValueError(f'unknown abstract domain {domain}')
    if domain == 'havoc':
        template = Template('havoc')
    else:
        template = {'intervals': make_interval_template, 'zones': make_zone_template,
                    'octagons': make_octagon_template}[domain](form)
    if heap:
        template = product_template(template, make_shape_template(form))
    logger.debug('%s template: %d rows', template.domain, len(template))
    return template


# Instantiation

def cell_signed(form, cell):
    t = form.universe.cell(cell).type
    return bool(getattr(t, 'signed', False))


def instances_of(form, row):
    return [inst for inst in form.instances if inst.head == row.head]


def loopback_values(inst):
    values = dict(inst.pre_state)
    values.update(inst.loopback)
    return values


def row_expr(form, row, values):
    if row.is_poly:
        return linear_combination([(k, values[c], cell_signed(form, c))
                                   for k, c in zip(row.coefficients, row.cells)])
    return values[row.cells[0]]


def _allocated(form, row, values):
    """Heap object cells only mean something while their object is allocated."""
    universe = form.universe
    flags = []
    for name in row.cells:
        owner = universe.cell(name).owner
        if owner is not None and owner.is_heap:
            flag = universe.flag_cell(owner, 'alloc')
            if flag in values:
                flags.append(values[flag])
    return bv.all_of(flags)


def head_site(form, row, inst):
    """(guard, expression) of a row over the loop-back values of `inst`."""
    values = loopback_values(inst)
    guard = bv.and_(inst.pre_guard, inst.loop_select, _allocated(form, row, values))
    return guard, row_expr(form, row, values)


def latch_site(form, row, inst):
    """(guard, expression) of a row over the state at the back edge of the first copy."""
    first = inst.copies[0]
    values = first.latch_state
    guard = bv.and_(first.latch_guard, _allocated(form, row, values))
    return guard, row_expr(form, row, values)


def bound(row, d, guard, expr, width=None):
    """`guard ⟹ expr ≤ d`, or `guard ⟹ expr ∈ d` for a shape row."""
    if d is TOP:
        return bv.true()
    if d is BOTTOM:
        return bv.not_(guard)
    if isinstance(d, bv.Term):
        return bv.implies(guard, bv.sle(expr, d))
    if row.is_poly:
        return bv.implies(guard, bv.sle(expr, bv.const(d, expr.width)))
    return bv.implies(guard, bv.any_of(bv.eq(expr, bv.addr(tag, expr.width)) for tag in sorted(d)))


def row_constraint(form, row, d):
    return bv.all_of(bound(row, d, *head_site(form, row, inst)) for inst in instances_of(form, row))


def template_constraint(form, template, value):
    return bv.all_of(row_constraint(form, row, d) for row, d in zip(template.rows, value))


def row_obligation(form, row, d):
    return bv.all_of(bound(row, d, *latch_site(form, row, inst)) for inst in instances_of(form, row))


def violation_term(form, template, value):
    """Some row fails at some latch."""
    return bv.any_of(bv.not_(row_obligation(form, row, d))
                     for row, d in zip(template.rows, value) if d is not TOP)


def row_width(form, row):
    inst = instances_of(form, row)[0]
    return head_site(form, row, inst)[1].width


# Joins

def row_join(row, d, value):
    if d is TOP:
        return TOP
    if row.is_poly:
        return value if d is BOTTOM else max(d, value)
    return frozenset([value]) if d is BOTTOM else d | {value}


def row_max(form, row):
    """Largest value a polyhedral row expression takes over its cell types."""
    total = 0
    for k, cell in zip(row.coefficients, row.cells):
        t = form.universe.cell(cell).type
        total += k * (t.max_value if k > 0 else t.min_value)
    return total


def saturate(form, row, d):
    """
    A polyhedral bound no value of the row can exceed is top, and so is a
    shape row that holds every address or a value no object has.
    """
    if row.is_poly:
        return TOP if isinstance(d, int) and d >= row_max(form, row) else d
    if isinstance(d, frozenset):
        tags = set(form.universe.tags.values())
        if not d <= tags or d == tags:
            return TOP
    return d


def exceeds(row, d, value):
    if d is TOP:
        return False
    if d is BOTTOM:
        return True
    return value > d if row.is_poly else value not in d


def failing_rows(form, template, value, model):
    """Row index -> model values of the rows the model breaks at some latch."""
    out = {}
    for i, (row, d) in enumerate(zip(template.rows, value)):
        if d is TOP:
            continue
        for inst in instances_of(form, row):
            guard, expr = latch_site(form, row, inst)
            if not model.value(guard, strict=False):
                continue
            raw = model.value(expr, strict=False)
            decoded = signed_value(raw, expr.width) if row.is_poly else raw
            if exceeds(row, d, decoded):
                out.setdefault(i, []).append(decoded)
    return out


def invariant_constraint(form, invariant):
    """The invariant as a constraint over the loop-back symbols of the current unwinding."""
    if invariant is None:
        return bv.true()
    if isinstance(invariant, PathInvariant):
        return bv.all_of(bv.implies(path.term, template_constraint(form, invariant.template, d))
                         for path, d in invariant.entries)
    return template_constraint(form, invariant.template, invariant.value)
