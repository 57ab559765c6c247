"""
Lexicographic linear ranking functions, found by counterexample-guided
search over a small coefficient grid.

A loop's transition relation is its first unwinding copy: the head state
(pre-loop value or loop-back value, the latter bounded by the invariant)
to the state at the back edge. Differences are taken at extended width, so
a candidate that only decreases modulo 2^w is rejected.
"""

import logging

from core import settings
from core.exceptions import ResourceLimit
from domains.templates import cell_signed, numeric_cells
from domains.widths import linear_combination, signed_value
from solver import models as bv
from solver.instance import SolveResult, SolverInstance
from termination.models import LoopRanking, RankingComponent, TerminationArgument

logger = logging.getLogger(__name__)


def candidate_coefficients(max_exponent=None):
    max_exponent = settings.RANKING_MAX_EXPONENT if max_exponent is None else max_exponent
    powers = [2 ** j for j in range(max_exponent + 1)]
    return [0] + powers + [-p for p in powers]


def loop_transition(inst):
    """(guard, head state, back-edge state) of one iteration."""
    first = inst.copies[0]
    return first.latch_guard, first.entry_state, first.latch_state


def decrease(form, component, before, after):
    """R(before) − R(after) as an exact term, None for the zero component."""
    if component.is_zero:
        return None
    items = []
    for cell, c in component.terms:
        signed = cell_signed(form, cell)
        items.append((c, before[cell], signed))
        items.append((-c, after[cell], signed))
    return linear_combination(items)


def lexicographic(form, components, before, after):
    """Some component strictly decreases and the ones before it do not increase."""
    options = []
    held = []
    for component in components:
        diff = decrease(form, component, before, after)
        if diff is None:
            continue
        zero = bv.const(0, diff.width)
        options.append(bv.and_(bv.all_of(held), bv.sgt(diff, zero)))
        held.append(bv.sge(diff, zero))
    return bv.any_of(options)


def ranking_violation(form, inst, components):
    guard, before, after = loop_transition(inst)
    return bv.and_(guard, bv.not_(lexicographic(form, components, before, after)))


def check_components(ctx, inst, components):
    """(True, None) when the components rank every iteration, else (False, model)."""
    result, model = ctx.solve(ranking_violation(ctx.form, inst, components))
    return result == SolveResult.UNSAT, model


def _cell_value(form, model, term, cell):
    raw = model.value(term, strict=False)
    if isinstance(raw, bool):
        return int(raw)
    return signed_value(raw, term.width) if cell_signed(form, cell) else raw


def transition_sample(form, inst, cells, model):
    """Per cell: value at the head minus value at the back edge."""
    _, before, after = loop_transition(inst)
    return {cell: _cell_value(form, model, before[cell], cell) - _cell_value(form, model, after[cell], cell)
            for cell in cells}


def fit_components(cells, samples, count, max_exponent=None):
    """
    Coefficients for `count` components that rank every sampled transition,
    preferring as few variables per component as possible; None when the
    grid has no such coefficients.
    """
    grid = candidate_coefficients(max_exponent)
    width = max(abs(v) for v in grid).bit_length() + 1
    diff_bits = max([abs(d).bit_length() for s in samples for d in s.values()] + [1])
    sum_width = diff_bits + width + len(cells).bit_length() + 1
    with SolverInstance() as solver:
        coefficients = []
        for j in range(count):
            row = [bv.symbol(f'rank#{j}.{i}', bv.bv_sort(width)) for i in range(len(cells))]
            for c in row:
                solver.add(bv.any_of(bv.eq(c, bv.const(v, width)) for v in grid))
            solver.add(bv.any_of(bv.ne(c, bv.const(0, width)) for c in row))
            coefficients.append(row)
        for sample in samples:
            options, held = [], []
            for row in coefficients:
                total = None
                for c, cell in zip(row, cells):
                    part = bv.mul(bv.sext(c, sum_width), bv.const(sample[cell], sum_width))
                    total = part if total is None else bv.add(total, part)
                zero = bv.const(0, sum_width)
                options.append(bv.and_(bv.all_of(held), bv.sgt(total, zero)))
                held.append(bv.sge(total, zero))
            solver.add(bv.any_of(options))
        count_width = len(cells).bit_length() + 1
        for support in range(1, len(cells) + 1):
            limits = []
            for row in coefficients:
                used = None
                for c in row:
                    bit = bv.bool_to_bv(bv.ne(c, bv.const(0, width)), count_width)
                    used = bit if used is None else bv.add(used, bit)
                limits.append(bv.ule(used, bv.const(support, count_width)))
            result, model = solver.check(bv.all_of(limits))
            if result == SolveResult.SAT:
                return [RankingComponent(tuple((cell, bv.to_signed(model.value(c), width))
                                               for c, cell in zip(row, cells)))
                        for row in coefficients]
    return None


def synthesize_loop(ctx, inst, max_components=None, max_refinements=None):
    """The ranking of one loop; a ranking without components when none was found."""
    form = ctx.form
    max_components = max_components or settings.RANKING_MAX_COMPONENTS
    max_refinements = settings.RANKING_MAX_REFINEMENTS if max_refinements is None else max_refinements
    cells = numeric_cells(form, inst.head, written=True)
    ranking = LoopRanking(inst.head, cells)
    if not cells:
        logger.info('loop at %d changes no integer variable; no ranking', inst.head)
        return ranking
    samples = []
    count = 1
    try:
        while count <= max_components and ranking.refinements <= max_refinements:
            components = fit_components(cells, samples, count)
            if components is None:
                count += 1
                continue
            ok, model = check_components(ctx, inst, components)
            if ok:
                ranking.components = components
                logger.info('loop at %d ranked by %d component(s) after %d refinements', inst.head,
                            count, ranking.refinements)
                return ranking
            samples.append(transition_sample(form, inst, cells, model))
            ranking.refinements += 1
    except ResourceLimit:
        logger.warning('ranking search for loop at %d hit a resource limit', inst.head)
    logger.info('no ranking for loop at %d', inst.head)
    return ranking


def synthesize_ranking(ctx, stop=None):
    """A ranking for every loop instance of the depth-1 unwinding in `ctx`."""
    argument = TerminationArgument()
    for inst in ctx.form.instances:
        if stop is not None and stop.is_set():
            break
        argument.rankings.append(synthesize_loop(ctx, inst))
    return argument


def verify_ranking(argument, ctx):
    """True iff every loop has components and they rank all of its iterations."""
    for inst in ctx.form.instances:
        ranking = argument.for_loop(inst.head)
        if ranking is None or ranking.is_top:
            return False
        try:
            ok, _ = check_components(ctx, inst, ranking.components)
        except ResourceLimit:
            return False
        if not ok:
            logger.warning('ranking of loop at %d does not hold', inst.head)
            return False
    return True
