"""
Solving for the template parameters.

Both strategies share one solver with the SSA already loaded. Template-side
constraints go in under fresh assumption literals that are retired once the
call returns, so nothing is ever removed from the solver.
"""

import itertools
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field

from core import settings
from core.exceptions import ResourceLimit
from domains.models import TOP, TemplateInvariant
from domains.templates import (failing_rows, instances_of, latch_site, row_join, saturate,
                               template_constraint, violation_term)
from domains.widths import max_value, signed_value
from solver import models as bv
from solver.instance import SolveResult

logger = logging.getLogger(__name__)

STRATEGIES = ('binsearch', 'generic')


@dataclass
class InferenceContext:
    """A solver with the SSA loaded and the assumptions every call must carry."""
    form: object
    solver: object
    assumptions: list = field(default_factory=list)
    max_rounds: int = None
    calls: int = 0

    def __post_init__(self):
        if self.max_rounds is None:
            self.max_rounds = settings.GENERIC_MAX_ROUNDS
        self._serial = itertools.count()

    def push(self, *terms):
        act = self.solver.new_assumption()
        for term in terms:
            self.solver.add_under(act, term)
        return act

    def pop(self, act):
        self.solver.retire(act)

    def solve(self, *terms, extra=()):
        act = self.push(*terms)
        try:
            self.calls += 1
            result, model = self.solver.solve(list(self.assumptions) + list(extra) + [act])
        finally:
            self.pop(act)
        logger.debug('inference call %d: %s under %d assumptions', self.calls, result.value,
                     len(self.assumptions) + len(extra) + 1)
        if result == SolveResult.UNKNOWN:
            raise ResourceLimit('solver gave up during invariant inference')
        return result, model

    @contextmanager
    def assuming(self, *terms):
        act = self.push(*terms)
        self.assumptions.append(act)
        try:
            yield act
        finally:
            self.assumptions.remove(act)
            self.pop(act)

    def fresh(self, base):
        return f'{base}.{next(self._serial)}'


def is_inductive(template, value, ctx):
    result, _ = ctx.solve(template_constraint(ctx.form, template, value),
                          violation_term(ctx.form, template, value))
    return result == SolveResult.UNSAT


def _check(template, value, ctx):
    return ctx.solve(template_constraint(ctx.form, template, value),
                     violation_term(ctx.form, template, value))


def strategy_iteration_generic(template, ctx, value=None):
    """Joins failing rows with the model values until the template is inductive."""
    value = value.copy() if value is not None else template.bottom()
    rounds = 0
    while True:
        result, model = _check(template, value, ctx)
        if result == SolveResult.UNSAT:
            logger.debug('%s inductive after %d rounds: %s', template.domain, rounds, value.values)
            return value
        rounds += 1
        failing = failing_rows(ctx.form, template, value, model)
        widen = rounds > ctx.max_rounds or not failing
        if widen:
            logger.info('%s: widening %d rows to top after %d rounds', template.domain,
                        len(failing) or len(template), rounds)
        for i in (failing or range(len(template))):
            if widen:
                value[i] = TOP
                continue
            for v in failing[i]:
                value[i] = row_join(template.rows[i], value[i], v)
            value[i] = saturate(ctx.form, template.rows[i], value[i])


def strategy_iteration_binary_search(template, ctx):
    """
    Failing polyhedral rows become symbolic and the largest sum of them that
    is still reachable in one step from the region they bound is found by
    binary search. Shape rows are joined as in the generic strategy.
    """
    value = template.bottom()
    passes = 0
    while True:
        result, model = _check(template, value, ctx)
        if result == SolveResult.UNSAT:
            logger.debug('%s inductive after %d passes: %s', template.domain, passes, value.values)
            return value
        passes += 1
        failing = failing_rows(ctx.form, template, value, model)
        if passes > ctx.max_rounds or not failing:
            for i in (failing or range(len(template))):
                value[i] = TOP
            continue
        poly = {}
        for i, values in failing.items():
            if template.rows[i].is_poly:
                poly[i] = max(values)
            else:
                for v in values:
                    value[i] = row_join(template.rows[i], value[i], v)
                value[i] = saturate(ctx.form, template.rows[i], value[i])
        if poly:
            for i, v in _maximise(template, value, poly, ctx).items():
                value[i] = saturate(ctx.form, template.rows[i], v)


def _maximise(template, value, lower, ctx):
    form = ctx.form
    deltas = {}
    widths = {}
    for i in lower:
        row = template.rows[i]
        width = latch_site(form, row, instances_of(form, row)[0])[1].width
        widths[i] = width
        deltas[i] = bv.symbol(ctx.fresh(f'delta#{i}'), bv.bv_sort(width))
    symbolic = value.copy()
    for i, delta in deltas.items():
        symbolic[i] = delta
    terms = [template_constraint(form, template, symbolic)]
    for i, delta in deltas.items():
        row = template.rows[i]
        reach = []
        for inst in instances_of(form, row):
            guard, expr = latch_site(form, row, inst)
            reach.append(bv.and_(guard, bv.sle(delta, expr)))
        terms.append(bv.any_of(reach))
        terms.append(bv.sge(delta, bv.const(lower[i], widths[i])))
    sum_width = max(widths.values()) + len(deltas).bit_length() + 1
    total = None
    for delta in deltas.values():
        part = bv.sext(delta, sum_width)
        total = part if total is None else bv.add(total, part)
    best = dict(lower)
    low = sum(best.values())
    high = sum(max_value(widths[i]) for i in deltas)
    with ctx.assuming(*terms):
        while low < high:
            mid = (low + high + 1) // 2
            result, model = ctx.solve(bv.sge(total, bv.const(mid, sum_width)))
            if result == SolveResult.SAT:
                best = {i: signed_value(model.value(d), widths[i]) for i, d in deltas.items()}
                low = sum(best.values())
            else:
                high = mid - 1
    logger.debug('binary search over rows %s: %s', sorted(deltas), best)
    return best


def infer(template, ctx, strategy=None):
    """An inductive value of `template`; top when the solver gives up."""
    strategy = strategy or settings.STRATEGY
    if strategy not in STRATEGIES:
        raise ValueError(f'unknown strategy {strategy}')
    if not template.rows:
        return template.top()
    try:
        if strategy == 'generic' or not any(row.is_poly for row in template.rows):
            return strategy_iteration_generic(template, ctx)
        return strategy_iteration_binary_search(template, ctx)
    except ResourceLimit:
        logger.warning('%s inference hit a resource limit; using true', template.domain)
        return template.top()


def infer_invariant(template, ctx, strategy=None):
    return TemplateInvariant(template, infer(template, ctx, strategy))

