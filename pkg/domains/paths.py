"""
Invariants conditioned on symbolic paths: one invariant per assignment of
the loop-select guards, each inferred with its path assumed.
"""

import itertools
import logging

from core import settings
from domains.models import PathInvariant, SymbolicPath
from domains.strategy import infer
from domains.templates import template_constraint
from solver import models as bv
from solver.instance import SolveResult

logger = logging.getLogger(__name__)


def loop_selects(form):
    return [inst.loop_select for inst in form.instances]


def symbolic_paths(form):
    """Every path but the all-negative one, in a fixed order."""
    selects = loop_selects(form)
    out = []
    for signs in itertools.product((True, False), repeat=len(selects)):
        path = SymbolicPath(tuple(zip(selects, signs)))
        if not path.is_bottom:
            out.append(path)
    return out


def entered(form, path):
    """The pre-loop guards of the loop instances the path says were entered from a back edge."""
    selected = {sym for sym, positive in path.literals if positive}
    return bv.all_of(inst.pre_guard for inst in form.instances if inst.loop_select in selected)


def infer_with_symbolic_paths(template, ctx, strategy=None, cap=None):
    """
    A PathInvariant, or None when there are more paths than `cap` and the
    caller should use the plain template.

    Inference for a path fixes only the loop-select guards it negates. A
    selected loop keeps its entry case, which is what covers the first
    iteration; the whole path is the premise of the resulting implication.
    """
    cap = settings.SYMBOLIC_PATH_CAP if cap is None else cap
    form = ctx.form
    count = 2 ** len(loop_selects(form)) - 1
    if count > cap:
        logger.info('%d symbolic paths exceed the cap of %d; inferring without paths', count, cap)
        return None
    invariant = PathInvariant(template)
    for path in symbolic_paths(form):
        with ctx.assuming(path.negated):
            value = infer(template, ctx, strategy)
        result, _ = ctx.solve(path.term, entered(form, path), template_constraint(form, template, value))
        if result == SolveResult.SAT:
            invariant.entries.append((path, value))
        else:
            logger.debug('path %s unreachable; invariant dropped', path)
    logger.info('symbolic paths: %d of %d kept', len(invariant.entries), count)
    return invariant
