"""
Incremental unwinding: every loop instance gains one copy per step and the
solver only ever receives new clauses.
"""

import logging

from solver.instance import SolverInstance
from ssa.builder import build_ssa
from ssa.check import check_well_formed
from unwinder.models import UnwindDelta, UnwoundSsa

logger = logging.getLogger(__name__)


def load_form(form, solver=None):
    """Binds `form` to `solver` (a fresh one by default) and loads everything built so far."""
    unwound = UnwoundSsa(form, solver or SolverInstance())
    sync(unwound)
    return unwound


def start(program, memory=None, solver=None):
    """The depth-1 unwinding of `program`, loaded."""
    return load_form(build_ssa(program, memory, depth=1), solver)


def sync(unwound):
    """Hands the solver whatever the form gained since the last call."""
    form, solver = unwound.form, unwound.solver
    delta = UnwindDelta(form.depth)
    for term in form.constraints[unwound.loaded:]:
        solver.add(term)
        delta.constraints.append(term)
    unwound.loaded = len(form.constraints)
    for key, record in form.merges.items():
        if unwound.merge_versions.get(key) == record.version:
            continue
        old = unwound.merge_literals.get(key)
        if old is not None:
            solver.retire(old)
            unwound.retired.add(old)
            delta.retired.append(old)
        alpha = solver.new_assumption()
        for term in record.definitions():
            solver.add_under(alpha, term)
            delta.constraints.append(term)
        unwound.merge_literals[key] = alpha
        unwound.merge_versions[key] = record.version
        delta.assumptions.append(alpha)
    names = list(form.symbols)
    delta.symbols = names[unwound.known_symbols:]
    unwound.known_symbols = len(names)
    unwound.renamings.setdefault(form.depth, []).extend(delta.symbols)
    return delta


def unwind(unwound, to_k):
    """Extends every loop instance by one copy; `to_k` must be the next depth."""
    if to_k != unwound.depth + 1:
        raise ValueError(f'can only unwind from depth {unwound.depth} to {unwound.depth + 1}, '
                         f'not to {to_k}')
    unwound.form.extend()
    check_well_formed(unwound.form)
    delta = sync(unwound)
    logger.info('unwound to depth %d: %d new constraints, %d merge literals retired',
                to_k, len(delta.constraints), len(delta.retired))
    return delta


def active_assumptions(unwound, depth=None):
    """Merge literals to assume at the current depth: live ones positive, retired ones negated."""
    if depth is not None and depth != unwound.depth:
        raise ValueError(f'the unwinding is at depth {unwound.depth}; depth {depth} is gone')
    live = sorted(unwound.merge_literals.values())
    return live + sorted(-lit for lit in unwound.retired)
