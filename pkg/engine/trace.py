"""
Counterexample traces: the instruction visits a model executes, in program
order, with the values they assign and the inputs they consume.
"""

import logging

from core.exceptions import ReplayMismatch
from engine.models import Trace, TraceStep
from midend.interpreter import run_goto
from solver import models as bv

logger = logging.getLogger(__name__)


def ordered_visits(form):
    """Every encoded instruction visit, copies of a loop instance in unwinding order."""
    loop_at = {loop.head: loop for loop in form.program.loops()}

    def walk(lo, hi, prefix, head):
        index = lo
        while index <= hi:
            loop = loop_at.get(index)
            if loop is not None and index != head:
                for number in range(1, form.depth + 1):
                    yield from walk(loop.head, loop.latch, prefix + ((loop.head, number),), loop.head)
                index = loop.latch + 1
                continue
            visit = form.visits.get(prefix + ((index,),))
            if visit is not None:
                yield visit
            index += 1

    yield from walk(0, form.program.end, (), None)


def render_value(form, value, t):
    if t.is_pointer:
        return str(form.universe.object_for_tag(value))
    if t.is_bool or isinstance(value, bool):
        return str(int(bool(value)))
    if t.is_array:
        element = t.element
        return '{' + ', '.join(render_value(form, v, element) for v in value) + '}'
    if getattr(t, 'signed', False):
        return str(bv.to_signed(value, t.width))
    return str(value)


def raw_input(value, t):
    """The input stream entry that makes the interpreter produce `value`."""
    if t.is_bool or isinstance(value, bool):
        return int(bool(value))
    if getattr(t, 'signed', False):
        return bv.to_signed(value, t.width)
    return value


def _step(program, index, variable='', value=''):
    loc = program.instructions[index].loc
    return TraceStep(index, loc.file, loc.line, loc.function or program.entry, variable, value)


def follow(form, model, trace, until):
    """
    Adds to `trace` the inputs and assignments of every visit whose guard the
    model sets, up to and including the first visit `until` accepts. Returns
    that visit, or None when the walk ran off the end.
    """
    program = form.program
    for visit in ordered_visits(form):
        if not model.value(visit.guard, strict=False):
            continue
        for record in visit.inputs:
            if record.condition is not None and not model.value(record.condition, strict=False):
                continue
            for term, t in record.symbols:
                trace.inputs.append(raw_input(model.value(term, strict=False), t))
        for label, term, t in visit.assigned:
            shown = render_value(form, model.value(term, strict=False), t)
            trace.steps.append(_step(program, visit.location, label, shown))
        if until(visit):
            trace.steps.append(_step(program, visit.location))
            return visit
    return None


def extract_trace(form, model, property_id):
    """The path the model takes to the first violated instance of `property_id`."""
    violations = {a.key: a for a in form.assertions_for(property_id)}

    def violated(visit):
        assertion = violations.get(visit.key)
        return assertion is not None and model.value(assertion.violation, strict=False)

    trace = Trace(property_id, depth=form.depth)
    if follow(form, model, trace, violated) is not None:
        logger.debug('trace for %s: %d steps, %d inputs', property_id, len(trace.steps),
                     len(trace.inputs))
        return trace
    logger.warning('model violates no instance of %s along its guards', property_id)
    return trace


def replay(program, trace):
    """Runs the trace inputs concretely; raises ReplayMismatch unless the property fails."""
    result = run_goto(program, trace.inputs, stop_at=trace.property_id)
    if not result.violates(trace.property_id):
        raise ReplayMismatch(f'inputs {trace.inputs} do not violate {trace.property_id} '
                             f'(run {result.status})')
    logger.debug('trace for %s replays in %d steps', trace.property_id, result.steps)
    return result
