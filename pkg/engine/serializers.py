"""Result text: one line per property, the overall verdict and counterexample traces."""

from midend.serializers import property_line


def status_lines(program, statuses):
    return [property_line(p, statuses[p.id].value) for p in program.properties if p.id in statuses]


def verdict_line(verdict):
    return f'VERIFICATION {verdict.value}'


def location_line(step):
    return f'file {step.file} line {step.line} function {step.function}'


def step_lines(steps):
    """Assignments grouped under a location header whenever the location changes."""
    lines = []
    header = None
    for step in steps:
        where = location_line(step)
        if where != header:
            lines.append(where)
            header = where
        lines.append(f'  {step.variable}={step.value}')
    return lines


def trace_lines(program, trace):
    prop = program.property(trace.property_id)
    title = str(prop) if prop is not None else f'[{trace.property_id}]'
    lines = [f'Counterexample for {title}:', '']
    lines.extend(step_lines(trace.steps[:-1]))
    if trace.steps:
        last = trace.steps[-1]
        lines.append('')
        lines.append('Violated property:')
        lines.append(f'  {location_line(last)}')
        lines.append(f'  {prop.description if prop is not None else trace.property_id}')
    lines.append('')
    return lines


def result_lines(program, result, traces=False):
    lines = []
    if traces:
        for prop in program.properties:
            trace = result.traces.get(prop.id)
            if trace is not None:
                lines.extend(trace_lines(program, trace))
    lines.extend(status_lines(program, result.statuses))
    lines.append('')
    lines.append(verdict_line(result.verdict))
    return lines


def result_to_str(program, result, traces=False):
    return '\n'.join(result_lines(program, result, traces)) + '\n'
