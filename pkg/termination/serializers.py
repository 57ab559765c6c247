"""Text output of the termination analyses."""

from domains.templates import variable_name
from engine.models import Verdict
from engine.serializers import location_line, step_lines, verdict_line
from termination.models import RecurrenceWitness, TerminationVerdict

ANSWERS = {
    TerminationVerdict.TERMINATING: 'yes',
    TerminationVerdict.NONTERMINATING: 'no',
    TerminationVerdict.UNKNOWN: '?',
}

VERDICTS = {
    TerminationVerdict.TERMINATING: Verdict.SUCCESSFUL,
    TerminationVerdict.NONTERMINATING: Verdict.FAILED,
    TerminationVerdict.UNKNOWN: Verdict.INCONCLUSIVE,
}


def _term(coefficient, name, first):
    magnitude = abs(coefficient)
    text = name if magnitude == 1 else f'{magnitude}*{name}'
    if first:
        return f'-{text}' if coefficient < 0 else text
    return f'- {text}' if coefficient < 0 else f'+ {text}'


def component_to_str(program, component):
    parts = []
    for cell, c in component.terms:
        if c:
            parts.append(_term(c, variable_name(program, cell), not parts))
    return ' '.join(parts) or '0'


def ranking_line(program, ranking):
    loc = program.instructions[ranking.head].loc
    components = ', '.join(component_to_str(program, c) for c in ranking.components)
    return f'  ranking {loc.function or program.entry} line {loc.line}: ({components or "?"})'


def argument_lines(program, argument):
    lines = ['termination argument:']
    lines.extend(ranking_line(program, r) for r in argument.rankings)
    return lines


def witness_lines(program, witness):
    if isinstance(witness, RecurrenceWitness):
        what = f'head state repeats every {witness.period} iteration(s)'
    else:
        deltas = ', '.join(f'{name}+={d}' for name, d in sorted(witness.deltas.items()))
        what = f'every iteration does {deltas}'
    loc = program.instructions[witness.head].loc
    lines = [f'Nonterminating program execution proved after {witness.depth} unwinding(s)', '',
             'Counterexample:', '']
    lines.extend(step_lines(witness.trace.steps[:-1] if witness.trace else []))
    lines.append('')
    lines.append('Loop head:')
    if witness.trace and witness.trace.steps:
        lines.append(f'  {location_line(witness.trace.steps[-1])}')
    else:
        lines.append(f'  file {loc.file} line {loc.line} function {loc.function or program.entry}')
    lines.extend(f'  {name}={value}' for name, value in sorted(witness.state.items()))
    lines.append(f'  {what}')
    lines.append('')
    return lines


def result_lines(program, result, traces=False):
    lines = []
    if result.argument is not None and result.argument.rankings:
        lines.extend(argument_lines(program, result.argument))
    if result.witness is not None:
        if traces:
            lines.extend(witness_lines(program, result.witness))
        else:
            lines.append(f'Nonterminating program execution proved after {result.witness.depth} '
                         f'unwinding(s)')
    lines.append(f'[{program.entry}]: {ANSWERS[result.verdict]}')
    lines.append('')
    lines.append(verdict_line(VERDICTS[result.verdict]))
    return lines


def result_to_str(program, result, traces=False):
    return '\n'.join(result_lines(program, result, traces)) + '\n'
