"""Text form of inferred invariants for --show-invariants."""

from domains.models import BOTTOM, TOP, PathInvariant


def address_name(universe, tag):
    if tag == 0:
        return 'NULL'
    return str(universe.object_for_tag(tag))


def row_to_str(form, row, d):
    if d is TOP:
        return f'{row.label}: true'
    if d is BOTTOM:
        return f'{row.label}: false'
    if row.is_poly:
        return f'{row.label} <= {d}'
    names = sorted(address_name(form.universe, tag) for tag in d)
    return f'{row.label} in {{{", ".join(names)}}}'


def value_lines(form, template, value, indent=''):
    lines = []
    for row, d in zip(template.rows, value):
        loc = form.program.instructions[row.head].loc
        where = f'line {loc.line}' if loc is not None else f'location {row.head}'
        lines.append(f'{indent}[loop {where}] {row_to_str(form, row, d)}')
    return lines


def invariant_lines(form, invariant):
    if invariant is None or not invariant.template.rows:
        return ['invariant: true']
    if isinstance(invariant, PathInvariant):
        lines = []
        for path, value in invariant.entries:
            lines.append(f'path {path}:')
            lines.extend(value_lines(form, invariant.template, value, '  '))
        return lines or ['invariant: true']
    return value_lines(form, invariant.template, invariant.value)


def invariant_to_str(form, invariant):
    return '\n'.join(invariant_lines(form, invariant)) + '\n'
