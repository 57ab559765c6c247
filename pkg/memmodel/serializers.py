"""Text dumps of the pointer analyses for --show-points-to."""


def _targets(targets):
    return '{' + ', '.join(sorted(str(t) for t in targets)) + '}'


def points_to_lines(program, model):
    """One line per reachable location with the pointer facts holding before it."""
    lines = []
    for index, _instr in enumerate(program.instructions):
        if not model.points_to.reachable(index):
            lines.append(f'{index}: unreachable')
            continue
        facts = model.points_to.at(index)
        parts = [f'{cell} -> {_targets(facts[cell])}' for cell in sorted(facts) if facts[cell]]
        classes = sorted('{' + ', '.join(sorted(group)) + '}'
                         for group in model.must_alias.classes(index))
        line = f'{index}: ' + ('; '.join(parts) or '-')
        if classes:
            line += '  must-alias ' + ' '.join(classes)
        lines.append(line)
    return lines


def universe_lines(universe):
    lines = [f'address width {universe.address_width}']
    for obj in universe.objects:
        lines.append(f'{universe.tag(obj)}: {obj}')
    for site, count in sorted(universe.counts.items()):
        lines.append(f'site {site}: {count} abstract object(s) + concrete')
    return lines


def points_to_to_str(program, model):
    return '\n'.join(universe_lines(model.universe) + points_to_lines(program, model)) + '\n'
