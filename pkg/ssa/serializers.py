"""Text dump of an SsaForm for --show-ssa."""

from solver.printer import term_to_str


def object_names(universe):
    return {tag: str(obj) for obj, tag in universe.tags.items() if tag}


def ssa_lines(form):
    """Conjuncts in encoding order, then the merge definitions sorted by join."""
    names = object_names(form.universe)
    lines = [f'unwinding depth {form.depth}']
    lines.extend(term_to_str(term, names) for term in form.constraints)
    for key in sorted(form.merges):
        lines.append(f'-- join at {key[0]} copies {list(key[1])}')
        lines.extend(term_to_str(term, names) for term in form.merges[key].definitions())
    for a in form.assertions:
        lines.append(f'assert [{a.property_id}] {term_to_str(a.guard, names)} '
                     f'=> {term_to_str(a.cond, names)}')
    return lines


def ssa_to_str(form):
    return '\n'.join(ssa_lines(form)) + '\n'
