import itertools
import random
import unittest

from core import settings
from domains.models import BOTTOM, TOP, RowKind, TemplateRow
from domains.paths import infer_with_symbolic_paths, symbolic_paths
from domains.serializers import invariant_to_str
from domains.strategy import (InferenceContext, infer, infer_invariant, is_inductive,
                              strategy_iteration_binary_search, strategy_iteration_generic)
from domains.templates import (display_name, head_site, instances_of, loop_heads, make_interval_template,
                               make_octagon_template, make_shape_template, make_template, make_zone_template,
                               numeric_cells, row_join, saturate, template_constraint)
from domains.widths import linear_combination, width_extension
from midend.pipeline import compile_source
from solver import models as bv
from solver.evaluate import evaluate
from ssa.check import record_run
from unwinder.unwind import active_assumptions, start

COUNT_UP = '''
int main() {
    int x = 0;
    while (x < 10)
        x++;
    return 0;
}
'''

COUNT_DOWN = '''
int main() {
    int x = 10;
    while (x > 0)
        x--;
    return 0;
}
'''

TWO_VARIABLES = '''
int main() {
    int x = 0, y = 5;
    while (x < 10) {
        x = x + 1;
        y = y + 1;
    }
    return 0;
}
'''

STRIDE = '''
int main() {
    signed char x = __VERIFIER_nondet_char();
    __CPROVER_assume(x >= 0 && x < 20);
    while (x < 50)
        x = x + 3;
    return 0;
}
'''

POINTER_ONLY = '''
int main() {
    int a;
    int *p = 0;
    while (p == 0)
        p = &a;
    return 0;
}
'''

LIST = '''
struct node { struct node *next; int val; };

int main() {
    struct node *l = 0;
    while (__VERIFIER_nondet_int()) {
        struct node *p = malloc(sizeof(struct node));
        p->next = l;
        l = p;
    }
    return 0;
}
'''

DEAD_LOOP = '''
int main() {
    int c = __VERIFIER_nondet_int();
    int x = 0;
    __CPROVER_assume(c > 5 && c < 3);
    while (x < 10)
        x++;
    return 0;
}
'''


def context(source):
    program = compile_source(source)
    unwound = start(program)
    return program, InferenceContext(unwound.form, unwound.solver, active_assumptions(unwound))


def exact(tree, values, signed):
    op = tree[0]
    if op == 'leaf':
        v = values[tree[1]]
        return bv.to_signed(v, 4) if signed else v
    if op == 'neg':
        return -exact(tree[1], values, signed)
    a, b = exact(tree[1], values, signed), exact(tree[2], values, signed)
    return {'add': a + b, 'sub': a - b, 'mul': a * b}[op]


def build(tree, leaves):
    op = tree[0]
    if op == 'leaf':
        return leaves[tree[1]]
    if op == 'neg':
        return bv.neg(build(tree[1], leaves))
    return {'add': bv.add, 'sub': bv.sub, 'mul': bv.mul}[op](build(tree[1], leaves), build(tree[2], leaves))


def random_tree(rng, depth=0):
    if depth >= 3 or rng.random() < 0.3:
        return ('leaf', rng.choice('ab'))
    op = rng.choice(['add', 'sub', 'mul', 'neg'])
    if op == 'neg':
        return ('neg', random_tree(rng, depth + 1))
    return (op, random_tree(rng, depth + 1), random_tree(rng, depth + 1))


class WidthExtensionTest(unittest.TestCase):

    def test_negated_difference_does_not_wrap(self):
        x = bv.symbol('x', bv.bv_sort(8))
        x2 = bv.symbol("x'", bv.bv_sort(8))
        e = width_extension(bv.mul(bv.const(-1, 8), bv.sub(x, x2)))
        value = evaluate(e, {x: 127, x2: 128})
        self.assertEqual(bv.to_signed(value, e.width), -255)

    def test_leaf_keeps_its_value(self):
        c = bv.const(5, 4)
        self.assertIs(width_extension(c), c)
        self.assertEqual(width_extension(bv.const(15, 4), signed=False).width, 5)

    def test_random_trees_match_integer_arithmetic(self):
        rng = random.Random(11)
        a, b = bv.symbol('a', bv.bv_sort(4)), bv.symbol('b', bv.bv_sort(4))
        for n in range(20):
            tree = random_tree(rng)
            if tree[0] == 'leaf':
                continue
            for signed in (True, False):
                e = width_extension(build(tree, {'a': a, 'b': b}), signed)
                for va, vb in itertools.product(range(16), repeat=2):
                    got = bv.to_signed(evaluate(e, {a: va, b: vb}), e.width)
                    with self.subTest(n=n, signed=signed, a=va, b=vb):
                        self.assertEqual(got, exact(tree, {'a': va, 'b': vb}, signed))

    def test_linear_combination_is_exact(self):
        a, b = bv.symbol('a', bv.bv_sort(4)), bv.symbol('b', bv.bv_sort(4))
        for ca, cb in [(1, -1), (-8, 4), (2, 2), (-1, 0)]:
            e = linear_combination([(ca, a, True), (cb, b, False)])
            for va, vb in itertools.product(range(16), repeat=2):
                expected = ca * bv.to_signed(va, 4) + cb * vb
                self.assertEqual(bv.to_signed(evaluate(e, {a: va, b: vb}), e.width), expected)


class TemplateTest(unittest.TestCase):

    def test_interval_rows_of_the_counting_loop(self):
        _, ctx = context(COUNT_UP)
        template = make_interval_template(ctx.form)
        self.assertEqual([row.label for row in template.rows], ['x', '-x'])
        self.assertTrue(all(row.kind == RowKind.POLY for row in template.rows))

    def test_rows_cover_cells_the_loop_only_reads(self):
        source = (settings.CORPUS_DIR / 'uri.c').read_text()
        form = start(compile_source(source, entry='copy_authority')).form
        self.assertIn('uri_length', [row.label for row in make_interval_template(form).rows])
        pairs = [{display_name(form, c) for c in row.cells} for row in make_zone_template(form).rows]
        self.assertIn({'cp', 'uri_length'}, pairs)
        written = [display_name(form, c) for c in numeric_cells(form, loop_heads(form)[0], written=True)]
        self.assertIn('cp', written)
        self.assertNotIn('uri_length', written)

    def test_row_counts_per_domain(self):
        _, ctx = context(TWO_VARIABLES)
        self.assertEqual(len(make_interval_template(ctx.form)), 4)
        self.assertEqual(len(make_zone_template(ctx.form)), 8)
        self.assertEqual(len(make_octagon_template(ctx.form)), 12)
        labels = [row.label for row in make_octagon_template(ctx.form).rows]
        self.assertEqual(len(set(labels)), 12)
        self.assertIn('x - y', labels)
        self.assertIn('-y + x', labels)

    def test_loop_without_numbers(self):
        _, ctx = context(POINTER_ONLY)
        self.assertEqual(len(make_interval_template(ctx.form)), 0)
        self.assertEqual(len(make_shape_template(ctx.form)), 1)
        self.assertEqual(len(make_shape_template(compile_and_form(COUNT_UP))), 0)

    def test_top_and_bottom_instantiation(self):
        _, ctx = context(COUNT_UP)
        template = make_interval_template(ctx.form)
        self.assertTrue(template_constraint(ctx.form, template, template.top()).is_true)
        guard, _ = head_site(ctx.form, template.rows[0], instances_of(ctx.form, template.rows[0])[0])
        self.assertIs(template_constraint(ctx.form, template, template.bottom()), bv.not_(guard))

    def test_shape_row_is_a_disjunction(self):
        _, ctx = context(POINTER_ONLY)
        template = make_shape_template(ctx.form)
        row = template.rows[0]
        guard, lb = head_site(ctx.form, row, instances_of(ctx.form, row)[0])
        universe = ctx.form.universe
        tag = universe.tag(next(o for o in universe.static_objects() if o.name == 'main::a'))
        expected = bv.implies(guard, bv.or_(bv.eq(lb, bv.addr(0, lb.width)), bv.eq(lb, bv.addr(tag, lb.width))))
        self.assertIs(template_constraint(ctx.form, template, [frozenset({0, tag})]), expected)

    def test_products_concatenate(self):
        _, ctx = context(LIST)
        form = ctx.form
        shape = make_shape_template(form)
        both = make_template(form, 'intervals', heap=True)
        self.assertEqual(len(both), len(make_interval_template(form)) + len(shape))
        empty = make_template(form, 'havoc')
        self.assertEqual((shape + empty).rows, shape.rows)


def compile_and_form(source):
    return context(source)[1].form


class JoinTest(unittest.TestCase):
    poly = TemplateRow(RowKind.POLY, 0, ('x',), (1,), 'x')
    shape = TemplateRow(RowKind.SHAPE, 0, ('p',), label='p')

    def test_polyhedral_join_is_max(self):
        self.assertEqual(row_join(self.poly, 3, 4), 4)
        self.assertEqual(row_join(self.poly, 4, 3), 4)
        self.assertEqual(row_join(self.poly, BOTTOM, -7), -7)
        self.assertEqual(row_join(self.poly, 5, 5), 5)
        self.assertIs(row_join(self.poly, TOP, 5), TOP)

    def test_shape_join_is_union(self):
        self.assertEqual(row_join(self.shape, BOTTOM, 0), frozenset({0}))
        self.assertEqual(row_join(self.shape, frozenset({0}), 3), frozenset({0, 3}))
        self.assertEqual(row_join(self.shape, frozenset({0, 3}), 3), frozenset({0, 3}))


class SaturationTest(unittest.TestCase):

    def test_bound_at_the_type_limit_is_top(self):
        form = compile_and_form(COUNT_UP)
        up, down = make_interval_template(form).rows
        self.assertIs(saturate(form, up, 2 ** 31 - 1), TOP)
        self.assertEqual(saturate(form, up, 10), 10)
        self.assertIs(saturate(form, down, 2 ** 31), TOP)
        self.assertEqual(saturate(form, down, -1), -1)
        self.assertIs(saturate(form, up, BOTTOM), BOTTOM)

    def test_shape_row_with_every_address_is_top(self):
        form = compile_and_form(POINTER_ONLY)
        row = make_shape_template(form).rows[0]
        tags = frozenset(form.universe.tags.values())
        self.assertIs(saturate(form, row, tags), TOP)
        self.assertIs(saturate(form, row, frozenset({0, max(tags) + 1})), TOP)
        self.assertEqual(saturate(form, row, frozenset({0})), frozenset({0}))

    def test_binary_search_widens_an_unbounded_row(self):
        _, ctx = context(TWO_VARIABLES)
        template = make_interval_template(ctx.form)
        value = strategy_iteration_binary_search(template, ctx)
        self.assertIs(value[template.rows.index(next(r for r in template.rows if r.label == 'y'))], TOP)


class StrategyTest(unittest.TestCase):

    def test_counting_loop_bounds(self):
        for strategy in (strategy_iteration_generic, strategy_iteration_binary_search):
            _, ctx = context(COUNT_UP)
            template = make_interval_template(ctx.form)
            value = strategy(template, ctx)
            with self.subTest(strategy=strategy.__name__):
                self.assertEqual(value.values, [10, -1])
                self.assertTrue(is_inductive(template, value, ctx))

    def test_strategies_agree(self):
        for source in (COUNT_UP, COUNT_DOWN, TWO_VARIABLES):
            _, ctx = context(source)
            template = make_interval_template(ctx.form)
            generic = strategy_iteration_generic(template, ctx)
            search = strategy_iteration_binary_search(template, ctx)
            with self.subTest(source=source):
                self.assertEqual(generic.values, search.values)

    def test_inductive_value_is_returned_after_one_check(self):
        _, ctx = context(COUNT_UP)
        template = make_interval_template(ctx.form)
        start_value = template.bottom()
        start_value.values = [10, -1]
        before = ctx.calls
        value = strategy_iteration_generic(template, ctx, start_value)
        self.assertEqual(value.values, [10, -1])
        self.assertEqual(ctx.calls, before + 1)

    def test_havoc_is_true_without_solving(self):
        _, ctx = context(COUNT_UP)
        value = infer(make_template(ctx.form, 'havoc'), ctx)
        self.assertTrue(value.is_top)
        self.assertEqual(ctx.calls, 0)

    def test_bounds_cover_every_back_edge_value(self):
        program, ctx = context(STRIDE)
        head = program.loops()[0].head
        seen = []
        for x in range(0, 20):
            run = record_run(program, [x])
            heads = sorted(pos for pos in run.snapshots if run.path[pos].index == head)
            seen.extend(run.snapshots[pos]['main::x'] for pos in heads[1:])
        for strategy in ('generic', 'binsearch'):
            template = make_interval_template(ctx.form)
            value = infer(template, ctx, strategy)
            upper, lower = value.values
            with self.subTest(strategy=strategy):
                self.assertTrue(is_inductive(template, value, ctx))
                self.assertLessEqual(max(seen), upper)
                self.assertLessEqual(-lower, min(seen))

    def test_list_pointers_stay_on_the_heap(self):
        _, ctx = context(LIST)
        universe = ctx.form.universe
        template = make_shape_template(ctx.form)
        value = infer(template, ctx, 'generic')
        self.assertTrue(is_inductive(template, value, ctx))
        for row, d in zip(template.rows, value):
            if row.label == 'l':
                self.assertTrue(d)
                self.assertTrue(all(universe.object_for_tag(t).is_heap for t in d))

    def test_dump(self):
        _, ctx = context(COUNT_UP)
        invariant = infer_invariant(make_interval_template(ctx.form), ctx)
        text = invariant_to_str(ctx.form, invariant)
        self.assertIn('x <= 10', text)
        self.assertIn('-x <= -1', text)


class SymbolicPathTest(unittest.TestCase):

    def test_one_loop_has_one_path(self):
        _, ctx = context(COUNT_UP)
        self.assertEqual(len(symbolic_paths(ctx.form)), 1)
        invariant = infer_with_symbolic_paths(make_interval_template(ctx.form), ctx)
        self.assertEqual(len(invariant.entries), 1)
        self.assertEqual(invariant.entries[0][1].values, [10, -1])

    def test_unreachable_path_is_dropped(self):
        _, ctx = context(DEAD_LOOP)
        invariant = infer_with_symbolic_paths(make_interval_template(ctx.form), ctx)
        self.assertEqual(invariant.entries, [])

    def test_cap_falls_back(self):
        _, ctx = context(COUNT_UP)
        self.assertIsNone(infer_with_symbolic_paths(make_interval_template(ctx.form), ctx, cap=0))


if __name__ == '__main__':
    unittest.main()
