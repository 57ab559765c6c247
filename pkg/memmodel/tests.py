import random
import unittest

from frontend.interpreter import UNKNOWN
from memmodel.analysis import (build_memory_model, build_object_universe, materialization_count,
                               may_points_to, must_alias)
from memmodel.models import NULL, UNKNOWN_OBJECT, ObjectKind, field_cell, site_summary, static_object
from memmodel.serializers import points_to_to_str
from midend.instrument import FREED_POINTER
from midend.interpreter import GotoInterpreter
from midend.models import InstrKind
from midend.pipeline import Checks, compile_source

FREE_SAFETY = '''
int main() {
    int *a = malloc(sizeof(int));
    *a = __VERIFIER_nondet_int();

    int **b = malloc(sizeof(int *));
    *b = a;

    free(b);
    free(*b);
}
'''

MIN = '''
typedef struct node {
    struct node *next;
    int val;
} Node;

int main() {
    Node *l = NULL;
    int min = INT_MAX;

    while (__VERIFIER_nondet_int()) {
        Node *p = malloc(sizeof(*p));
        p->val = __VERIFIER_nondet_int();
        p->next = l;
        l = p;

        if (min > p->val)
            min = p->val;
    }
    for (Node *i = l; i != NULL; i = i->next)
        assert(i->val >= min);
}
'''

BRANCHES = '''
int main() {
    int x, y;
    int *p = &x;
    int *q = p;
    if (__VERIFIER_nondet_int())
        q = &y;
    *q = 1;
    return 0;
}
'''


def uid_of(program, name):
    return next(uid for uid, info in program.variables.items() if info.name == name)


def last_index(program, kind):
    return max(i for i, ins in enumerate(program.instructions) if ins.kind == kind)


class PointsToTest(unittest.TestCase):

    def test_address_of_gives_the_static_object(self):
        program = compile_source(BRANCHES)
        facts = may_points_to(program)
        p = uid_of(program, 'p')
        x = program.variables[uid_of(program, 'x')]
        self.assertEqual(facts.targets(program.end, p), frozenset([static_object(x)]))

    def test_join_unions_both_branches(self):
        program = compile_source(BRANCHES)
        facts = may_points_to(program)
        q = uid_of(program, 'q')
        names = {t.name for t in facts.targets(program.end, q)}
        self.assertEqual(names, {uid_of(program, 'x'), uid_of(program, 'y')})

    def test_heap_cell_holds_the_stored_pointer(self):
        program = compile_source(FREE_SAFETY)
        facts = may_points_to(program)
        first, second = sorted(program.sites)
        cell = site_summary(program.sites[second]).prefix
        self.assertIn(site_summary(program.sites[first]), facts.targets(program.end, cell))

    def test_list_loop_may_target_null_and_the_site(self):
        program = compile_source(MIN)
        facts = may_points_to(program)
        heads = [loop.head for loop in program.loops()]
        site = site_summary(program.sites[min(program.sites)])
        l = uid_of(program, 'l')
        self.assertEqual(facts.targets(heads[0], l), frozenset([NULL, site]))
        self.assertIn(site, facts.targets(heads[-1], field_cell(site.prefix, 'next')))

    def test_unreachable_code_has_no_facts(self):
        program = compile_source('int main() { int *p = 0; while (1) { } *p = 1; }')
        facts = may_points_to(program)
        self.assertFalse(facts.reachable(program.end))


class MustAliasTest(unittest.TestCase):

    def test_copy_aliases(self):
        program = compile_source(BRANCHES)
        aliases = must_alias(program)
        store = next(i for i, ins in enumerate(program.instructions)
                     if ins.kind == InstrKind.GOTO and ins.cond is not None)
        self.assertTrue(aliases.aliased(store, uid_of(program, 'p'), uid_of(program, 'q')))

    def test_disagreeing_branches_break_the_class(self):
        program = compile_source(BRANCHES)
        aliases = must_alias(program)
        self.assertFalse(aliases.aliased(program.end, uid_of(program, 'p'), uid_of(program, 'q')))

    def test_append_aliases_list_and_node(self):
        program = compile_source(MIN)
        aliases = must_alias(program)
        latch = program.loops()[0].latch
        self.assertTrue(aliases.aliased(latch, uid_of(program, 'l'), uid_of(program, 'p')))


class MaterializationTest(unittest.TestCase):

    def test_single_uncopied_malloc_needs_one_object(self):
        program = compile_source('int main() { int *p = malloc(sizeof(int)); *p = 2; return 0; }')
        facts = may_points_to(program)
        self.assertEqual(materialization_count(program, min(program.sites), facts,
                                               must_alias(program, facts)), 1)

    def test_linked_pair_needs_one_object_per_site(self):
        program = compile_source(FREE_SAFETY, checks=Checks(pointer=True))
        universe = build_object_universe(program)
        self.assertEqual(set(universe.counts.values()), {1})

    def test_list_needs_at_least_two_objects(self):
        program = compile_source(MIN)
        universe = build_object_universe(program)
        self.assertGreaterEqual(universe.counts[min(program.sites)], 2)


class UniverseTest(unittest.TestCase):

    def test_no_malloc_means_no_heap_objects(self):
        program = compile_source(BRANCHES)
        universe = build_object_universe(program)
        self.assertEqual(universe.heap_objects(), [])
        self.assertEqual(universe.tag(NULL), 0)
        self.assertEqual(universe.objects[-1], UNKNOWN_OBJECT)
        self.assertEqual({o.kind for o in universe.static_objects()}, {ObjectKind.STATIC})

    def test_one_site_gets_an_abstract_and_a_concrete_object(self):
        program = compile_source('int main() { int *p = malloc(sizeof(int)); *p = 2; return 0; }')
        universe = build_object_universe(program)
        kinds = [o.kind for o in universe.heap_objects()]
        self.assertEqual(kinds, [ObjectKind.DYNAMIC, ObjectKind.CONCRETE])
        self.assertTrue(universe.has_cell('o1.co.$freed'))
        self.assertTrue(universe.has_cell('o1.1.$alloc'))
        self.assertFalse(universe.has_cell('o1.1.$freed'))

    def test_struct_objects_split_into_fields(self):
        program = compile_source(MIN)
        universe = build_object_universe(program)
        obj = universe.dynamic_objects(min(program.sites))[0]
        names = {c.name for c in universe.cells_of(obj)}
        self.assertEqual(names, {f'{obj.prefix}.next', f'{obj.prefix}.val'})
        self.assertTrue(universe.cell(f'{obj.prefix}.next').is_pointer)

    def test_address_width_covers_every_tag(self):
        program = compile_source(MIN)
        universe = build_object_universe(program)
        self.assertLess(len(universe.objects), 2 ** universe.address_width)

    def test_dump_lists_objects_and_facts(self):
        program = compile_source(FREE_SAFETY)
        text = points_to_to_str(program, build_memory_model(program))
        self.assertIn('&o1.co', text)
        self.assertIn('-> {', text)


class CheckingInterpreter(GotoInterpreter):
    """Compares the concrete pointers with the analysis before every instruction."""

    def __init__(self, program, model, inputs, test):
        super().__init__(program, inputs, step_limit=2000)
        self.model = model
        self.test = test

    def abstract(self, ref):
        if ref is None:
            return NULL
        if ref is UNKNOWN:
            return UNKNOWN_OBJECT
        if ref.kind == 'var':
            return static_object(self.program.variables[ref.key])
        return site_summary(self.program.sites[self.memory.heap[ref.key].site])

    def pointer_values(self):
        for uid, value in self.memory.store.items():
            info = self.program.variables.get(uid)
            if info is None or uid == FREED_POINTER:
                continue
            if info.type.is_pointer:
                yield uid, value
            elif isinstance(value, dict):
                for name, field_type in info.type.fields:
                    if field_type.is_pointer:
                        yield field_cell(uid, name), value[name]

    def execute(self, pc):
        values = dict(self.pointer_values())
        for cell, value in values.items():
            self.test.assertIn(self.abstract(value), self.model.points_to.targets(pc, cell),
                               f'{cell} at {pc}')
        for group in self.model.must_alias.classes(pc):
            seen = {values[c] for c in group if c in values}
            self.test.assertLessEqual(len(seen), 1, f'{sorted(group)} at {pc}')
        return super().execute(pc)


class SoundnessTest(unittest.TestCase):

    def check_runs(self, source, runs=40, checks=None):
        program = compile_source(source, checks=checks or Checks(pointer=True))
        model = build_memory_model(program)
        rng = random.Random(7)
        for _ in range(runs):
            inputs = [rng.choice([0, 1, 1, 2, -3]) for _ in range(30)]
            CheckingInterpreter(program, model, inputs, self).run()

    def test_branches(self):
        self.check_runs(BRANCHES)

    def test_free_safety(self):
        self.check_runs(FREE_SAFETY)

    def test_list(self):
        self.check_runs(MIN)


if __name__ == '__main__':
    unittest.main()
