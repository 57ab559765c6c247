import unittest

from core.exceptions import MalformedSsa
from frontend.generator import random_program
from midend.models import InstrKind
from midend.pipeline import compile_source
from solver import models as bv
from solver.instance import SolveResult, SolverInstance
from ssa.builder import build_ssa
from ssa.check import check_well_formed, concrete_check, record_run
from ssa.models import SymbolKind
from ssa.serializers import ssa_to_str

COUNT_TO_TEN = '''
int main() {
    int x = 0;
    while (x < 10)
        x++;
    assert(x == 10);
    return 0;
}
'''

NESTED = '''
int main() {
    int s = 0;
    for (int i = 0; i < 3; i++)
        for (int j = 0; j < 2; j++)
            s = s + 1;
    assert(s == 6);
    return 0;
}
'''

ONE_SOLUTION = '''
int main() {
    char x = __VERIFIER_nondet_char();
    char y = x * 3 + 1;
    assert(y != 7);
    return 0;
}
'''

LIST = '''
struct node { struct node *next; int val; };

int main() {
    struct node *l = 0;
    while (__VERIFIER_nondet_int()) {
        struct node *p = malloc(sizeof(struct node));
        p->val = 1;
        p->next = l;
        l = p;
    }
    return 0;
}
'''


def violation_sat(form, assertion, *extra):
    with SolverInstance() as solver:
        for term in form.all_constraints():
            solver.add(term)
        outcome, _ = solver.solve()
        if outcome != SolveResult.SAT:
            return False
        outcome, _ = solver.check(bv.and_(assertion.violation, *extra))
    return outcome == SolveResult.SAT


class LoopEncodingTest(unittest.TestCase):

    def test_loop_head_gets_select_and_loop_back_values(self):
        program = compile_source(COUNT_TO_TEN)
        form = build_ssa(program)
        self.assertEqual(len(form.instances), 1)
        inst = form.instances[0]
        self.assertIn('main::x', inst.loopback)
        self.assertEqual(form.symbols[inst.loop_select.payload].kind, SymbolKind.LOOP_SELECT)
        self.assertEqual(form.symbols[inst.phi['main::x'].payload].kind, SymbolKind.PHI)
        self.assertEqual(len(inst.copies), 1)

    def test_free_loop_back_over_approximates(self):
        form = build_ssa(compile_source(COUNT_TO_TEN))
        self.assertTrue(violation_sat(form, form.assertions[0]))

    def test_actual_run_fits_every_depth(self):
        program = compile_source(COUNT_TO_TEN)
        form = build_ssa(program)
        run = record_run(program)
        for depth in (1, 2, 3, 11, 12):
            while form.depth < depth:
                form.extend()
            with self.subTest(depth=depth):
                self.assertTrue(concrete_check(form, run))

    def test_extend_unwinds_every_instance(self):
        form = build_ssa(compile_source(NESTED))
        self.assertEqual(len(form.instances), 2)
        for expected in (3, 4):
            form.extend()
            self.assertEqual(len(form.instances), expected)
            self.assertTrue(all(len(inst.copies) == form.depth for inst in form.instances))
        check_well_formed(form)

    def test_extend_grows_the_exit_merge(self):
        form = build_ssa(compile_source(COUNT_TO_TEN))
        before = {key: record.version for key, record in form.merges.items()}
        grown = form.extend()
        self.assertTrue(grown)
        for record in grown:
            self.assertGreater(record.version, before[record.key])
        check_well_formed(form)


class StraightLineTest(unittest.TestCase):

    def test_encoding_is_exact_on_every_char(self):
        program = compile_source(ONE_SOLUTION)
        form = build_ssa(program)
        pid = program.properties[0].id
        assertion = form.assertions_for(pid)[0]
        x = form.inputs[0].symbols[0][0]
        for v in range(-128, 128):
            run = record_run(program, [v])
            with self.subTest(v=v):
                self.assertTrue(concrete_check(form, run))
                pinned = bv.eq(x, bv.const(v, 8))
                self.assertEqual(violation_sat(form, assertion, pinned), run.result.violates(pid))

    def test_only_two_violates(self):
        program = compile_source(ONE_SOLUTION)
        form = build_ssa(program)
        x = form.inputs[0].symbols[0][0]
        with SolverInstance() as solver:
            for term in form.all_constraints():
                solver.add(term)
            outcome, model = solver.check(form.assertions[0].violation)
            self.assertEqual(outcome, SolveResult.SAT)
            self.assertEqual(model.value(x), 2)
            outcome, _ = solver.check(bv.and_(form.assertions[0].violation, bv.ne(x, bv.const(2, 8))))
            self.assertEqual(outcome, SolveResult.UNSAT)


class MemoryEncodingTest(unittest.TestCase):

    def test_read_after_write_reuses_the_stored_value(self):
        source = '''
        int main() {
            int x;
            int v = __VERIFIER_nondet_int();
            int *p = &x;
            *p = v;
            int y = *p;
            assert(y == v);
            return 0;
        }
        '''
        form = build_ssa(compile_source(source))
        derefs = [s for s in form.symbols.values() if s.kind == SymbolKind.DEREF]
        self.assertEqual(len(derefs), 1)
        self.assertFalse(violation_sat(form, form.assertions[0]))

    def test_malloc_selects_among_site_objects(self):
        program = compile_source(LIST)
        form = build_ssa(program)
        index = next(i for i, ins in enumerate(program.instructions) if ins.kind == InstrKind.MALLOC)
        site = program.instructions[index].site
        selectors = [s.name for s in form.symbols.values() if s.kind == SymbolKind.OBJECT_SELECT]
        self.assertIn(f'os{site}.co#{index}~1', selectors)
        self.assertEqual(len(selectors), len(form.universe.dynamic_objects(site)))

    def test_heap_programs_fit_their_runs(self):
        for seed in range(20):
            program = compile_source(random_program(seed, heap=True))
            form = build_ssa(program)
            for trial in range(3):
                run = record_run(program, [(seed + 3 * trial + i) % 11 - 5 for i in range(12)])
                with self.subTest(seed=seed, trial=trial):
                    self.assertTrue(concrete_check(form, run))


class ConcreteCheckTest(unittest.TestCase):

    def test_random_programs_fit_their_runs(self):
        for seed in range(40):
            program = compile_source(random_program(seed))
            form = build_ssa(program)
            runs = [record_run(program, [(seed * 7 + 5 * trial + i) % 13 - 6 for i in range(12)])
                    for trial in range(3)]
            for depth in (1, 2):
                while form.depth < depth:
                    form.extend()
                for run in runs:
                    if run.result.status == 'step_limit':
                        continue
                    with self.subTest(seed=seed, depth=depth):
                        self.assertTrue(concrete_check(form, run))

    def test_wrong_outcome_is_rejected(self):
        program = compile_source(ONE_SOLUTION)
        form = build_ssa(program)
        run = record_run(program, [2])
        self.assertTrue(run.result.violates(program.properties[0].id))
        step = next(s for s in run.path if program.instructions[s.index].kind == InstrKind.ASSERT)
        step.value = True
        self.assertFalse(concrete_check(form, run))


class WellFormedTest(unittest.TestCase):

    def setUp(self):
        self.form = build_ssa(compile_source(COUNT_TO_TEN))
        self.builder = self.form.builder

    def test_symbol_declared_twice(self):
        existing = self.form.instances[0].loop_select
        with self.assertRaises(MalformedSsa):
            self.builder.register(existing, SymbolKind.LOOP_SELECT, 0)

    def test_undeclared_symbol(self):
        self.form.constraints.append(bv.symbol('ghost', bv.BOOL))
        with self.assertRaises(MalformedSsa):
            check_well_formed(self.form)

    def test_cyclic_definition(self):
        a = self.builder.free('a', bv.BOOL, SymbolKind.PLAIN, 0)
        b = self.builder.free('b', bv.BOOL, SymbolKind.PLAIN, 0)
        self.form.definitions['a'] = bv.not_(b)
        self.form.definitions['b'] = a
        with self.assertRaises(MalformedSsa):
            check_well_formed(self.form)


class SerializerTest(unittest.TestCase):

    def test_dump_lists_loop_select_and_assertion(self):
        program = compile_source(COUNT_TO_TEN)
        form = build_ssa(program)
        text = ssa_to_str(form)
        self.assertTrue(text.startswith('unwinding depth 1\n'))
        self.assertIn(form.instances[0].loop_select.payload, text)
        self.assertIn(f'assert [{program.properties[0].id}]', text)
        self.assertEqual(text, ssa_to_str(form))


if __name__ == '__main__':
    unittest.main()
