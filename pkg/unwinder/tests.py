import unittest

from frontend.generator import random_program
from midend.pipeline import compile_source
from solver import models as bv
from solver.instance import SolveResult, SolverInstance
from ssa.builder import build_ssa
from unwinder.unwind import active_assumptions, start, unwind

SINGLE = '''
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
    for (int i = 0; i < __VERIFIER_nondet_int(); i++)
        for (int j = 0; j < 2; j++)
            s = s + 1;
    assert(s != 5);
    return 0;
}
'''


def violations(form, pid):
    return bv.any_of(a.violation for a in form.assertions_for(pid))


def fresh_verdict(program, pid, depth):
    form = build_ssa(program, depth=depth)
    with SolverInstance() as solver:
        for term in form.all_constraints():
            solver.add(term)
        outcome, _ = solver.check(violations(form, pid))
    return outcome


class UnwindTest(unittest.TestCase):

    def test_single_loop_gains_one_copy(self):
        unwound = start(compile_source(SINGLE))
        inst = unwound.form.instances[0]
        unwind(unwound, 2)
        self.assertEqual(len(unwound.form.instances), 1)
        self.assertEqual([c.number for c in inst.copies], [1, 2])

    def test_nested_loops_copy_the_inner_loop_per_outer_copy(self):
        unwound = start(compile_source(NESTED))
        unwind(unwound, 2)
        outer = unwound.form.top_instances()[0]
        self.assertEqual(len(outer.copies), 2)
        for copy in outer.copies:
            self.assertEqual(len(copy.children), 1)
            self.assertEqual(len(copy.children[0].copies), 2)

    def test_growth_is_linear_for_one_loop(self):
        unwound = start(compile_source(SINGLE))
        sizes = [len(unwind(unwound, k).constraints) for k in range(2, 6)]
        self.assertEqual(len(set(sizes)), 1)

    def test_depth_must_step_by_one(self):
        unwound = start(compile_source(SINGLE))
        with self.assertRaises(ValueError):
            unwind(unwound, 3)

    def test_merge_literals_are_retired(self):
        unwound = start(compile_source(SINGLE))
        first = active_assumptions(unwound)
        self.assertEqual(len(first), 1)
        self.assertGreater(first[0], 0)
        delta = unwind(unwound, 2)
        self.assertEqual(delta.retired, first)
        assumptions = active_assumptions(unwound)
        self.assertIn(-first[0], assumptions)
        self.assertEqual(sum(1 for lit in assumptions if lit > 0), 1)
        with self.assertRaises(ValueError):
            active_assumptions(unwound, 1)

    def test_renamings_record_new_symbols(self):
        unwound = start(compile_source(SINGLE))
        unwind(unwound, 2)
        self.assertTrue(unwound.renamings[2])
        self.assertTrue(all(name.endswith('~2') for name in unwound.renamings[2]))


class IncrementalDifferentialTest(unittest.TestCase):

    def assert_same_verdicts(self, program, depths):
        unwound = start(program)
        pids = [p.id for p in program.properties]
        for depth in depths:
            if depth > unwound.depth:
                unwind(unwound, depth)
            for pid in pids:
                outcome, _ = unwound.solver.check(violations(unwound.form, pid),
                                                  active_assumptions(unwound))
                with self.subTest(depth=depth, pid=pid):
                    self.assertEqual(outcome, fresh_verdict(program, pid, depth))
        unwound.solver.close()

    def test_fixed_programs(self):
        for source in (SINGLE, NESTED):
            self.assert_same_verdicts(compile_source(source), [1, 2, 3, 4])

    def test_random_programs(self):
        for seed in range(25):
            program = compile_source(random_program(seed))
            if program.properties:
                self.assert_same_verdicts(program, [1, 2, 3])


if __name__ == '__main__':
    unittest.main()
