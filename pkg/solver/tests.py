import itertools
import random
import tempfile
import unittest

from solver import models as bv
from solver.evaluate import evaluate
from solver.instance import SolveResult, SolverInstance


BINARY_OPS = {
    'add': bv.add, 'sub': bv.sub, 'mul': bv.mul,
    'ult': bv.ult, 'ule': bv.ule, 'slt': bv.slt, 'sle': bv.sle, 'eq': bv.eq,
}


class TermConstructionTest(unittest.TestCase):

    def test_interning_gives_identity(self):
        x = bv.symbol('x', bv.bv_sort(8))
        self.assertIs(bv.add(x, bv.const(1, 8)), bv.add(x, bv.const(1, 8)))

    def test_ite_with_equal_branches_is_the_branch(self):
        c = bv.symbol('c', bv.BOOL)
        a = bv.symbol('a', bv.bv_sort(8))
        self.assertIs(bv.ite(c, a, a), a)

    def test_constant_folding_wraps(self):
        self.assertEqual(bv.add(bv.const(255, 8), bv.const(1, 8)).payload, 0)
        self.assertTrue(bv.slt(bv.const(0x80, 8), bv.const(0, 8)).is_true)

    def test_true_and_c_is_c(self):
        c = bv.symbol('c', bv.BOOL)
        self.assertIs(bv.and_(bv.true(), c), c)


class BitBlastTest(unittest.TestCase):

    def setUp(self):
        self.solver = SolverInstance()

    def tearDown(self):
        self.solver.close()

    def test_eight_bit_add_wraps_around(self):
        x = bv.symbol('x', bv.bv_sort(8))
        y = bv.symbol('y', bv.bv_sort(8))
        s = bv.add(x, y)
        result, model = self.solver.check(bv.and_(bv.eq(x, bv.const(255, 8)), bv.eq(y, bv.const(1, 8)),
                                                  bv.eq(s, s)))
        self.assertEqual(result, SolveResult.SAT)
        self.assertEqual(model.value(s), 0)

    def test_ite_of_same_term_shares_literals(self):
        c = bv.symbol('c', bv.BOOL)
        a = bv.symbol('a', bv.bv_sort(4))
        self.assertEqual(self.solver.bits(bv.ite(c, a, a)), self.solver.bits(a))

    def test_select_after_store_is_valid(self):
        arr = bv.symbol('A', bv.array_sort(16, 4))
        i = bv.symbol('i', bv.bv_sort(4))
        v = bv.symbol('v', bv.bv_sort(4))
        claim = bv.eq(bv.select(bv.store(arr, i, v), i), v)
        self.assertTrue(claim.is_true or self.solver.check(bv.not_(claim))[0] == SolveResult.UNSAT)
        # the rewrite above may fold the claim; check a non-folding variant too
        j = bv.symbol('j', bv.bv_sort(4))
        claim = bv.implies(bv.eq(i, j), bv.eq(bv.select(bv.store(arr, i, v), j), v))
        self.assertEqual(self.solver.check(bv.not_(claim))[0], SolveResult.UNSAT)

    def test_operators_match_evaluator_exhaustively_at_width_four(self):
        width = 4
        x = bv.symbol('ex', bv.bv_sort(width))
        y = bv.symbol('ey', bv.bv_sort(width))
        for name, build in BINARY_OPS.items():
            term = build(x, y)
            self.solver.blaster.blast(term)
            for a, b in itertools.product(range(1 << width), repeat=2):
                env = {x: a, y: b}
                expected = evaluate(term, env)
                fixed = bv.and_(bv.eq(x, bv.const(a, width)), bv.eq(y, bv.const(b, width)))
                result, model = self.solver.check(fixed)
                self.assertEqual(result, SolveResult.SAT)
                self.assertEqual(model.value(term), expected, f'{name}({a}, {b})')

    def test_unary_and_width_operators_at_width_six(self):
        width = 6
        x = bv.symbol('ux', bv.bv_sort(width))
        terms = [bv.neg(x), bv.zext(x, 9), bv.sext(x, 9), bv.trunc(x, 3)]
        for term in terms:
            self.solver.blaster.blast(term)
        for a in range(1 << width):
            result, model = self.solver.check(bv.eq(x, bv.const(a, width)))
            self.assertEqual(result, SolveResult.SAT)
            for term in terms:
                self.assertEqual(model.value(term), evaluate(term, {x: a}))

    def test_random_width_six_pairs(self):
        rng = random.Random(6)
        width = 6
        x = bv.symbol('rx', bv.bv_sort(width))
        y = bv.symbol('ry', bv.bv_sort(width))
        for _ in range(200):
            name = rng.choice(sorted(BINARY_OPS))
            a, b = rng.randrange(64), rng.randrange(64)
            term = BINARY_OPS[name](x, y)
            self.solver.blaster.blast(term)
            fixed = bv.and_(bv.eq(x, bv.const(a, width)), bv.eq(y, bv.const(b, width)))
            result, model = self.solver.check(fixed)
            self.assertEqual(model.value(term), evaluate(term, {x: a, y: b}))


class AssumptionTest(unittest.TestCase):

    def setUp(self):
        self.solver = SolverInstance()
        self.a = bv.symbol('a', bv.BOOL)
        self.b = bv.symbol('b', bv.BOOL)

    def tearDown(self):
        self.solver.close()

    def test_assume_not_a_forces_b(self):
        self.solver.add(bv.or_(self.a, self.b))
        result, model = self.solver.solve([-self.solver.literal(self.a)])
        self.assertEqual(result, SolveResult.SAT)
        self.assertTrue(model.value(self.b))

    def test_contradictory_assumptions(self):
        lit = self.solver.literal(self.a)
        self.assertEqual(self.solver.solve([lit, -lit])[0], SolveResult.UNSAT)

    def test_counting_example_with_error_literals(self):
        # x0 = 0; x1 = x0 + 1; x2 = x1 + 1; property x <= 1
        s = self.solver
        w = 8
        xs = [bv.symbol(f'x{i}', bv.bv_sort(w)) for i in range(3)]
        s.add(bv.eq(xs[0], bv.const(0, w)))
        alpha0 = s.new_assumption()
        s.add_under(alpha0, bv.or_(*[bv.ugt(x, bv.const(1, w)) for x in xs[:1]]))
        self.assertEqual(s.solve([alpha0])[0], SolveResult.UNSAT)
        for i in (1, 2):
            s.add(bv.eq(xs[i], bv.add(xs[i - 1], bv.const(1, w))))
        alpha1 = s.new_assumption()
        s.add_under(alpha1, bv.or_(*[bv.ugt(x, bv.const(1, w)) for x in xs]))
        result, model = s.solve([-alpha0, alpha1])
        self.assertEqual(result, SolveResult.SAT)
        self.assertEqual(model.value(xs[2]), 2)

    def test_retired_literal_stays_false(self):
        act = self.solver.new_assumption()
        self.solver.add_under(act, self.a)
        self.solver.add_under(act, bv.not_(self.a))
        self.solver.retire(act)
        self.assertEqual(self.solver.solve([-act])[0], SolveResult.SAT)
        self.assertEqual(self.solver.solve()[0], SolveResult.SAT)

    def test_assuming_a_retired_literal_is_an_error(self):
        act = self.solver.new_assumption()
        self.solver.add_under(act, self.a)
        self.solver.retire(act)
        calls = self.solver.calls
        with self.assertRaises(ValueError):
            self.solver.solve([act])
        self.assertEqual(self.solver.calls, calls)

    def test_restart_keeps_answers(self):
        solver = SolverInstance(restart_every=2)
        try:
            x = bv.symbol('rs', bv.bv_sort(4))
            solver.add(bv.ult(x, bv.const(3, 4)))
            for _ in range(5):
                self.assertEqual(solver.check(bv.eq(x, bv.const(5, 4)))[0], SolveResult.UNSAT)
                self.assertEqual(solver.check(bv.eq(x, bv.const(2, 4)))[0], SolveResult.SAT)
        finally:
            solver.close()

    def test_dimacs_dump_lists_every_clause(self):
        self.solver.add(bv.or_(self.a, self.b))
        with tempfile.NamedTemporaryFile('r', suffix='.cnf') as handle:
            self.solver.dump_dimacs(handle.name)
            header = handle.readline()
        self.assertTrue(header.startswith('p cnf'))


class ModelTest(unittest.TestCase):

    def test_decodes_small_constant(self):
        with SolverInstance() as solver:
            x = bv.symbol('m', bv.bv_sort(8))
            result, model = solver.check(bv.eq(x, bv.const(3, 8)))
            self.assertEqual(model.value(x), 3)

    def test_model_satisfies_all_constraints(self):
        rng = random.Random(1)
        with SolverInstance() as solver:
            xs = [bv.symbol(f'v{i}', bv.bv_sort(5)) for i in range(4)]
            constraints = []
            for _ in range(6):
                a, b = rng.sample(xs, 2)
                constraints.append(bv.ule(bv.add(a, b), bv.const(rng.randrange(32), 5)))
            for c in constraints:
                solver.add(c)
            result, model = solver.solve()
            if result == SolveResult.SAT:
                env = {x: model.value(x) for x in xs}
                for c in constraints:
                    self.assertTrue(evaluate(c, env))

    def test_unsat_answers_agree_with_enumeration(self):
        rng = random.Random(2)
        width = 3
        xs = [bv.symbol(f'e{i}', bv.bv_sort(width)) for i in range(2)]
        for _ in range(25):
            formula = bv.and_(*[
                bv.ult(bv.add(rng.choice(xs), bv.const(rng.randrange(8), width)),
                       bv.mul(rng.choice(xs), bv.const(rng.randrange(8), width)))
                for _ in range(3)])
            with SolverInstance() as solver:
                result, _ = solver.check(formula)
            brute = any(evaluate(formula, dict(zip(xs, vals)))
                        for vals in itertools.product(range(8), repeat=2))
            self.assertEqual(result == SolveResult.SAT, brute)

    def test_incremental_answers_match_fresh_solves(self):
        rng = random.Random(3)
        width = 4
        xs = [bv.symbol(f'i{i}', bv.bv_sort(width)) for i in range(3)]
        added = []
        with SolverInstance() as incremental:
            for step in range(12):
                c = bv.ule(rng.choice(xs), bv.add(rng.choice(xs), bv.const(rng.randrange(16), width)))
                incremental.add(c)
                added.append(c)
                query = bv.eq(rng.choice(xs), bv.const(rng.randrange(16), width))
                inc_result = incremental.check(query)[0]
                with SolverInstance() as fresh:
                    for old in added:
                        fresh.add(old)
                    fresh_result = fresh.check(query)[0]
                self.assertEqual(inc_result, fresh_result, f'step {step}')
