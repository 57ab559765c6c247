import random
import unittest
from unittest.mock import patch

from core.exceptions import ReplayMismatch
from engine.kiki import check_init_err, prepare, run, verify
from engine.models import EngineOptions, Mode, Status, Verdict
from engine.serializers import result_lines, trace_lines
from engine.trace import render_value, replay
from frontend import models as m
from frontend.generator import random_program
from midend.interpreter import run_goto
from midend.models import PropertyCategory
from midend.pipeline import Checks, compile_source
from unwinder.unwind import start, unwind

ASSERT_FALSE = '''
int main() {
    assert(0);
    return 0;
}
'''

ASSUME_FALSE = '''
int main() {
    int x = __VERIFIER_nondet_int();
    __CPROVER_assume(0);
    assert(x == 1);
    return 0;
}
'''

COUNTING = '''
int main() {
    int x = 0;
    while (x < 10) {
        assert(x <= 1);
        x++;
    }
    return 0;
}
'''

TOGGLE = '''
int main() {
    int x = 0;
    while (__VERIFIER_nondet_int()) {
        x = 1 - x;
        assert(x == 0 || x == 1);
    }
    return 0;
}
'''

TWO_STEP = '''
int main() {
    int x = 0, y = 0;
    while (__VERIFIER_nondet_int()) {
        x = y;
        y = 0;
        assert(x == 0);
    }
    return 0;
}
'''

BOUNDED_SUM = '''
int main() {
    int s = 0;
    for (int i = 0; i < 3; i++)
        s = s + i;
    assert(s == 3);
    return 0;
}
'''

LOCKSTEP = '''
int main() {
    int i = 0, j = 0;
    while (__VERIFIER_nondet_int()) {
        i++;
        j++;
        assert(i == j);
    }
    return 0;
}
'''


FAIL_THEN_TOGGLE = '''
int main() {
    int x = 0;
    assert(x == 1);
    while (__VERIFIER_nondet_int()) {
        x = 1 - x;
        assert(x == 0 || x == 1);
    }
    return 0;
}
'''

EQUAL_AFTER_LOOP = '''
int main() {
    int i = 0, j = 0;
    while (__VERIFIER_nondet_int()) {
        i++;
        j++;
    }
    assert(i == j);
    return 0;
}
'''

TWO_CLAIMS = '''
int main() {
    int x = __VERIFIER_nondet_int();
    assert(x != 7);
    assert(x < 5 || x >= 5);
    return 0;
}
'''

FREE_IN_LOOP = '''
int main() {
    int n = 0;
    while (n < 3) {
        int *p = malloc(sizeof(int));
        free(p);
        n = n + 1;
    }
    return 0;
}
'''

LEAK_AFTER_LOOP = '''
int main() {
    int n = 0;
    while (n < 2)
        n = n + 1;
    int *p = malloc(sizeof(int));
    return 0;
}
'''


def verdict(source, **options):
    program = compile_source(source)
    return program, verify(program, EngineOptions(**options))


class KikiTest(unittest.TestCase):

    def test_reachable_assert_false_fails_in_every_mode(self):
        for mode in Mode:
            program, result = verdict(ASSERT_FALSE, mode=mode, unwind_max=3)
            self.assertEqual(result.verdict, Verdict.FAILED, mode)
            self.assertEqual(result.depth, 1)
            replay(program, result.traces['main.1'])

    def test_initial_check_is_unsat_after_assume_false(self):
        state = prepare(compile_source(ASSUME_FALSE))
        check_init_err(state)
        self.assertEqual(state.statuses, {'main.1': Status.UNKNOWN})

    def test_initial_check_only_at_depth_one(self):
        program = compile_source(COUNTING)
        state = prepare(program, EngineOptions(mode=Mode.IBMC))
        unwind(state.unwound, 2)
        with self.assertRaises(ValueError):
            check_init_err(state)

    def test_loop_free_program_is_exact(self):
        _, result = verdict(ASSUME_FALSE, mode=Mode.IBMC, unwind_max=3)
        self.assertEqual(result.verdict, Verdict.SUCCESSFUL)
        self.assertEqual(result.depth, 1)

    def test_counting_loop_counterexample(self):
        for mode in (Mode.IBMC, Mode.KIKI):
            program, result = verdict(COUNTING, mode=mode, unwind_max=8)
            self.assertEqual(result.verdict, Verdict.FAILED)
            self.assertEqual(result.depth, 3)
            trace = result.traces['main.1']
            self.assertEqual([s.value for s in trace.steps if s.variable == 'x'], ['0', '1', '2'])
            self.assertEqual(trace.steps[-1].line, 5)
            replay(program, trace)

    def test_havoc_one_shot_is_inconclusive_where_intervals_prove(self):
        _, weak = verdict(TOGGLE, domain='havoc', one_shot=True)
        self.assertEqual(weak.verdict, Verdict.INCONCLUSIVE)
        _, strong = verdict(TOGGLE, domain='intervals', one_shot=True, strategy='generic')
        self.assertEqual(strong.verdict, Verdict.SUCCESSFUL)
        self.assertEqual(strong.depth, 1)

    def test_k_induction_needs_two_copies(self):
        _, result = verdict(TWO_STEP, mode=Mode.KINDUCTION, unwind_max=5)
        self.assertEqual(result.verdict, Verdict.SUCCESSFUL)
        self.assertEqual(result.depth, 2)
        _, one_shot = verdict(TWO_STEP, mode=Mode.KINDUCTION, one_shot=True)
        self.assertEqual(one_shot.verdict, Verdict.INCONCLUSIVE)

    def test_incremental_bmc_cannot_prove_unbounded_loops(self):
        _, result = verdict(TWO_STEP, mode=Mode.IBMC, unwind_max=4)
        self.assertEqual(result.verdict, Verdict.INCONCLUSIVE)
        self.assertEqual(result.depth, 4)

    def test_bounded_loop_is_proved_once_every_exit_is_unwound(self):
        _, result = verdict(BOUNDED_SUM, mode=Mode.IBMC, unwind_max=8)
        self.assertEqual(result.verdict, Verdict.SUCCESSFUL)
        self.assertEqual(result.depth, 4)

    def test_domain_ladder_reaches_zones(self):
        _, intervals = verdict(LOCKSTEP, domain='intervals', one_shot=True)
        self.assertEqual(intervals.verdict, Verdict.INCONCLUSIVE)
        _, ladder = verdict(LOCKSTEP, values_refine=True, one_shot=True)
        self.assertEqual(ladder.verdict, Verdict.SUCCESSFUL)

    def test_statuses_only_leave_unknown(self):
        state = prepare(compile_source(ASSERT_FALSE))
        state.settle('main.1', Status.FAILURE)
        with self.assertRaises(ValueError):
            state.settle('main.1', Status.SUCCESS)

    def test_settled_statuses_carry_over(self):
        program = compile_source(TOGGLE)
        state = prepare(program, EngineOptions(domain='havoc', one_shot=True),
                        statuses={'main.1': Status.SUCCESS})
        self.assertEqual(run(state).verdict, Verdict.SUCCESSFUL)
        self.assertEqual(state.checks, 0)

    def test_failure_decides_the_verdict(self):
        _, result = verdict(FAIL_THEN_TOGGLE, strategy='generic', unwind_max=8)
        self.assertEqual(result.verdict, Verdict.FAILED)
        self.assertEqual(result.depth, 1)
        self.assertEqual(result.statuses, {'main.1': Status.FAILURE, 'main.2': Status.UNKNOWN})
        _, every = verdict(FAIL_THEN_TOGGLE, strategy='generic', unwind_max=8, stop_on_failure=False)
        self.assertEqual(every.statuses, {'main.1': Status.FAILURE, 'main.2': Status.SUCCESS})

    def test_unchanged_invariant_ends_the_run(self):
        program = compile_source(EQUAL_AFTER_LOOP)
        state = prepare(program, EngineOptions(unwind_max=6, stable_depths=2))
        result = run(state)
        self.assertEqual(result.verdict, Verdict.INCONCLUSIVE)
        self.assertEqual(result.depth, 3)
        self.assertEqual(state.stable, 2)
        _, full = verdict(EQUAL_AFTER_LOOP, unwind_max=6)
        self.assertEqual(full.depth, 6)

    def test_ladder_moves_on_from_a_stable_domain(self):
        _, result = verdict(EQUAL_AFTER_LOOP, values_refine=True, unwind_max=40)
        self.assertEqual(result.verdict, Verdict.SUCCESSFUL)
        self.assertLessEqual(result.depth, 2)

    def test_trace_that_does_not_replay_drops_only_its_property(self):
        program = compile_source(TWO_CLAIMS)

        def reject_first(goto, trace):
            if trace.property_id == 'main.1':
                raise ReplayMismatch('no concrete run')
            return replay(goto, trace)

        with patch('engine.kiki.replay', side_effect=reject_first):
            result = verify(program, EngineOptions(mode=Mode.IBMC, unwind_max=3))
        self.assertEqual(result.statuses, {'main.1': Status.UNKNOWN, 'main.2': Status.SUCCESS})

    def test_free_in_a_bounded_loop_is_proved(self):
        program = compile_source(FREE_IN_LOOP, checks=Checks(pointer=True))
        null_check = next(p.id for p in program.properties if p.category == PropertyCategory.NULL_DEREF)
        for mode in (Mode.IBMC, Mode.KIKI):
            result = verify(program, EngineOptions(mode=mode, unwind_max=6))
            self.assertEqual(result.statuses[null_check], Status.SUCCESS, mode)
            self.assertNotIn(Status.FAILURE, result.statuses.values(), mode)

    def test_leak_is_unknown_once_loops_appear(self):
        checks = Checks(leak=True)
        program = compile_source(LEAK_AFTER_LOOP, checks=checks)
        [leak] = [p.id for p in program.properties if p.category == PropertyCategory.MEMORY_LEAK]
        result = verify(program, EngineOptions(mode=Mode.IBMC, unwind_max=6))
        self.assertEqual(result.statuses[leak], Status.UNKNOWN)
        self.assertEqual(result.verdict, Verdict.INCONCLUSIVE)
        straight = compile_source('int main() { int *p = malloc(sizeof(int)); return 0; }', checks=checks)
        self.assertEqual(verify(straight, EngineOptions(mode=Mode.IBMC, unwind_max=2)).verdict, Verdict.FAILED)


class DifferentialTest(unittest.TestCase):
    """Bounded random programs: every mode settles every property the same way."""

    def test_modes_agree_and_verdicts_hold_on_runs(self):
        for seed in range(12):
            program = compile_source(random_program(seed))
            kiki = verify(program, EngineOptions(unwind_max=5))
            ibmc = verify(program, EngineOptions(mode=Mode.IBMC, unwind_max=5))
            self.assertEqual(kiki.statuses, ibmc.statuses, seed)
            for pid, trace in kiki.traces.items():
                replay(program, trace)
            proved = [pid for pid, s in kiki.statuses.items() if s == Status.SUCCESS]
            rng = random.Random(seed)
            for _ in range(20):
                inputs = [rng.randint(-130, 130) for _ in range(16)]
                result = run_goto(program, inputs)
                for pid in proved:
                    self.assertFalse(result.violates(pid), (seed, pid, inputs))


class SerializerTest(unittest.TestCase):

    def test_result_lines(self):
        program, result = verdict(COUNTING, mode=Mode.IBMC, unwind_max=4)
        lines = result_lines(program, result)
        self.assertTrue(lines[0].startswith('[main.1] '))
        self.assertTrue(lines[0].endswith(': FAILURE'))
        self.assertEqual(lines[-1], 'VERIFICATION FAILED')

    def test_trace_layout(self):
        program, result = verdict(COUNTING, mode=Mode.IBMC, unwind_max=4)
        lines = trace_lines(program, result.traces['main.1'])
        self.assertTrue(lines[0].startswith('Counterexample for [main.1]'))
        self.assertIn('file <input> line 3 function main', lines)
        self.assertIn('  x=2', lines)
        self.assertIn('Violated property:', lines)
        self.assertIn('  file <input> line 5 function main', lines)

    def test_success_banner(self):
        program, result = verdict(TOGGLE, domain='intervals', one_shot=True, strategy='generic')
        self.assertEqual(result_lines(program, result)[-1], 'VERIFICATION SUCCESSFUL')

    def test_pointer_values_carry_one_ampersand(self):
        program = compile_source('int main() { int a; int *p = &a; assert(p != 0); return 0; }')
        form = start(program).form
        universe = form.universe
        pointer = m.PointerType(m.INT)
        self.assertEqual(render_value(form, 0, pointer), 'NULL')
        self.assertEqual(render_value(form, universe.tag(universe.unknown), pointer), '&o?')
        for obj in universe.static_objects():
            shown = render_value(form, universe.tag(obj), pointer)
            self.assertTrue(shown.startswith('&') and not shown.startswith('&&'), shown)
