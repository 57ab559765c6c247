import threading
import unittest

from core import settings
from domains.strategy import InferenceContext
from domains.templates import numeric_cells, variable_name
from engine.models import EngineOptions
from midend.pipeline import compile_source
from solver.models import to_signed
from termination.analysis import depth_bound, prove_nontermination, prove_termination, run_termination_analysis
from termination.models import (LoopRanking, RankingComponent, TerminationArgument, TerminationResult,
                                TerminationVerdict, VerdictCell)
from termination.nontermination import (find_arith_progression, find_singleton_recurrence,
                                        recurrence_replays)
from termination.ranking import check_components, loop_transition, synthesize_loop
from termination.serializers import component_to_str, result_lines
from unwinder.unwind import active_assumptions, start, unwind

SIGNED_CHAR_LOOP = '''
int main() {
    signed char x;
    while (1)
        x++;
    return 0;
}
'''

COUNTING = '''
int main() {
    int x = 0;
    while (x < 10)
        x++;
    return 0;
}
'''

STRIDE = '''
int main() {
    int n = __VERIFIER_nondet_int();
    int incx = __VERIFIER_nondet_int();
    int i = 0;
    while (i < n)
        i = i + incx;
    return 0;
}
'''

UNSIGNED_FOREVER = '''
int main() {
    unsigned int x = 0;
    while (1)
        x++;
    return 0;
}
'''

LOOP_FREE = '''
int main() {
    int x = __VERIFIER_nondet_int();
    assert(x == x);
    return 0;
}
'''


def unwound_of(source, depth=1):
    program = compile_source(source)
    unwound = start(program)
    for k in range(2, depth + 1):
        unwind(unwound, k)
    return program, unwound


def ranking_context(source):
    _, unwound = unwound_of(source)
    form = unwound.form
    return form, InferenceContext(form, unwound.solver, active_assumptions(unwound))


class RankingTest(unittest.TestCase):

    def test_wrapping_increment_rejects_minus_x(self):
        form, ctx = ranking_context(SIGNED_CHAR_LOOP)
        inst = form.instances[0]
        [cell] = numeric_cells(form, inst.head)
        ok, model = check_components(ctx, inst, [RankingComponent(((cell, -1),))])
        self.assertFalse(ok)
        _, before, after = loop_transition(inst)
        self.assertEqual(to_signed(model.value(before[cell], strict=False), 8), 127)
        self.assertEqual(to_signed(model.value(after[cell], strict=False), 8), -128)

    def test_wrapping_increment_has_no_ranking(self):
        form, ctx = ranking_context(SIGNED_CHAR_LOOP)
        self.assertTrue(synthesize_loop(ctx, form.instances[0]).is_top)

    def test_counting_loop_ranked_by_minus_x(self):
        result = prove_termination(compile_source(COUNTING))
        self.assertEqual(result.verdict, TerminationVerdict.TERMINATING)
        [ranking] = result.argument.rankings
        [component] = ranking.components
        [(cell, coefficient)] = [(c, v) for c, v in component.terms if v]
        self.assertLess(coefficient, 0)

    def test_loop_free_program_terminates(self):
        result = prove_termination(compile_source(LOOP_FREE))
        self.assertEqual(result.verdict, TerminationVerdict.TERMINATING)

    def test_bubble_sort_loops_are_ranked_by_their_counters(self):
        program = compile_source((settings.CORPUS_DIR / 'bubble_sort.c').read_text(), entry='bubble_sort')
        result = prove_termination(program)
        self.assertEqual(result.verdict, TerminationVerdict.TERMINATING)
        rankings = sorted(result.argument.rankings, key=lambda r: r.head)
        self.assertEqual(len(rankings), 2)
        for ranking, counter in zip(rankings, ('c', 'd')):
            self.assertTrue(ranking.components, counter)
            leading = [(variable_name(program, cell), k) for cell, k in ranking.components[0].terms if k]
            self.assertEqual([name for name, _ in leading], [counter])
            self.assertLess(leading[0][1], 0)


class NonterminationTest(unittest.TestCase):

    def test_zero_stride_recurs_after_one_unwinding(self):
        program, unwound = unwound_of(STRIDE)
        witness = find_singleton_recurrence(unwound, 1)
        self.assertIsNotNone(witness)
        self.assertEqual(witness.period, 1)
        self.assertEqual(witness.trace.inputs[1], 0)
        self.assertGreater(witness.trace.inputs[0], 0)
        self.assertEqual(witness.state['i'], '0')
        self.assertTrue(recurrence_replays(program, witness))

    def test_witness_whose_inputs_do_not_recur_is_rejected(self):
        program, unwound = unwound_of(STRIDE)
        witness = find_singleton_recurrence(unwound, 1)
        rest = witness.trace.inputs[2:]
        witness.trace.inputs = [5, 1] + rest
        self.assertFalse(recurrence_replays(program, witness))
        witness.trace.inputs = [0, 0] + rest
        self.assertFalse(recurrence_replays(program, witness))

    def test_recurrence_needs_the_current_depth(self):
        _, unwound = unwound_of(STRIDE)
        with self.assertRaises(ValueError):
            find_singleton_recurrence(unwound, 2)

    def test_unsigned_increment_is_a_progression(self):
        _, unwound = unwound_of(UNSIGNED_FOREVER)
        witness = find_arith_progression(unwound, unwound.form.instances[0])
        self.assertIsNotNone(witness)
        self.assertEqual(witness.deltas, {'x': 1})

    def test_bounded_increment_has_no_witness(self):
        for depth in (1, 2, 3):
            _, unwound = unwound_of(COUNTING, depth)
            self.assertIsNone(find_singleton_recurrence(unwound, depth))
        _, unwound = unwound_of(COUNTING)
        self.assertIsNone(find_arith_progression(unwound, unwound.form.instances[0]))

    def test_search_gives_up_at_max_depth(self):
        result = prove_nontermination(compile_source(COUNTING), max_depth=3)
        self.assertEqual(result.verdict, TerminationVerdict.UNKNOWN)

    def test_depth_bound_follows_the_widest_cell(self):
        _, unwound = unwound_of(COUNTING)
        self.assertEqual(depth_bound(unwound.form), 1 << 32)

    def test_stop_event_ends_the_search(self):
        stop = threading.Event()
        stop.set()
        result = prove_nontermination(compile_source(COUNTING), stop=stop)
        self.assertEqual(result.verdict, TerminationVerdict.UNKNOWN)


class AnalysisTest(unittest.TestCase):

    def test_both_sides_agree_on_a_terminating_loop(self):
        result = run_termination_analysis(compile_source(COUNTING))
        self.assertEqual(result.verdict, TerminationVerdict.TERMINATING)
        self.assertEqual(result.source, 'ranking')

    def test_stride_loop_is_nonterminating(self):
        program = compile_source(STRIDE)
        result = run_termination_analysis(program, termination=False)
        self.assertEqual(result.verdict, TerminationVerdict.NONTERMINATING)
        lines = result_lines(program, result)
        self.assertIn('Nonterminating program execution proved after 1 unwinding(s)', lines)
        self.assertEqual(lines[-3:], ['[main]: no', '', 'VERIFICATION FAILED'])

    def test_sequential_run_matches_parallel(self):
        program = compile_source(COUNTING)
        result = run_termination_analysis(program, EngineOptions(domain='havoc'), parallel=False)
        self.assertEqual(result.verdict, TerminationVerdict.TERMINATING)

    def test_wrapping_loop_stays_unknown_without_nontermination(self):
        result = run_termination_analysis(compile_source(SIGNED_CHAR_LOOP), nontermination=False)
        self.assertEqual(result.verdict, TerminationVerdict.UNKNOWN)


class VerdictCellTest(unittest.TestCase):

    def test_first_conclusive_result_wins(self):
        cell = VerdictCell()
        self.assertFalse(cell.offer(TerminationResult(TerminationVerdict.UNKNOWN)))
        self.assertFalse(cell.done.is_set())
        self.assertTrue(cell.offer(TerminationResult(TerminationVerdict.NONTERMINATING, source='recurrence')))
        self.assertFalse(cell.offer(TerminationResult(TerminationVerdict.TERMINATING, source='ranking')))
        self.assertTrue(cell.done.is_set())
        self.assertEqual(cell.result.source, 'recurrence')


class SerializerTest(unittest.TestCase):

    def test_component_rendering(self):
        program = compile_source(COUNTING)
        [uid] = [uid for uid, info in program.variables.items() if info.name == 'x']
        self.assertEqual(component_to_str(program, RankingComponent(((uid, -1),))), '-x')
        self.assertEqual(component_to_str(program, RankingComponent(((uid, 2),))), '2*x')

    def test_termination_block(self):
        program = compile_source(COUNTING)
        [uid] = [uid for uid, info in program.variables.items() if info.name == 'x']
        head = program.loops()[0].head
        argument = TerminationArgument([LoopRanking(head, [uid], [RankingComponent(((uid, -1),))])])
        lines = result_lines(program, TerminationResult(TerminationVerdict.TERMINATING, argument))
        self.assertEqual(lines[0], 'termination argument:')
        self.assertEqual(lines[1], '  ranking main line 4: (-x)')
        self.assertEqual(lines[-3:], ['[main]: yes', '', 'VERIFICATION SUCCESSFUL'])
