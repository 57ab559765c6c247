import random
import unittest

from core.exceptions import RecursionDetected
from frontend.generator import random_program
from frontend.parser import parse
from frontend.printer import expr_to_str
from frontend.typecheck import typecheck
from midend.inline import inline_calls
from midend.interpreter import run_goto
from midend.lower import lower
from midend.models import InstrKind, PropertyCategory
from midend.pipeline import Checks, build_goto, compile_source
from midend.serializers import goto_to_str, instr_to_str, properties_to_str

BUBBLE_SORT = '''
void bubble_sort(int *array, int size)
{
  %s
  int c, d, swap;

  for (c = 0; c < size - 1; c++)
  {
    for (d = 0; d < size - c - 1; d++)
    {
      if (array[d] > array[d + 1])
      {
        swap       = array[d];
        array[d]   = array[d + 1];
        array[d + 1] = swap;
      }
    }
  }
}
'''

MATRIX = '''
#define SIZE 16

int main() {
    int **matrix;
    unsigned m = __VERIFIER_nondet_int();
    unsigned n = __VERIFIER_nondet_int();
    __CPROVER_assume(m <= SIZE && n <= SIZE && m * n <= SIZE);

    int array[SIZE];
    for (int row = 0; row < m; ++row) {
        for (int col = 0; col < n; ++col) {
            int index = row * %s + col;
            array[index] = matrix[row][col];
        }
    }
    return 0;
}
'''

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


def lowered(source, entry='main'):
    return lower(typecheck(parse(source), entry))


def kinds(program):
    return [ins.kind for ins in program.instructions]


class LowerTest(unittest.TestCase):

    def test_while_loop_shape(self):
        program = lowered('int main() { int x = 0; while (x < 10) { x = x + 1; } return x; }')
        loops = program.loops()
        self.assertEqual(len(loops), 1)
        head, latch = loops[0].head, loops[0].latch
        instructions = program.instructions
        self.assertEqual(instructions[head].kind, InstrKind.SKIP)
        exit_jump = instructions[head + 1]
        self.assertEqual(exit_jump.kind, InstrKind.GOTO)
        self.assertGreater(exit_jump.target, latch)
        self.assertEqual(instructions[latch].target, head)

    def test_diamond_joins_at_one_successor(self):
        program = lowered('int main() { int a, c = __VERIFIER_nondet_int(); '
                          'if (c) a = 1; else a = 2; }')
        jumps = [i for i, ins in enumerate(program.instructions) if ins.kind == InstrKind.GOTO]
        self.assertEqual(len(jumps), 2)
        conditional, over_else = (program.instructions[i] for i in jumps)
        self.assertIsNotNone(conditional.cond)
        self.assertIsNone(over_else.cond)
        self.assertGreater(over_else.target, conditional.target)

    def test_single_end_is_last(self):
        program = lowered('int main() { return 0; }')
        self.assertEqual(kinds(program).count(InstrKind.END), 1)
        self.assertEqual(program.instructions[-1].kind, InstrKind.END)

    def test_jump_targets_are_valid(self):
        for seed in range(30):
            program = build_goto(typecheck(parse(random_program(seed))))
            for ins in program.instructions:
                if ins.kind == InstrKind.GOTO:
                    self.assertTrue(0 <= ins.target < len(program.instructions))

    def test_globals_are_initialised_before_the_entry(self):
        program = lowered('int g = 5; int main() { return g; }')
        first_assign = next(ins for ins in program.instructions if ins.kind == InstrKind.ASSIGN)
        self.assertEqual(first_assign.lhs.name, 'g')

    def test_instruction_graph_follows_jumps(self):
        program = lowered('int main() { int x = 0; while (x < 10) { x = x + 1; } return x; }')
        graph = program.cfg()
        self.assertEqual(graph.number_of_nodes(), len(program.instructions))
        head, latch = program.loops()[0].head, program.loops()[0].latch
        self.assertIn(head, set(graph.successors(latch)))
        self.assertEqual(set(graph.successors(head + 1)), set(program.successors(head + 1)))
        self.assertEqual(len(program.successors(head + 1)), 2)


class InlineTest(unittest.TestCase):

    SOURCE = '''
    int abs(int v) { int r = v; if (v < 0) r = -v; return r; }
    int main() { int x = __VERIFIER_nondet_int(); int y = abs(x); return y; }
    '''

    def test_calls_are_spliced_with_suffixed_locals(self):
        program = inline_calls(lowered(self.SOURCE))
        self.assertNotIn(InstrKind.CALL, kinds(program))
        names = {ins.lhs.uid for ins in program.instructions if ins.kind == InstrKind.DECL}
        self.assertTrue(any(uid.startswith('abs::r@') for uid in names))

    def test_inlining_twice_changes_nothing(self):
        program = inline_calls(lowered(self.SOURCE))
        before = [instr_to_str(ins) for ins in program.instructions]
        inline_calls(program)
        self.assertEqual([instr_to_str(ins) for ins in program.instructions], before)

    def test_recursion(self):
        with self.assertRaises(RecursionDetected):
            inline_calls(lowered('int f(int n) { return n ? f(n - 1) : 0; } int main() { return f(3); }'))

    def test_mutual_recursion_names_the_chain(self):
        source = ('int g(int n); int f(int n) { return n ? g(n - 1) : 0; } '
                  'int g(int n) { return f(n); } int main() { return f(3); }')
        with self.assertRaises(RecursionDetected) as caught:
            inline_calls(lowered(source))
        self.assertIn('f -> g -> f', str(caught.exception))


class OverflowTest(unittest.TestCase):

    def test_unguarded_size_minus_one_overflows(self):
        program = compile_source(BUBBLE_SORT % '', 'bubble_sort', Checks(overflow=True))
        first = program.properties[0]
        self.assertEqual(first.id, 'bubble_sort.1')
        self.assertEqual(first.description, 'arithmetic overflow on signed - in size - 1')
        run = run_goto(program, [-2 ** 31])
        self.assertTrue(run.violates('bubble_sort.1'))

    def test_assume_keeps_the_run_away(self):
        program = compile_source(BUBBLE_SORT % '__CPROVER_assume(size >= 0);', 'bubble_sort',
                                 Checks(overflow=True))
        run = run_goto(program, [-2 ** 31])
        self.assertEqual(run.status, 'assume_failed')
        self.assertEqual(run.failed(), [])

    def test_unsigned_arithmetic_is_not_checked(self):
        program = compile_source('int main() { unsigned x = __VERIFIER_nondet_uint(); x = x + 1; '
                                 'return 0; }', checks=Checks(overflow=True))
        self.assertEqual(program.properties, [])

    def test_constant_operands_fold_to_true(self):
        program = compile_source('int main() { int x = 1 + 2; return x; }', checks=Checks(overflow=True))
        check = program.instructions[program.properties[0].location]
        self.assertEqual(check.cond.value, 1)


class BoundsTest(unittest.TestCase):

    def test_wrong_index_fails_upper_bound(self):
        program = compile_source(MATRIX % 'm', checks=Checks(bounds=True))
        upper = next(p for p in program.properties if 'upper' in p.description)
        self.assertEqual(upper.description, "array `array' upper bound in array[index]")
        self.assertEqual(upper.id, 'main.2')
        run = run_goto(program, [16, 1])
        self.assertTrue(run.violates('main.2'))

    def test_fixed_index_holds_on_random_inputs(self):
        program = compile_source(MATRIX % 'n', checks=Checks(bounds=True))
        rng = random.Random(3)
        for _ in range(200):
            run = run_goto(program, [rng.randint(0, 17), rng.randint(0, 17)])
            self.assertEqual(run.failed(), [])

    def test_constant_index_in_range_is_discharged(self):
        program = compile_source('int main() { int a[1]; a[0] = 3; return a[0]; }', checks=Checks(bounds=True))
        self.assertTrue(all(program.instructions[p.location].cond.value == 1 for p in program.properties))


class PointerCheckTest(unittest.TestCase):

    def test_free_safety_fails_on_the_freed_deref(self):
        program = compile_source(FREE_SAFETY, checks=Checks(pointer=True))
        freed = [p for p in program.properties if p.category == PropertyCategory.FREED_DEREF]
        target = [p for p in freed if p.description.endswith('in *b')][-1]
        self.assertEqual(target.description, 'dereference failure: deallocated dynamic object in *b')
        run = run_goto(program, [4])
        self.assertTrue(run.violates(target.id))

    def test_local_address_is_safe(self):
        program = compile_source('int main() { int x; int *p = &x; *p = 1; return x; }',
                                 checks=Checks(pointer=True))
        self.assertEqual(run_goto(program, [0]).failed(), [])

    def test_double_free(self):
        program = compile_source('int main() { int *p = malloc(sizeof(int)); free(p); free(p); return 0; }',
                                 checks=Checks(pointer=True))
        double = [p.id for p in program.properties if p.category == PropertyCategory.DOUBLE_FREE]
        self.assertEqual(run_goto(program).failed(), [double[1]])

    def test_one_free_gives_one_tracker_update(self):
        program = compile_source('int main() { int *p = malloc(sizeof(int)); free(p); return 0; }',
                                 checks=Checks(pointer=True))
        updates = [ins for ins in program.instructions
                   if ins.kind == InstrKind.ASSIGN and ins.lhs.uid == '__fr']
        self.assertEqual(len(updates), 1)

    def test_leak_check(self):
        checks = Checks(pointer=True, leak=True)
        freed = compile_source('int main() { int *p = malloc(sizeof(int)); free(p); return 0; }',
                               checks=checks)
        leaked = compile_source('int main() { int *p = malloc(sizeof(int)); return 0; }', checks=checks)
        leak_id = next(p.id for p in leaked.properties if p.category == PropertyCategory.MEMORY_LEAK)
        self.assertEqual(run_goto(freed).failed(), [])
        self.assertEqual(run_goto(leaked).failed(), [leak_id])


class SimplifyTest(unittest.TestCase):

    def test_branch_on_known_constant_is_folded(self):
        program = compile_source('int main() { int x = 2; if (x == 2) x = 3; return x; }')
        self.assertFalse(any(ins.kind == InstrKind.GOTO and ins.cond is not None
                             for ins in program.instructions))

    def test_true_conjunct_disappears(self):
        program = compile_source('int main() { int c = __VERIFIER_nondet_int(); assert(1 && c); return 0; }')
        check = program.instructions[program.properties[0].location]
        self.assertIn('c', expr_to_str(check.cond))
        self.assertNotIn('&&', expr_to_str(check.cond))

    def test_simplify_keeps_run_outcomes(self):
        checks = Checks(overflow=True, bounds=True)
        for seed in range(200):
            source = random_program(seed)
            plain = compile_source(source, checks=checks, simplified=False)
            folded = compile_source(source, checks=checks)
            inputs = [(seed * 5 + i) % 9 - 4 for i in range(8)]
            with self.subTest(seed=seed):
                self.assertEqual(run_goto(plain, inputs).assertions, run_goto(folded, inputs).assertions)


class SerializerTest(unittest.TestCase):

    def test_listing_marks_loop_heads(self):
        program = compile_source('int main() { int x = 0; while (x < 3) x = x + 1; return 0; }')
        text = goto_to_str(program)
        head = program.loops()[0].head
        self.assertIn(f'{head}* SKIP', text)
        self.assertTrue(text.rstrip().endswith(f'END  (line {program.instructions[-1].loc.line})'))

    def test_property_listing(self):
        program = compile_source(MATRIX % 'm', checks=Checks(bounds=True))
        text = properties_to_str(program)
        self.assertIn("[main.2] array `array' upper bound in array[index]", text)


if __name__ == '__main__':
    unittest.main()
