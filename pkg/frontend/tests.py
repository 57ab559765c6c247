import unittest

from core.exceptions import (MiniCSyntaxError, NotAnLvalue, RecursionDetected, TypeCheckError,
                             UnknownIdentifier, UnsupportedConstruct)
from frontend import models as m
from frontend.generator import random_program
from frontend.interpreter import Interpreter
from frontend.parser import parse, preprocess
from frontend.printer import structure, to_source
from frontend.typecheck import typecheck, walk_typed
from midend.interpreter import run_goto
from midend.pipeline import build_goto

URI = '''
void copy_authority(
    char *uri, int uri_length, int authority_start, char *authority) {
  __CPROVER_assume(0 < uri_length);
  __CPROVER_assume(0 < authority_start && authority_start < uri_length);
  int cp = authority_start;
  while (cp != uri_length - 1) {
    if (uri[cp] == '/')
      break;
    assert(cp < uri_length);
    authority[cp - authority_start] = uri[cp];
    ++cp;
  }
}
'''


def statements(stmt):
    """Every statement under `stmt`, branches and loop bodies included."""
    if stmt is None:
        return
    if isinstance(stmt, m.Block):
        for s in stmt.body:
            yield from statements(s)
        return
    yield stmt
    for child in ('then', 'other', 'body'):
        inner = getattr(stmt, child, None)
        if isinstance(inner, m.Stmt):
            yield from statements(inner)


class ParseTest(unittest.TestCase):

    def test_minimal_program(self):
        program = parse('int main(){return 0;}')
        self.assertEqual([f.name for f in program.functions], ['main'])
        self.assertIsInstance(program.functions[0].body.body[0], m.Return)

    def test_uri_has_a_loop_with_break_and_two_assumes(self):
        program = parse(URI)
        body = program.function('copy_authority').body
        kinds = [type(s).__name__ for s in statements(body)]
        self.assertEqual(kinds.count('Assume'), 2)
        self.assertIn('While', kinds)
        self.assertIn('Break', kinds)

    def test_locations_are_kept(self):
        program = parse(URI, 'uri.c')
        loop = next(s for s in statements(program.function('copy_authority').body)
                    if isinstance(s, m.While))
        self.assertEqual(loop.loc.line, 7)
        self.assertEqual(loop.loc.file, 'uri.c')

    def test_pointer_arithmetic_is_rejected(self):
        with self.assertRaises(UnsupportedConstruct):
            typecheck(parse('int main(){ int *p; p = p + 1; return 0; }'))

    def test_syntax_error_has_a_position(self):
        with self.assertRaises(MiniCSyntaxError) as caught:
            parse('int main() { int x = ; }')
        self.assertEqual(caught.exception.line, 1)

    def test_floats_are_rejected(self):
        with self.assertRaises(UnsupportedConstruct):
            typecheck(parse('int main() { float f = 1; return 0; }'))

    def test_varargs_are_rejected(self):
        with self.assertRaises(UnsupportedConstruct):
            typecheck(parse('int f(int a, ...) { return a; } int main() { return f(1); }'))

    def test_constant_macros_expand_transitively(self):
        text = preprocess('#define SIZE 4\n#define TOTAL (SIZE * SIZE)\nint y = TOTAL;\n')
        self.assertEqual(text.split('\n'), ['', '', 'int y = (4 * 4);', ''])

    def test_function_like_macro_is_rejected(self):
        with self.assertRaises(UnsupportedConstruct):
            preprocess('#define TWICE(x) ((x) + (x))\nint y = TWICE(1);\n')

    def test_print_then_parse_is_stable(self):
        for seed in range(20):
            first = parse(random_program(seed))
            again = parse(to_source(first))
            self.assertEqual(structure(first), structure(again), f'seed {seed}')


class TypecheckTest(unittest.TestCase):

    def test_narrowing_assignment_gets_an_explicit_cast(self):
        program = typecheck(parse('int main(){ int x = 300; unsigned char c; c = x; return 0; }'))
        assign = next(s for s in program.function('main').body.body if isinstance(s, m.Assign))
        self.assertIsInstance(assign.value, m.Cast)
        self.assertEqual(assign.value.type, m.IntType(8, False))

    def test_bodiless_nondet_is_a_nondet_expression(self):
        program = typecheck(parse('int main(){ int x = __VERIFIER_nondet_int(); return x; }'))
        decl = program.function('main').body.body[0]
        self.assertIsInstance(decl.init, m.Nondet)
        self.assertEqual(decl.init.type, m.INT)

    def test_deref_of_an_integer_is_a_type_error(self):
        with self.assertRaises(TypeCheckError):
            typecheck(parse('int main(){ int x = 0; return *x; }'))

    def test_unknown_identifier(self):
        with self.assertRaises(UnknownIdentifier):
            typecheck(parse('int main(){ return y; }'))

    def test_address_of_a_value(self):
        with self.assertRaises(NotAnLvalue):
            typecheck(parse('int main(){ int *p = &(1 + 2); return 0; }'))

    def test_recursion_is_rejected(self):
        with self.assertRaises(RecursionDetected):
            build_goto(typecheck(parse('int f(int n) { return f(n); } int main() { return f(1); }')))

    def test_every_node_is_typed(self):
        for seed in range(20):
            program = typecheck(parse(random_program(seed, heap=True)))
            untyped = [e for e in walk_typed(program) if e.type is None]
            self.assertEqual(untyped, [], f'seed {seed}')


class LoweringDifferentialTest(unittest.TestCase):
    """The AST interpreter and the GOTO interpreter agree on random programs."""

    def compare(self, source, inputs):
        ast = Interpreter(typecheck(parse(source)), inputs).run()
        goto = run_goto(build_goto(typecheck(parse(source))), inputs)
        self.assertEqual(ast.status, goto.status)
        self.assertEqual([ok for _, ok in ast.assertions], [ok for _, ok in goto.assertions])
        for uid, value in ast.store.items():
            self.assertEqual(goto.store.get(uid), value, uid)

    def test_random_programs(self):
        for seed in range(1000):
            source = random_program(seed, heap=seed % 3 == 0)
            inputs = [(seed * 7 + i * 13) % 11 - 5 for i in range(8)]
            with self.subTest(seed=seed):
                self.compare(source, inputs)


if __name__ == '__main__':
    unittest.main()
