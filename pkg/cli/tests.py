import io
import os
import tempfile
import time
import unittest
from contextlib import redirect_stderr, redirect_stdout

from cli.commands import main
from cli.models import Config
from core import settings
from core.exceptions import ConfigurationError
from engine.models import Mode

FLAGS = ('--havoc', '--intervals', '--zones', '--octagons', '--heap', '--values-refine', '--k-induction',
         '--incremental-bmc', '--termination', '--nontermination', '--trace', '--signed-overflow-check',
         '--bounds-check', '--pointer-check', '--memory-leak-check', '--function', '--unwind-max',
         '--show-ssa', '--show-invariants', '--show-points-to', '--show-goto', '--show-properties',
         '--dump-dimacs', '--solver-restart-every')


def corpus(name):
    return str(settings.CORPUS_DIR / name)


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class ConfigTest(unittest.TestCase):

    def test_domain_without_mode_is_one_shot(self):
        options = Config(domains=('zones',)).validate().engine_options()
        self.assertEqual((options.mode, options.domain, options.one_shot), (Mode.KIKI, 'zones', True))

    def test_havoc_with_k_induction_is_plain_k_induction(self):
        options = Config(domains=('havoc',), k_induction=True).validate().engine_options()
        self.assertEqual(options.mode, Mode.KINDUCTION)
        self.assertFalse(options.one_shot)

    def test_domain_with_k_induction_infers_invariants(self):
        options = Config(domains=('octagons',), k_induction=True, unwind_max=7).engine_options()
        self.assertEqual((options.mode, options.domain, options.unwind_max), (Mode.KIKI, 'octagons', 7))

    def test_default_is_the_full_loop(self):
        options = Config().engine_options()
        self.assertEqual((options.mode, options.domain, options.one_shot), (Mode.KIKI, 'intervals', False))

    def test_incremental_bmc(self):
        self.assertEqual(Config(incremental_bmc=True).engine_options().mode, Mode.IBMC)

    def test_solver_restart_reaches_every_mode(self):
        for config in (Config(solver_restart_every=3), Config(solver_restart_every=3, incremental_bmc=True),
                       Config(solver_restart_every=3, k_induction=True)):
            self.assertEqual(config.validate().engine_options().restart_every, 3)
        self.assertIsNone(Config().engine_options().restart_every)
        with self.assertRaises(ConfigurationError):
            Config(solver_restart_every=-1).validate()

    def test_conflicts(self):
        for config in (Config(domains=('zones', 'octagons')),
                       Config(domains=('zones',), values_refine=True),
                       Config(k_induction=True, incremental_bmc=True),
                       Config(termination=True, k_induction=True),
                       Config(unwind_max=0)):
            with self.assertRaises(ConfigurationError):
                config.validate()

    def test_termination_sides_combine(self):
        self.assertTrue(Config(termination=True, nontermination=True).validate().analyses_termination)


class CommandTest(unittest.TestCase):

    def test_no_arguments_prints_usage(self):
        code, out, _ = invoke()
        self.assertEqual(code, 1)
        self.assertIn('Usage:', out)

    def test_help_lists_every_flag(self):
        code, out, _ = invoke('--help')
        self.assertEqual(code, 0)
        for flag in FLAGS:
            self.assertIn(flag, out)

    def test_conflicting_domains_are_a_usage_error(self):
        code, out, err = invoke(corpus('uri.c'), '--zones', '--octagons')
        self.assertEqual(code, 1)
        self.assertEqual(out, '')
        self.assertTrue(err.startswith('minikiki: error: '))

    def test_missing_file_is_a_usage_error(self):
        code, _, err = invoke(corpus('no_such_file.c'))
        self.assertEqual(code, 1)
        self.assertTrue(err.startswith('minikiki: error: '))

    def test_syntax_error_is_reported(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.c')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('int main() { int x = ; }\n')
            code, _, err = invoke(path)
        self.assertEqual(code, 1)
        self.assertIn('broken.c', err)

    def test_unknown_entry_function(self):
        code, _, err = invoke(corpus('count_up.c'), '--function', 'nowhere')
        self.assertEqual(code, 1)
        self.assertTrue(err.startswith('minikiki: error: '))

    def test_show_properties_lists_without_verifying(self):
        code, out, _ = invoke(corpus('bubble_sort_unchecked.c'), '--function', 'bubble_sort',
                              '--signed-overflow-check', '--show-properties')
        self.assertEqual(code, 0)
        self.assertIn('[bubble_sort.1] arithmetic overflow on signed - in size - 1', out)
        self.assertNotIn('VERIFICATION', out)

    def test_show_goto_and_ssa(self):
        code, out, _ = invoke(corpus('count_up.c'), '--show-goto')
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith('// main in '))
        code, out, _ = invoke(corpus('count_up.c'), '--show-ssa')
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith('unwinding depth 1'))

    def test_solver_restarts_keep_the_verdict(self):
        plain = invoke(corpus('count_up.c'), '--incremental-bmc')
        restarted = invoke(corpus('count_up.c'), '--incremental-bmc', '--solver-restart-every', '2')
        self.assertEqual(plain[:2], restarted[:2])

    def test_output_is_deterministic(self):
        first = invoke(corpus('count_up.c'), '--incremental-bmc', '--trace')
        second = invoke(corpus('count_up.c'), '--incremental-bmc', '--trace')
        self.assertEqual(first[:2], second[:2])

    def test_dump_dimacs(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'count_up.cnf')
            code, _, _ = invoke(corpus('count_up.c'), '--incremental-bmc', '--dump-dimacs', path)
            self.assertEqual(code, 0)
            with open(path, encoding='utf-8') as handle:
                self.assertTrue(any(line.startswith('p cnf') for line in handle))

    def test_show_invariants_follows_the_verdict(self):
        code, out, _ = invoke(corpus('count_up.c'), '--intervals', '--show-invariants')
        lines = out.splitlines()
        verdict = [i for i, line in enumerate(lines) if line.startswith('VERIFICATION')]
        self.assertEqual(len(verdict), 1)
        self.assertLess(verdict[0], len(lines) - 1)
        self.assertIn(code, (0, 5))


class AcceptanceTest(unittest.TestCase):
    """The worked examples in corpus/, run through the command line."""

    def test_uri_domain_ladder(self):
        expected = {
            ('--havoc',): 5,
            ('--intervals',): 5,
            ('--zones',): 0,
            ('--octagons',): 0,
            ('--havoc', '--k-induction'): 0,
        }
        for flags, status in expected.items():
            code, out, _ = invoke(corpus('uri.c'), '--function', 'copy_authority', *flags)
            self.assertEqual(code, status, flags)
            self.assertTrue(out.splitlines()[0].startswith('[copy_authority.1] '), flags)

    def test_min_with_heap_and_refinement(self):
        started = time.monotonic()
        code, out, _ = invoke(corpus('min.c'), '--heap', '--values-refine')
        self.assertLess(time.monotonic() - started, 60)
        self.assertEqual(code, 0)
        self.assertTrue(out.endswith('VERIFICATION SUCCESSFUL\n'))

    def test_matrix_to_vector_out_of_bounds(self):
        code, out, _ = invoke(corpus('matrix_to_vector.c'), '--bounds-check', '--k-induction', '--trace')
        self.assertEqual(code, 10)
        indices = [int(line.split('=', 1)[1]) for line in out.splitlines() if line.startswith('  index=')]
        self.assertTrue(indices)
        self.assertGreaterEqual(indices[-1], 16)

    def test_corrected_matrix_to_vector(self):
        code, _, _ = invoke(corpus('matrix_to_vector_fixed.c'), '--bounds-check', '--k-induction')
        self.assertEqual(code, 0)

    def test_free_safety(self):
        code, out, _ = invoke(corpus('free_safety.c'), '--pointer-check', '--heap')
        self.assertEqual(code, 10)
        self.assertTrue(any(line.endswith('dereference failure: deallocated dynamic object in *b: FAILURE')
                            for line in out.splitlines()))

    def test_bubble_sort_terminates(self):
        code, out, _ = invoke(corpus('bubble_sort.c'), '--termination', '--function', 'bubble_sort')
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'termination argument:')
        self.assertIn('[bubble_sort]: yes', lines)
        outer, inner = [line for line in lines if line.startswith('  ranking bubble_sort line ')]
        self.assertRegex(outer, r': \(-(\d+\*)?c\)$')
        self.assertRegex(inner, r': \(-(\d+\*)?d\)$')

    def test_bubble_sort_overflow_without_precondition(self):
        started = time.monotonic()
        code, out, _ = invoke(corpus('bubble_sort_unchecked.c'), '--signed-overflow-check',
                              '--function', 'bubble_sort')
        self.assertLess(time.monotonic() - started, 60)
        self.assertEqual(code, 10)
        self.assertIn('[bubble_sort.1] arithmetic overflow on signed - in size - 1: FAILURE',
                      out.splitlines())

    def test_sasum_does_not_terminate(self):
        code, out, _ = invoke(corpus('sasum.c'), '--function', 'sasum', '--nontermination', '--trace')
        self.assertEqual(code, 10)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'Nonterminating program execution proved after 1 unwinding(s)')
        self.assertIn('  incx=0', lines)
        self.assertEqual(lines[-1], 'VERIFICATION FAILED')

    def test_termination_sides_agree_on_the_corpus(self):
        for name in ('count_up.c', 'signed_char_loop.c', 'unsigned_forever.c'):
            code, out, _ = invoke(corpus(name), '--termination', '--nontermination')
            self.assertIn(code, (0, 5, 10), name)
        code, out, _ = invoke(corpus('unsigned_forever.c'), '--nontermination')
        self.assertEqual(code, 10)
        self.assertIn('[main]: no', out.splitlines())
