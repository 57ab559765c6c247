#!/usr/bin/env python
"""minikiki's command-line utility: verify a program, or run the test suites."""
import sys
import unittest


def run_tests(labels):
    """Run the unittest suites of the given apps (all of them by default)."""
    loader = unittest.TestLoader()
    if labels:
        suite = unittest.TestSuite(loader.loadTestsFromName(f'{label}.tests') for label in labels)
    else:
        suite = loader.discover('.', pattern='tests.py', top_level_dir='.')
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return 0 if result.wasSuccessful() else 1


def main():
    """Run the verifier or, with `test`, the test suites."""
    if len(sys.argv) > 1 and sys.argv[1] == 'test':
        sys.exit(run_tests(sys.argv[2:]))
    try:
        from cli.commands import main as verifier
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the verifier. Are its requirements installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(verifier(sys.argv[1:]))


if __name__ == '__main__':
    main()
