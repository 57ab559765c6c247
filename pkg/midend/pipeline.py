import logging
from dataclasses import dataclass

from frontend.parser import parse, parse_files
from frontend.typecheck import typecheck
from midend.inline import inline_calls
from midend.instrument import (instrument_bounds, instrument_free_tracking, instrument_overflow,
                               instrument_pointer_checks, number_properties)
from midend.lower import lower
from midend.simplify import simplify

logger = logging.getLogger(__name__)


@dataclass
class Checks:
    """Which runtime errors become properties."""
    overflow: bool = False
    bounds: bool = False
    pointer: bool = False
    leak: bool = False


def build_goto(program, checks=None, simplified=True):
    """Typed program to an inlined, instrumented and simplified GotoProgram."""
    checks = checks or Checks()
    goto = lower(program)
    inline_calls(goto)
    if checks.pointer or checks.leak:
        instrument_free_tracking(goto, leak_check=checks.leak)
    if checks.pointer:
        instrument_pointer_checks(goto)
    if checks.bounds:
        instrument_bounds(goto)
    if checks.overflow:
        instrument_overflow(goto)
    number_properties(goto)
    if simplified:
        simplify(goto)
    logger.info('GOTO program for %s: %d instructions, %d properties', goto.entry,
                len(goto.instructions), len(goto.properties))
    return goto


def load(paths, entry='main'):
    """Parse and type-check one or more source files."""
    if isinstance(paths, (str, bytes)) or not hasattr(paths, '__iter__'):
        paths = [paths]
    return typecheck(parse_files(list(paths)), entry)


def compile_source(text, entry='main', checks=None, filename='<input>', simplified=True):
    return build_goto(typecheck(parse(text, filename), entry), checks, simplified)
