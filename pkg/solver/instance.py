"""
One incremental SAT instance for a whole analysis.

Constraints only ever grow. Temporary facts are added under activation
literals and switched on per call through assumptions; a retired literal gets
a permanent negative unit clause, which is how clause deletion is emulated.
"""

import logging
from enum import Enum

import pysat.formula
import pysat.solvers

from core import settings
from core.exceptions import UnknownSymbol
from solver.bitblast import BitBlaster
from solver.evaluate import evaluate, zero_value

logger = logging.getLogger(__name__)


class SolveResult(str, Enum):
    SAT = 'SAT'
    UNSAT = 'UNSAT'
    UNKNOWN = 'UNKNOWN'


class Model:
    """A satisfying assignment, decoded on demand through the bit-blaster."""

    def __init__(self, values, blaster):
        self._values = values
        self._blaster = blaster

    def lit(self, lit):
        var = abs(lit)
        value = var <= len(self._values) and self._values[var - 1] > 0
        return value if lit > 0 else not value

    def _bits_value(self, bits):
        return sum(1 << i for i, lit in enumerate(bits) if self.lit(lit))

    def _decode(self, term, encoding):
        if term.sort.is_bool:
            return self.lit(encoding)
        if term.sort.is_array:
            return tuple(self._bits_value(bits) for bits in encoding)
        return self._bits_value(encoding)

    def value(self, term, strict=True):
        """
        Value of `term`: a bool, an unsigned int, or a tuple for arrays.
        Terms never handed to the solver are evaluated from their symbols;
        an unseen symbol raises UnknownSymbol when `strict`, else reads as 0.
        """
        encoding = self._blaster.cache.get(term.tid)
        if encoding is not None:
            return self._decode(term, encoding)

        def leaf(sym):
            known = self._blaster.cache.get(sym.tid)
            if known is not None:
                return self._decode(sym, known)
            if strict:
                raise UnknownSymbol(f'{sym.payload} does not occur in any constraint')
            return zero_value(sym)

        return evaluate(term, {}, default=leaf)


class SolverInstance:

    def __init__(self, name=None, conflict_budget=None, restart_every=None):
        self.name = name or settings.SOLVER_NAME
        self.conflict_budget = settings.CONFLICT_BUDGET if conflict_budget is None else conflict_budget
        self.restart_every = settings.SOLVER_RESTART_EVERY if restart_every is None else restart_every
        self.clauses = []
        self.nvars = 0
        self.retired = set()
        self.calls = 0
        self.conflicts = 0
        self._backend = pysat.solvers.Solver(name=self.name)
        self.true_literal = self.new_var()
        self.add_clause([self.true_literal])
        self.blaster = BitBlaster(self)

    def close(self):
        if self._backend is not None:
            self._backend.delete()
            self._backend = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # Clause store

    def new_var(self):
        self.nvars += 1
        return self.nvars

    def add_clause(self, clause):
        self.clauses.append(clause)
        self._backend.add_clause(clause)

    def literal(self, term):
        return self.blaster.literal(term)

    def bits(self, term):
        return self.blaster.blast(term)

    def add(self, term):
        """Assert a Boolean term permanently."""
        self.add_clause([self.literal(term)])

    def add_under(self, activation, term):
        """Assert `activation ⟹ term`."""
        self.add_clause([-activation, self.literal(term)])

    def new_assumption(self):
        return self.new_var()

    def retire(self, lit):
        if lit not in self.retired:
            self.retired.add(lit)
            self.add_clause([-lit])

    # Queries

    def solve(self, assumptions=()):
        """Returns (SolveResult, Model or None). A retired literal may only be assumed negated."""
        assumptions = list(assumptions)
        stale = [lit for lit in assumptions if lit in self.retired]
        if stale:
            raise ValueError(f'assumption literals {stale} are retired')
        self.calls += 1
        if self.restart_every and self.calls % self.restart_every == 0:
            self.restart()
        backend = self._backend
        if self.conflict_budget:
            backend.conf_budget(self.conflict_budget)
            outcome = backend.solve_limited(assumptions=assumptions)
        else:
            outcome = backend.solve(assumptions=assumptions)
        stats = backend.accum_stats() or {}
        self.conflicts = stats.get('conflicts', self.conflicts)
        logger.debug('solve #%d: %d assumptions, %d vars, %d clauses -> %s',
                     self.calls, len(assumptions), self.nvars, len(self.clauses), outcome)
        if outcome is None:
            return SolveResult.UNKNOWN, None
        if not outcome:
            return SolveResult.UNSAT, None
        return SolveResult.SAT, Model(backend.get_model() or [], self.blaster)

    def check(self, term, assumptions=()):
        """Satisfiability of `term` together with everything asserted so far."""
        act = self.new_assumption()
        self.add_under(act, term)
        try:
            return self.solve(list(assumptions) + [act])
        finally:
            self.retire(act)

    def restart(self):
        """Rebuild the back end, dropping clauses satisfied by retired literals."""
        dead = {-lit for lit in self.retired}
        kept = [c for c in self.clauses if len(c) == 1 or not dead.intersection(c)]
        logger.info('restarting solver: %d of %d clauses kept', len(kept), len(self.clauses))
        self._backend.delete()
        self._backend = pysat.solvers.Solver(name=self.name, bootstrap_with=kept)
        self.clauses = kept

    def statistics(self):
        return {
            'variables': self.nvars,
            'clauses': len(self.clauses),
            'conflicts': self.conflicts,
            'calls': self.calls,
        }

    def dump_dimacs(self, path):
        pysat.formula.CNF(from_clauses=self.clauses).to_file(str(path))


def model_value(model, term, strict=True):
    return model.value(term, strict=strict)


def solve_under_assumptions(instance, assumptions):
    return instance.solve(assumptions)
