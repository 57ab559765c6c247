"""
One verifier run as the command line describes it.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from core.exceptions import ConfigurationError
from engine.models import EngineOptions, Mode
from midend.pipeline import Checks

DOMAINS = ('havoc', 'intervals', 'zones', 'octagons')


@dataclass
class Config:
    files: Tuple[str, ...] = ()
    function: str = 'main'
    domains: Tuple[str, ...] = ()
    heap: bool = False
    values_refine: bool = False
    k_induction: bool = False
    incremental_bmc: bool = False
    termination: bool = False
    nontermination: bool = False
    trace: bool = False
    checks: Checks = field(default_factory=Checks)
    unwind_max: Optional[int] = None
    solver_restart_every: Optional[int] = None
    show_ssa: bool = False
    show_invariants: bool = False
    show_points_to: bool = False
    show_goto: bool = False
    show_properties: bool = False
    dump_dimacs: Optional[str] = None

    @property
    def domain(self):
        return self.domains[0] if self.domains else None

    @property
    def analyses_termination(self):
        return self.termination or self.nontermination

    def validate(self):
        if len(self.domains) > 1:
            raise ConfigurationError(f'choose one abstract domain, not {", ".join(self.domains)}')
        if self.values_refine and self.domains:
            raise ConfigurationError('--values-refine picks its own domains')
        if self.k_induction and self.incremental_bmc:
            raise ConfigurationError('--k-induction and --incremental-bmc exclude each other')
        if self.analyses_termination and (self.k_induction or self.incremental_bmc):
            raise ConfigurationError('termination analysis does not combine with a safety mode')
        if self.solver_restart_every is not None and self.solver_restart_every < 0:
            raise ConfigurationError('--solver-restart-every must not be negative')
        if self.unwind_max is not None and self.unwind_max < 1:
            raise ConfigurationError('--unwind-max must be at least 1')
        return self

    def engine_options(self):
        """
        --incremental-bmc: bounded checks only. --k-induction: the full loop,
        with invariants when a domain is named. A domain without a mode: one
        check at depth 1. Nothing: the full loop over intervals.
        """
        domain = self.domain
        common = {'unwind_max': self.unwind_max, 'restart_every': self.solver_restart_every}
        if self.incremental_bmc:
            return EngineOptions(mode=Mode.IBMC, **common)
        if self.k_induction:
            if domain in (None, 'havoc') and not self.values_refine:
                return EngineOptions(mode=Mode.KINDUCTION, domain='havoc', **common)
            return EngineOptions(domain=domain or 'intervals', heap=self.heap,
                                 values_refine=self.values_refine, **common)
        return EngineOptions(domain=domain or 'intervals', heap=self.heap, values_refine=self.values_refine,
                             one_shot=domain is not None, **common)
