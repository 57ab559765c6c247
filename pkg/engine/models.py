"""
State of one verification run and the verdicts it produces.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set


class Status(str, Enum):
    UNKNOWN = 'UNKNOWN'
    SUCCESS = 'SUCCESS'
    FAILURE = 'FAILURE'


class Verdict(str, Enum):
    SUCCESSFUL = 'SUCCESSFUL'
    FAILED = 'FAILED'
    INCONCLUSIVE = 'INCONCLUSIVE'


class Mode(str, Enum):
    KIKI = 'kiki'
    IBMC = 'ibmc'
    KINDUCTION = 'kinduction'


@dataclass
class TraceStep:
    index: int
    file: str
    line: int
    function: str
    variable: str = ''
    value: str = ''


@dataclass
class Trace:
    property_id: str
    steps: List[TraceStep] = field(default_factory=list)
    inputs: List[int] = field(default_factory=list)
    depth: int = 0


@dataclass
class EngineOptions:
    """What one call to `run` does; unset values come from settings."""
    mode: Mode = Mode.KIKI
    domain: str = 'intervals'
    heap: bool = False
    symbolic_paths: bool = False
    values_refine: bool = False
    one_shot: bool = False
    unwind_max: Optional[int] = None
    strategy: Optional[str] = None
    traces: bool = True
    # stop once the overall verdict is FAILED instead of settling every property
    stop_on_failure: bool = True
    # give up after this many depths with an unchanged invariant; 0 never does
    stable_depths: int = 0
    restart_every: Optional[int] = None


@dataclass(eq=False)
class KikiState:
    """
    One unwinding in one solver, the invariant for the current depth and the
    status of every property. Statuses only leave UNKNOWN.
    """
    unwound: object
    options: EngineOptions
    statuses: Dict[str, Status] = field(default_factory=dict)
    traces: Dict[str, Trace] = field(default_factory=dict)
    invariant: object = None
    error_literals: Dict[tuple, int] = field(default_factory=dict)
    scoped: List[int] = field(default_factory=list)
    depth_literals: tuple = ()
    bmc_depth: int = 0
    complete: bool = False
    checks: int = 0
    # properties a bounded model violated without a replaying trace, per depth
    spurious: Set[str] = field(default_factory=set)
    # properties that are reported but never checked
    unchecked: Set[str] = field(default_factory=set)
    signature: tuple = None
    stable: int = 0

    @property
    def form(self):
        return self.unwound.form

    @property
    def program(self):
        return self.unwound.program

    @property
    def solver(self):
        return self.unwound.solver

    @property
    def k(self):
        return self.unwound.depth

    def unknown(self):
        return [pid for pid, status in self.statuses.items()
                if status == Status.UNKNOWN and pid not in self.unchecked]

    def searchable(self):
        """Open properties the bounded search still looks for at this depth."""
        return [pid for pid in self.unknown() if pid not in self.spurious]

    @property
    def decided(self):
        return self.options.stop_on_failure and self.verdict == Verdict.FAILED

    def settle(self, pid, status):
        if self.statuses[pid] != Status.UNKNOWN:
            raise ValueError(f'property {pid} is already {self.statuses[pid].value}')
        self.statuses[pid] = status

    @property
    def verdict(self):
        return overall(self.statuses)


@dataclass
class EngineResult:
    statuses: Dict[str, Status]
    traces: Dict[str, Trace] = field(default_factory=dict)
    depth: int = 0
    invariant: object = None
    form: object = None
    solver: object = None

    @property
    def verdict(self):
        return overall(self.statuses)


def overall(statuses):
    values = list(statuses.values())
    if any(s == Status.FAILURE for s in values):
        return Verdict.FAILED
    if all(s == Status.SUCCESS for s in values):
        return Verdict.SUCCESSFUL
    return Verdict.INCONCLUSIVE
