"""
Termination arguments and non-termination witnesses.
"""

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple


class TerminationVerdict(str, Enum):
    TERMINATING = 'terminating'
    NONTERMINATING = 'nonterminating'
    UNKNOWN = 'unknown'


@dataclass(frozen=True)
class RankingComponent:
    """Σ coefficient·cell over the loop-head state; it must strictly decrease."""
    terms: Tuple[Tuple[str, int], ...]

    @property
    def is_zero(self):
        return all(c == 0 for _, c in self.terms)

    def coefficient(self, cell):
        return dict(self.terms).get(cell, 0)


@dataclass
class LoopRanking:
    """Lexicographic ranking of one loop; no components means no argument was found."""
    head: int
    cells: List[str]
    components: List[RankingComponent] = field(default_factory=list)
    refinements: int = 0

    @property
    def is_top(self):
        return not self.components


@dataclass
class TerminationArgument:
    rankings: List[LoopRanking] = field(default_factory=list)

    @property
    def is_complete(self):
        return all(not r.is_top for r in self.rankings)

    def for_loop(self, head):
        for ranking in self.rankings:
            if ranking.head == head:
                return ranking
        return None


@dataclass
class RecurrenceWitness:
    """A loop-head state reached again `period` iterations after `prefix` of them."""
    head: int
    state: Dict[str, str]
    prefix: int
    period: int
    depth: int
    trace: object = None


@dataclass
class ProgressionWitness:
    """A reachable head state from which every iteration adds `deltas`."""
    head: int
    deltas: Dict[str, int]
    state: Dict[str, str]
    depth: int
    trace: object = None


@dataclass
class TerminationResult:
    verdict: TerminationVerdict
    argument: Optional[TerminationArgument] = None
    witness: object = None
    source: str = ''


class VerdictCell:
    """Holds the first conclusive result; later writers are ignored."""

    def __init__(self):
        self._lock = threading.Lock()
        self._result = None
        self.done = threading.Event()

    def offer(self, result):
        if result is None or result.verdict == TerminationVerdict.UNKNOWN:
            return False
        with self._lock:
            if self._result is not None:
                return False
            self._result = result
        self.done.set()
        return True

    @property
    def result(self):
        with self._lock:
            return self._result
