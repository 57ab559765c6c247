from dataclasses import dataclass, field
from typing import Dict, List, Set


@dataclass
class UnwindDelta:
    """What one call to unwind handed to the solver."""
    depth: int
    constraints: List[object] = field(default_factory=list)
    assumptions: List[int] = field(default_factory=list)
    retired: List[int] = field(default_factory=list)
    symbols: List[str] = field(default_factory=list)


@dataclass(eq=False)
class UnwoundSsa:
    """
    An SsaForm loaded into one solver instance.

    Plain constraints are added once and stay. The definitions of a merge
    are added under an assumption literal; when the merge gains an exit
    edge its literal is retired and the wider definitions go in under a
    fresh one.
    """
    form: object
    solver: object
    loaded: int = 0
    merge_literals: Dict[tuple, int] = field(default_factory=dict)
    merge_versions: Dict[tuple, int] = field(default_factory=dict)
    retired: Set[int] = field(default_factory=set)
    renamings: Dict[int, List[str]] = field(default_factory=dict)
    known_symbols: int = 0

    @property
    def depth(self):
        return self.form.depth

    @property
    def program(self):
        return self.form.program
