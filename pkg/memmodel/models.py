"""
Objects, cells and the results of the pointer analyses.

A cell is one scalar or array slot of program state: a variable, a field of
a struct variable, or the value or a field of an abstract heap object. The
pointer analyses run before heap objects are materialised and use one
summary object per allocation site; the universe expands each summary into
the site's abstract objects.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional

from frontend import models as m


class ObjectKind(str, Enum):
    NULL = 'null'
    STATIC = 'static'
    DYNAMIC = 'dynamic'
    CONCRETE = 'concrete'
    UNKNOWN = 'unknown'


@dataclass(frozen=True)
class ObjectId:
    kind: ObjectKind
    name: str = ''
    site: int = 0
    index: int = 0
    type: Optional[m.TypeExpr] = field(default=None, compare=False)

    @property
    def is_heap(self):
        return self.kind in (ObjectKind.DYNAMIC, ObjectKind.CONCRETE)

    @property
    def is_summary(self):
        """All objects of one site, as the pointer analyses see them."""
        return self.kind == ObjectKind.DYNAMIC and self.index == 0

    @property
    def prefix(self):
        """Prefix of the cells that hold this object's contents."""
        if self.kind == ObjectKind.STATIC:
            return self.name
        if self.kind == ObjectKind.CONCRETE:
            return f'o{self.site}.co'
        if self.kind == ObjectKind.DYNAMIC:
            return f'o{self.site}.{self.index}' if self.index else f'site{self.site}'
        return ''

    def __str__(self):
        if self.kind == ObjectKind.NULL:
            return 'NULL'
        if self.kind == ObjectKind.UNKNOWN:
            return '&o?'
        return f'&{self.prefix}'


NULL = ObjectId(ObjectKind.NULL)
UNKNOWN_OBJECT = ObjectId(ObjectKind.UNKNOWN)


def static_object(info):
    return ObjectId(ObjectKind.STATIC, name=info.uid, type=info.type)


def site_summary(site):
    return ObjectId(ObjectKind.DYNAMIC, site=site.id, type=site.elem_type)


@dataclass(frozen=True)
class Cell:
    name: str
    type: m.TypeExpr = field(compare=False)
    owner: Optional[ObjectId] = None
    field: str = ''
    flag: str = ''

    @property
    def is_pointer(self):
        return self.type.is_pointer

    @property
    def is_numeric(self):
        return self.type.is_integer

    @property
    def is_object(self):
        return self.owner is not None and self.owner.is_heap

    def __str__(self):
        return self.name


def field_cell(prefix, name):
    return f'{prefix}.{name}'


def value_cells(prefix, t, owner=None):
    """The cells holding a value of type `t` stored under `prefix`."""
    if isinstance(t, m.StructType):
        return [Cell(field_cell(prefix, f), ft, owner, f) for f, ft in t.fields]
    return [Cell(prefix, t, owner)]


@dataclass
class PointsToMap:
    """Per location, the may-targets of every pointer cell before the instruction runs."""
    states: List[Optional[Dict[str, FrozenSet[ObjectId]]]]

    def at(self, index):
        return self.states[index] or {}

    def targets(self, index, cell):
        return self.at(index).get(cell, frozenset())

    def reachable(self, index):
        return self.states[index] is not None


@dataclass
class MustAliasRel:
    """Per location, a partition of the pointer cells that must hold equal pointers."""
    states: List[Optional[FrozenSet[FrozenSet[str]]]]

    def classes(self, index):
        return self.states[index] or frozenset()

    def class_of(self, index, cell):
        for group in self.classes(index):
            if cell in group:
                return group
        return frozenset([cell])

    def aliased(self, index, a, b):
        return a == b or b in self.class_of(index, a)


@dataclass
class ObjectUniverse:
    """Every addressable object with its address tag, and every cell of state."""
    objects: List[ObjectId]
    counts: Dict[int, int]
    cells: List[Cell]
    address_width: int
    tags: Dict[ObjectId, int] = field(default_factory=dict)

    def __post_init__(self):
        self.tags = {NULL: 0}
        for i, obj in enumerate(self.objects, start=1):
            self.tags[obj] = i
        self._by_tag = {tag: obj for obj, tag in self.tags.items()}
        self._cells = {c.name: c for c in self.cells}

    def tag(self, obj):
        return self.tags[obj]

    def object_for_tag(self, tag):
        return self._by_tag.get(tag, UNKNOWN_OBJECT)

    def cell(self, name):
        return self._cells[name]

    def has_cell(self, name):
        return name in self._cells

    @property
    def unknown(self):
        return UNKNOWN_OBJECT

    def static_objects(self):
        return [o for o in self.objects if o.kind == ObjectKind.STATIC]

    def heap_objects(self, site=None):
        return [o for o in self.objects if o.is_heap and (site is None or o.site == site)]

    def dynamic_objects(self, site):
        return [o for o in self.objects if o.kind == ObjectKind.DYNAMIC and o.site == site]

    def concrete_object(self, site):
        return ObjectId(ObjectKind.CONCRETE, site=site)

    def expand(self, target):
        """Materialised objects standing for one analysis-level target."""
        if target.is_summary:
            return self.heap_objects(target.site)
        return [target]

    def cells_of(self, obj):
        prefix = obj.prefix
        return [c for c in self.cells
                if not c.flag and (c.name == prefix or c.name.startswith(prefix + '.'))]

    def flag_cell(self, obj, flag):
        return f'{obj.prefix}.${flag}'

    @property
    def numeric_cells(self):
        return [c for c in self.cells if c.is_numeric]

    @property
    def pointer_cells(self):
        return [c for c in self.cells if c.is_pointer]


@dataclass
class MemoryModel:
    points_to: PointsToMap
    must_alias: MustAliasRel
    universe: ObjectUniverse
