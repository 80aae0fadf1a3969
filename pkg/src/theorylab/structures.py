"""Finite relational structures and the standard model builders.

A structure is a finite labeled universe, a sort tag per atom, and a table
of tuples per predicate.  Equality is atom identity.  Sorted structures tag
atoms with their sort; flattened structures tag every atom with the flat
sort and carry the sort predicates as ordinary unary tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ModelError, TheoryError
from .syntax import Predicate, Sort, Var
from .theory import Theory, fresh_name, sort_pred_name

__all__ = [
    "FiniteStructure", "flatten_structure", "standard_pc_structure",
    "standard_tuple_structure", "standard_t_power_structure",
    "standard_pc_st_structure", "simple_structure", "subset_label",
]


@dataclass(frozen=True)
class FiniteStructure:
    """Universe atoms (named, ordered), sort tags, and predicate tables."""

    universe: tuple[str, ...]
    sort_of: Mapping[str, str]
    tables: Mapping[str, frozenset[tuple[str, ...]]]

    def __post_init__(self):
        if len(set(self.universe)) != len(self.universe):
            raise ModelError("duplicate universe atoms")
        for a in self.universe:
            if a not in self.sort_of:
                raise ModelError(f"atom {a} has no sort tag")
        atoms = set(self.universe)
        for name, rows in self.tables.items():
            for row in rows:
                for a in row:
                    if a not in atoms:
                        raise ModelError(
                            f"table {name} mentions foreign atom {a}")

    def sort_members(self, sort_name: str) -> tuple[str, ...]:
        return tuple(a for a in self.universe if self.sort_of[a] == sort_name)

    def table(self, name: str) -> frozenset[tuple[str, ...]]:
        try:
            return self.tables[name]
        except KeyError:
            raise ModelError(f"structure has no table for predicate {name}")

    def with_tables(self, extra: Mapping[str, frozenset[tuple[str, ...]]]
                    ) -> "FiniteStructure":
        tables = dict(self.tables)
        tables.update(extra)
        return FiniteStructure(self.universe, self.sort_of, tables)


def simple_structure(sort: Sort, atoms: Sequence[str],
                     tables: Optional[Mapping[str, Iterable[tuple[str, ...]]]]
                     = None) -> FiniteStructure:
    """One-sorted structure helper."""
    tables = tables or {}
    return FiniteStructure(
        tuple(atoms),
        {a: sort.name for a in atoms},
        {name: frozenset(map(tuple, rows)) for name, rows in tables.items()},
    )


def flatten_structure(s: FiniteStructure, flat_theory: Theory) -> FiniteStructure:
    """Move sort tags into the flat theory's sort-predicate tables."""
    meta = flat_theory.meta
    if "flat_sort" not in meta:
        raise TheoryError(f"{flat_theory.name} is not a flattening result")
    flat_sort: Sort = meta["flat_sort"]
    sort_preds: Mapping[str, Predicate] = meta["sort_preds"]
    tables = {name: rows for name, rows in s.tables.items()}
    for sort_name, pred in sort_preds.items():
        tables[pred.name] = frozenset(
            (a,) for a in s.universe if s.sort_of[a] == sort_name)
    missing = {a for a in s.universe if s.sort_of[a] not in sort_preds}
    if missing:
        raise ModelError(f"atoms outside the flattened sorts: {sorted(missing)}")
    return FiniteStructure(
        s.universe, {a: flat_sort.name for a in s.universe}, tables)


# --------------------------------------------------------------------------
# Standard models for the class / tuple / power functors.

def subset_label(k: int, bitmask: int) -> str:
    return f"c{k}_{bitmask}"


def standard_pc_structure(base: FiniteStructure, pc_theory: Theory
                          ) -> FiniteStructure:
    """All classes of k-tuples over `base`, for the sorted class theory.

    Class atoms are named c<k>_<mask> where <mask> indexes the subset of the
    lexicographically ordered tuple space, so naming is deterministic.
    """
    info = pc_theory.meta.get("pc")
    if info is None:
        raise TheoryError(f"{pc_theory.name} has no class-sort info")
    obj_sort: Sort = info["object_sort"]
    n: int = info["n"]
    class_sorts: Mapping[int, Sort] = {
        k: info["class_sorts"][k - 1] for k in range(1, n + 1)}
    members: Mapping[int, Predicate] = {
        k: info["member_preds"][k - 1] for k in range(1, n + 1)}

    universe = list(base.universe)
    taken = set(universe)
    sort_of = {a: obj_sort.name for a in base.universe}
    tables: dict[str, frozenset] = {n: r for n, r in base.tables.items()}
    for k, cls_sort in sorted(class_sorts.items()):
        tuples = list(itertools.product(base.universe, repeat=k))
        rows = set()
        for mask in range(1 << len(tuples)):
            c = fresh_name(subset_label(k, mask), taken)
            taken.add(c)
            universe.append(c)
            sort_of[c] = cls_sort.name
            for i, tup in enumerate(tuples):
                if mask >> i & 1:
                    rows.add(tup + (c,))
        tables[members[k].name] = frozenset(rows)
    return FiniteStructure(tuple(universe), sort_of, tables)


def standard_tuple_structure(base: FiniteStructure, tuple_theory: Theory
                             ) -> FiniteStructure:
    """One atom per k-tuple of base atoms, with total projection tables."""
    info = tuple_theory.meta.get("tuple")
    if info is None:
        raise TheoryError(f"{tuple_theory.name} has no tuple-sort info")
    tuple_sorts: Mapping[int, Sort] = info["tuple_sorts"]
    tuple_preds: Mapping[int, Predicate] = info["tuple_preds"]

    index = {a: i for i, a in enumerate(base.universe)}
    universe = list(base.universe)
    taken = set(universe)
    sort_of = {a: tuple_sorts[1].name for a in base.universe}
    tables: dict[str, frozenset] = {n: r for n, r in base.tables.items()}
    for k in sorted(tuple_sorts):
        if k == 1:
            continue
        rows = set()
        for tup in itertools.product(base.universe, repeat=k):
            p = fresh_name(
                "t%d_%s" % (k, "_".join(str(index[a]) for a in tup)), taken)
            taken.add(p)
            universe.append(p)
            sort_of[p] = tuple_sorts[k].name
            rows.add((p,) + tup)
        tables[tuple_preds[k].name] = frozenset(rows)
    return FiniteStructure(tuple(universe), sort_of, tables)


def standard_t_power_structure(base: FiniteStructure, power_theory: Theory
                               ) -> FiniteStructure:
    """Universe = n-th cartesian power of the base, diagonal marked.

    The tuple-projection table relates each atom to the diagonal atoms of
    its coordinates; base predicates live on the diagonal.
    """
    info = power_theory.meta.get("t_power")
    if info is None:
        raise TheoryError(f"{power_theory.name} has no power info")
    n: int = info["power"]
    diag: Predicate = info["diag_pred"]
    tup: Predicate = info["tuple_pred"]
    sort: Sort = power_theory.sole_sort()

    index = {a: i for i, a in enumerate(base.universe)}

    def label(tup_atoms: tuple[str, ...]) -> str:
        return "p_" + "_".join(str(index[a]) for a in tup_atoms)

    tuples = list(itertools.product(base.universe, repeat=n))
    universe = tuple(label(t) for t in tuples)
    sort_of = {a: sort.name for a in universe}
    diag_rows = frozenset((label((a,) * n),) for a in base.universe)
    tup_rows = frozenset(
        (label(t),) + tuple(label((a,) * n) for a in t) for t in tuples)
    tables: dict[str, frozenset] = {
        diag.name: diag_rows, tup.name: tup_rows}
    for name, rows in base.tables.items():
        tables[name] = frozenset(
            tuple(label((a,) * n) for a in row) for row in rows)
    return FiniteStructure(universe, sort_of, tables)


def standard_pc_st_structure(base: FiniteStructure, pcst_theory: Theory
                             ) -> FiniteStructure:
    """Base atoms made self-singletons, plus one class per subset of the base.

    `base` is typically a standard power structure; its atoms b get the
    membership loop b in b (making them self-singletons), and every subset S
    of the base becomes a class atom whose members are exactly S.
    """
    info = pcst_theory.meta.get("pc_st")
    if info is None:
        raise TheoryError(f"{pcst_theory.name} has no singleton-class info")
    sng: Predicate = info["sng_pred"]
    member: Predicate = info["member_pred"]
    sort: Sort = pcst_theory.sole_sort()

    universe = list(base.universe)
    taken = set(universe)
    sort_of = {a: sort.name for a in base.universe}
    tables: dict[str, frozenset] = {n: r for n, r in base.tables.items()}
    mem_rows = {(b, b) for b in base.universe}
    for mask in range(1 << len(base.universe)):
        c = fresh_name(subset_label(1, mask), taken)
        taken.add(c)
        universe.append(c)
        sort_of[c] = sort.name
        for i, b in enumerate(base.universe):
            if mask >> i & 1:
                mem_rows.add((b, c))
    tables[member.name] = frozenset(mem_rows)
    tables[sng.name] = frozenset((b,) for b in base.universe)
    return FiniteStructure(tuple(universe), sort_of, tables)
