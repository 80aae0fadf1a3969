"""Deterministic formula pools.

Exhaustive generation of core formulas up to a height bound over a fixed
variable supply.  Pools are subformula-closed, duplicate-free thanks to
interning, and emitted in a stable order so downstream sweeps and golden
outputs never shift between runs.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .errors import SchemeError
from .syntax import (And, Eq, Formula, Forall, Not, Predicate, Sort, Var,
                     and_, atom, eq, forall, forall_many, not_)
from .theory import Scheme, Theory

__all__ = [
    "formula_pool",
    "pool_counts",
    "scheme_instance_pool",
    "universal_closure",
]


def _var_key(v: Var):
    return (v.name, v.index)


def formula_pool(predicates: Sequence[Predicate],
                 eq_sorts: Sequence[Sort],
                 var_sorts: Mapping[Var, Sort],
                 depth: int,
                 vacuous: bool = False) -> list[Formula]:
    """All core formulas of height <= depth over the given variables.

    Equality atoms are generated once per unordered variable pair; And is
    generated once per unordered pair of earlier pool members.  Quantifiers
    reuse the same variable supply and skip vacuous binders unless asked.
    """
    vars_by_sort: dict[str, list[Var]] = {}
    for v in sorted(var_sorts, key=_var_key):
        vars_by_sort.setdefault(var_sorts[v].name, []).append(v)

    pool: list[Formula] = []
    position: dict[int, int] = {}

    def add(f: Formula) -> None:
        if id(f) not in position:
            position[id(f)] = len(pool)
            pool.append(f)

    for p in predicates:
        choices = [vars_by_sort.get(s.name, []) for s in p.argument_sorts]
        if any(not c for c in choices):
            continue
        idx = [0] * len(choices)
        while True:
            add(atom(p, tuple(c[i] for c, i in zip(choices, idx))))
            j = len(idx) - 1
            while j >= 0:
                idx[j] += 1
                if idx[j] < len(choices[j]):
                    break
                idx[j] = 0
                j -= 1
            if j < 0:
                break
    for s in eq_sorts:
        vs = vars_by_sort.get(s.name, [])
        for i, v in enumerate(vs):
            for w in vs[i:]:
                add(eq(s, v, w))

    for h in range(1, depth + 1):
        prev = list(pool)
        for f in prev:
            if f.height == h - 1:
                add(not_(f))
        n = len(prev)
        for i in range(n):
            a = prev[i]
            for j in range(i, n):
                b = prev[j]
                if max(a.height, b.height) == h - 1:
                    add(and_(a, b))
        for f in prev:
            if f.height != h - 1:
                continue
            for v in sorted(var_sorts, key=_var_key):
                if vacuous or v in f.free:
                    add(forall(v, var_sorts[v], f))
    return pool


def pool_counts(pool: Sequence[Formula]) -> dict[int, int]:
    out: dict[int, int] = {}
    for f in pool:
        out[f.height] = out.get(f.height, 0) + 1
    return out


def universal_closure(phi: Formula) -> Formula:
    items = sorted(phi.free.items(), key=lambda vs: _var_key(vs[0]))
    return forall_many(items, phi)


def scheme_instance_pool(theory: Theory, scheme: Scheme, depth: int = 1,
                         limit: Optional[int] = None,
                         params: Sequence[tuple[Var, Sort]] = ()
                         ) -> list[Formula]:
    """Admissible instance formulas for a scheme, smallest first.

    params adds free parameter variables beyond the designated instance
    variables; the scheme's closure machinery quantifies them out.
    """
    sig = scheme.instance_signature(theory)
    var_sorts: dict[Var, Sort] = dict(
        zip(scheme.instance_vars(), scheme.instance_sorts()))
    for v, s in params:
        if v in var_sorts:
            raise SchemeError(f"parameter {v} collides with an instance variable")
        var_sorts[v] = s
    out = []
    for phi in formula_pool(sig.predicates, sig.sorts, var_sorts, depth):
        try:
            scheme.admissible(phi)
        except SchemeError:
            continue
        out.append(phi)
        if limit is not None and len(out) >= limit:
            break
    return out
