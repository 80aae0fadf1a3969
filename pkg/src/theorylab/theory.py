"""Theories: signatures, axioms, axiom schemes, and the flattening functors.

A theory is finitely many sorts, predicates, closed core axioms, and scheme
objects.  Schemes are referenced by built-in kind (comprehension, separation,
guarded comprehension, forced axioms) and know how to instantiate themselves
on an admissible formula; bounded instance pools live in pool.py.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from .errors import SchemeError, SortError, TheoryError
from . import syntax as sy
from .syntax import (
    And, Atom, Eq, Exists, Forall, Formula, Iff, Imp, Not, Or, Predicate,
    Sort, Var, and_, atom, conj, desugar, eq, exists, exists_many, forall,
    forall_many, iff, imp, not_, or_, truth,
)

__all__ = [
    "Signature", "Theory", "Scheme", "PcComprehension", "PsSeparation",
    "PcStComprehension", "RelativizedScheme", "transform_formula",
    "flatten", "flatten_overlapping", "disjoint_union", "trivial_theory",
    "ensure_one_sorted", "validate_theory", "fresh_name", "sort_pred_name",
]


@dataclass(frozen=True)
class Signature:
    sorts: tuple[Sort, ...]
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        names = [s.name for s in self.sorts]
        if len(set(names)) != len(names):
            raise TheoryError(f"duplicate sort names: {names}")
        pnames = [p.name for p in self.predicates]
        if len(set(pnames)) != len(pnames):
            raise TheoryError(f"duplicate predicate names: {pnames}")
        for p in self.predicates:
            for s in p.argument_sorts:
                if s not in self.sorts:
                    raise TheoryError(
                        f"predicate {p.name} uses undeclared sort {s.name}")

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise TheoryError(f"no predicate named {name}")

    def has_predicate(self, name: str) -> bool:
        return any(p.name == name for p in self.predicates)

    def sort(self, name: str) -> Sort:
        for s in self.sorts:
            if s.name == name:
                return s
        raise TheoryError(f"no sort named {name}")


class Scheme:
    """Base for axiom schemes.  Subclasses define kind, admissible, instantiate."""

    kind: str = "?"

    def admissible(self, phi: Formula) -> None:
        raise NotImplementedError

    def instantiate(self, phi: Formula) -> Formula:
        raise NotImplementedError

    def instance_vars(self) -> tuple[Var, ...]:
        raise NotImplementedError

    def instance_sorts(self) -> tuple[Sort, ...]:
        """Sorts of the designated instance variables, in order."""
        raise NotImplementedError

    def instance_signature(self, theory: "Theory") -> "Signature":
        """Signature the instance formula is written over."""
        return theory.signature


@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    axioms: tuple[Formula, ...]
    schemes: tuple[Scheme, ...] = ()
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def sorts(self) -> tuple[Sort, ...]:
        return self.signature.sorts

    @property
    def predicates(self) -> tuple[Predicate, ...]:
        return self.signature.predicates

    def sole_sort(self) -> Sort:
        if len(self.signature.sorts) != 1:
            raise TheoryError(f"theory {self.name} is not one-sorted")
        return self.signature.sorts[0]


def validate_theory(t: Theory) -> None:
    """Check axioms are closed, core, and well-sorted over the signature."""
    known = set(t.signature.predicates)
    for i, ax in enumerate(t.axioms):
        if not sy.is_core(ax):
            raise TheoryError(f"axiom {i + 1} of {t.name} is not desugared")
        if ax.free:
            raise TheoryError(f"axiom {i + 1} of {t.name} is open: {ax}")
        for node in sy.subformulas(ax):
            if isinstance(node, Atom) and node.pred not in known:
                raise TheoryError(
                    f"axiom {i + 1} of {t.name} uses foreign predicate "
                    f"{node.pred}")
            if isinstance(node, Forall) and node.sort not in t.signature.sorts:
                raise TheoryError(
                    f"axiom {i + 1} of {t.name} quantifies over undeclared "
                    f"sort {node.sort.name}")
            if isinstance(node, Eq) and node.sort not in t.signature.sorts:
                raise TheoryError(
                    f"axiom {i + 1} of {t.name} has equality at undeclared "
                    f"sort {node.sort.name}")


def fresh_name(base: str, taken: set[str], warn: Optional[str] = None) -> str:
    """`base` if free, else base_2, base_3, ...; optionally warn on collision."""
    if base not in taken:
        return base
    k = 2
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    if warn:
        warnings.warn(f"{warn}: renamed {base} to {name}", stacklevel=3)
    return name


def sort_pred_name(sort: Sort) -> str:
    return f"sort_{sort.name}"


# --------------------------------------------------------------------------
# Structural transformation shared by flattening, relativization, functors.

def transform_formula(
    phi: Formula,
    sort_map: Optional[Mapping[Sort, Sort]] = None,
    pred_map: Optional[Mapping[Predicate, Predicate]] = None,
    guards: Optional[Mapping[Sort, Callable[[Var], Formula]]] = None,
) -> Formula:
    """Rewrite sorts, predicates, and quantifier guards in one pass.

    A quantifier over sort s with guards[s] = g becomes a quantifier over
    sort_map[s] whose body is guarded: forall v. not(g(v) and not body).
    Guards are looked up by the original sort.
    """
    sort_map = sort_map or {}
    pred_map = pred_map or {}
    guards = guards or {}
    memo: dict[int, Formula] = {}

    def go(f: Formula) -> Formula:
        out = memo.get(id(f))
        if out is not None:
            return out
        if isinstance(f, Atom):
            p = pred_map.get(f.pred, f.pred)
            out = atom(p, f.args)
        elif isinstance(f, Eq):
            out = eq(sort_map.get(f.sort, f.sort), f.left, f.right)
        elif isinstance(f, And):
            out = and_(go(f.left), go(f.right))
        elif isinstance(f, Or):
            out = or_(go(f.left), go(f.right))
        elif isinstance(f, Imp):
            out = imp(go(f.left), go(f.right))
        elif isinstance(f, Iff):
            out = iff(go(f.left), go(f.right))
        elif isinstance(f, Not):
            out = not_(go(f.body))
        elif isinstance(f, (Forall, Exists)):
            body = go(f.body)
            new_sort = sort_map.get(f.sort, f.sort)
            guard = guards.get(f.sort)
            if guard is not None:
                g = guard(f.var)
                if isinstance(f, Forall):
                    body = not_(and_(g, not_(body)))
                else:
                    body = and_(g, body)
            mk = forall if isinstance(f, Forall) else exists
            out = mk(f.var, new_sort, body)
        else:  # pragma: no cover
            raise TypeError(type(f))
        memo[id(f)] = out
        return out

    return go(phi)


# --------------------------------------------------------------------------
# Built-in scheme kinds.

def _check_quantifiers_on(phi: Formula, sort: Sort, what: str) -> None:
    for node in sy.subformulas(phi):
        if isinstance(node, (Forall, Exists)) and node.sort != sort:
            raise SchemeError(
                f"{what}: quantifier over {node.sort.name}, "
                f"only {sort.name} allowed")


def _params_of(phi: Formula, skip: Sequence[Var]) -> list[tuple[Var, Sort]]:
    skipped = set(skip)
    items = [(v, s) for v, s in phi.free.items() if v not in skipped]
    items.sort(key=lambda vs: (vs[0].name, vs[0].index))
    return items


def _fresh_var(base: str, phi: Formula) -> Var:
    names = {v for v in phi.free}
    k = 0
    while Var(base, k) in names:
        k += 1
    return Var(base, k)


@dataclass(frozen=True)
class PcComprehension(Scheme):
    """Comprehension for one class sort: every definable k-ary class exists.

    Instances: close(exists X. forall x1..xk. member(x.., X) <-> phi) where
    phi has quantifiers over the object sort only and X is not free in phi.
    """

    object_sort: Sort
    class_sort: Sort
    member: Predicate
    kind = "pc-comprehension"

    @property
    def arity(self) -> int:
        return self.member.arity - 1

    def instance_vars(self) -> tuple[Var, ...]:
        return tuple(Var("x", i + 1) for i in range(self.arity))

    def instance_sorts(self) -> tuple[Sort, ...]:
        return (self.object_sort,) * self.arity

    def admissible(self, phi: Formula) -> None:
        _check_quantifiers_on(phi, self.object_sort, self.kind)
        for v, s in phi.free.items():
            if v in self.instance_vars() and s != self.object_sort:
                raise SchemeError(
                    f"{self.kind}: instance variable {v} must have sort "
                    f"{self.object_sort.name}")

    def instantiate(self, phi: Formula) -> Formula:
        self.admissible(phi)
        xs = self.instance_vars()
        cls_var = _fresh_var("X", phi)
        body = iff(atom(self.member, xs + (cls_var,)), phi)
        inner = exists(cls_var, self.class_sort,
                       forall_many([(x, self.object_sort) for x in xs], body))
        return desugar(forall_many(_params_of(phi, xs), inner))


@dataclass(frozen=True)
class PsSeparation(Scheme):
    """Separation: definable subclasses of (tuples drawn from) a class exist."""

    object_sort: Sort
    class_sort: Sort
    member: Predicate
    container_sort: Sort
    container_member: Predicate
    kind = "ps-separation"

    @property
    def arity(self) -> int:
        return self.member.arity - 1

    def instance_vars(self) -> tuple[Var, ...]:
        return tuple(Var("x", i + 1) for i in range(self.arity))

    def instance_sorts(self) -> tuple[Sort, ...]:
        return (self.object_sort,) * self.arity

    def admissible(self, phi: Formula) -> None:
        _check_quantifiers_on(phi, self.object_sort, self.kind)

    def instantiate(self, phi: Formula) -> Formula:
        self.admissible(phi)
        xs = self.instance_vars()
        box = _fresh_var("C", phi)
        out = _fresh_var("Y", phi)
        inside = conj([atom(self.container_member, (x, box)) for x in xs])
        body = iff(atom(self.member, xs + (out,)), and_(phi, inside))
        inner = forall(box, self.container_sort,
                       exists(out, self.class_sort,
                              forall_many([(x, self.object_sort) for x in xs],
                                          body)))
        return desugar(forall_many(_params_of(phi, xs), inner))


def _strip_double_not(f: Formula) -> Formula:
    while isinstance(f, Not) and isinstance(f.body, Not):
        f = f.body.body
    return f


@dataclass(frozen=True)
class PcStComprehension(Scheme):
    """Guarded comprehension: classes of self-singletons defined by guarded phi.

    Every quantifier inside phi must range over self-singletons, i.e. each
    forall body must have the shape not(sng(v) and ...), which covers both
    the guarded-forall and guarded-exists idioms.
    """

    sort: Sort
    sng: Predicate
    member: Predicate
    kind = "pcst-comprehension"

    def instance_vars(self) -> tuple[Var, ...]:
        return (Var("y", 1),)

    def instance_sorts(self) -> tuple[Sort, ...]:
        return (self.sort,)

    def admissible(self, phi: Formula) -> None:
        core = desugar(phi)
        for node in sy.subformulas(core):
            if isinstance(node, Forall):
                body = _strip_double_not(node.body)
                ok = (isinstance(body, Not)
                      and isinstance(g := _strip_double_not(body.body), And)
                      and isinstance(g2 := _strip_double_not(g.left), Atom)
                      and g2.pred == self.sng and g2.args == (node.var,))
                if not ok:
                    raise SchemeError(
                        f"{self.kind}: unguarded quantifier over {node.var}")

    def instantiate(self, phi: Formula) -> Formula:
        self.admissible(phi)
        (y,) = self.instance_vars()
        box = _fresh_var("w", phi)
        body = iff(atom(self.member, (y, box)),
                   and_(atom(self.sng, (y,)), phi))
        inner = exists(box, self.sort, forall(y, self.sort, body))
        return desugar(forall_many(_params_of(phi, (y,)), inner))


@dataclass(frozen=True)
class RelativizedScheme(Scheme):
    """A scheme carried through flattening: instances are guard-relativized."""

    inner: Scheme
    flat_sort: Sort
    sort_map: tuple[tuple[Sort, Sort], ...]
    guard_preds: tuple[tuple[Sort, Predicate], ...]
    pred_map: tuple[tuple[Predicate, Predicate], ...]
    kind = "relativized"

    def instance_vars(self) -> tuple[Var, ...]:
        return self.inner.instance_vars()

    def instance_sorts(self) -> tuple[Sort, ...]:
        return self.inner.instance_sorts()

    def instance_signature(self, theory: "Theory") -> Signature:
        return Signature(tuple(s for s, _ in self.sort_map),
                         tuple(p for p, _ in self.pred_map))

    def admissible(self, phi: Formula) -> None:
        self.inner.admissible(phi)

    def relativize(self, phi: Formula) -> Formula:
        guards = {s: (lambda v, p=p: atom(p, (v,))) for s, p in self.guard_preds}
        return transform_formula(
            phi, dict(self.sort_map), dict(self.pred_map), guards)

    def instantiate(self, phi: Formula) -> Formula:
        return self.relativize(self.inner.instantiate(phi))


# --------------------------------------------------------------------------
# Flattening: one sort, unary sort predicates, guarded quantifiers.

def flatten(t: Theory) -> Theory:
    """Collapse a sorted theory onto one sort with disjoint sort predicates."""
    return _flatten(t, disjoint=True)


def flatten_overlapping(t: Theory) -> Theory:
    """Flattening without the pairwise-disjointness axioms."""
    return _flatten(t, disjoint=False)


def _flatten(t: Theory, disjoint: bool) -> Theory:
    if len(t.signature.sorts) == 1:
        return t
    taken_sorts = {s.name for s in t.signature.sorts}
    univ = Sort(fresh_name("univ", taken_sorts))
    taken = {p.name for p in t.signature.predicates}
    sort_preds: dict[Sort, Predicate] = {}
    for s in t.signature.sorts:
        name = fresh_name(sort_pred_name(s), taken, f"flatten({t.name})")
        taken.add(name)
        sort_preds[s] = Predicate(name, (univ,))

    pred_map = {
        p: Predicate(p.name, (univ,) * p.arity) for p in t.signature.predicates
    }
    sort_map = {s: univ for s in t.signature.sorts}
    guards = {s: (lambda v, p=sort_preds[s]: atom(p, (v,)))
              for s in t.signature.sorts}

    axioms = [transform_formula(ax, sort_map, pred_map, guards)
              for ax in t.axioms]

    x = Var("x")
    axioms.append(desugar(forall(x, univ, sy.disj(
        [atom(sort_preds[s], (x,)) for s in t.signature.sorts]))))
    if disjoint:
        for i, s1 in enumerate(t.signature.sorts):
            for s2 in t.signature.sorts[i + 1:]:
                axioms.append(desugar(forall(x, univ, not_(
                    and_(atom(sort_preds[s1], (x,)),
                         atom(sort_preds[s2], (x,)))))))
    for s in t.signature.sorts:
        axioms.append(desugar(exists(x, univ, atom(sort_preds[s], (x,)))))
    for p in t.signature.predicates:
        args = tuple(Var("x", i + 1) for i in range(p.arity))
        guard = conj([atom(sort_preds[s], (v,))
                      for v, s in zip(args, p.argument_sorts)])
        axioms.append(desugar(forall_many(
            [(v, univ) for v in args],
            imp(atom(pred_map[p], args), guard))))

    schemes = tuple(
        RelativizedScheme(
            inner=s,
            flat_sort=univ,
            sort_map=tuple(sort_map.items()),
            guard_preds=tuple(sort_preds.items()),
            pred_map=tuple(pred_map.items()),
        )
        for s in t.schemes
    )
    sig = Signature((univ,), tuple(pred_map[p] for p in t.signature.predicates)
                    + tuple(sort_preds[s] for s in t.signature.sorts))
    suffix = "-flat" if disjoint else "-over"
    meta = {
        "flat_sort": univ,
        "sort_preds": {s.name: sort_preds[s] for s in t.signature.sorts},
        "original_sorts": t.signature.sorts,
        "pred_map": {p.name: pred_map[p] for p in t.signature.predicates},
    }
    return Theory(t.name + suffix, sig, tuple(axioms), schemes, meta)


def ensure_one_sorted(t: Theory) -> Theory:
    return t if len(t.signature.sorts) == 1 else flatten(t)


# --------------------------------------------------------------------------
# Disjoint union and the trivial theory.

def disjoint_union(t: Theory, u: Theory) -> Theory:
    """Two-sorted union of one-sorted theories, signatures renamed apart."""
    st, su = t.sole_sort(), u.sole_sort()
    left, right = Sort("left"), Sort("right")
    taken: set[str] = set()
    pmap_t: dict[Predicate, Predicate] = {}
    for p in t.signature.predicates:
        name = fresh_name(p.name, taken, f"disjoint_union({t.name},{u.name})")
        taken.add(name)
        pmap_t[p] = Predicate(name, (left,) * p.arity)
    pmap_u: dict[Predicate, Predicate] = {}
    for p in u.signature.predicates:
        name = fresh_name(p.name, taken, f"disjoint_union({t.name},{u.name})")
        taken.add(name)
        pmap_u[p] = Predicate(name, (right,) * p.arity)

    axioms = [transform_formula(ax, {st: left}, pmap_t) for ax in t.axioms]
    axioms += [transform_formula(ax, {su: right}, pmap_u) for ax in u.axioms]
    if t.schemes or u.schemes:
        raise TheoryError("disjoint_union does not carry schemes")
    sig = Signature((left, right),
                    tuple(pmap_t.values()) + tuple(pmap_u.values()))
    meta = {"left_sort": left, "right_sort": right}
    return Theory(f"{t.name}+{u.name}", sig, tuple(axioms), (), meta)


def trivial_theory() -> Theory:
    """One sort, no predicates, and the single axiom forall x. x = x."""
    obj = Sort("obj")
    x = Var("x")
    return Theory("trivial", Signature((obj,), ()),
                  (forall(x, obj, truth(x, obj)),))
