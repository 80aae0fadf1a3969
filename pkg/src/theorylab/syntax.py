"""Sorted first-order formulas.

Core connectives are forall / and / not plus atoms and per-sort equality;
or / imp / iff / exists are surface forms removed by :func:`desugar`.

All formula nodes are hash-consed: construction goes through the factory
functions (:func:`atom`, :func:`eq`, :func:`and_`, ...), which intern
structurally equal nodes.  Equality on formulas is therefore identity, deep
composites share subterms as DAGs, and dict lookups on nodes are O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .errors import ScopeError, SortError

__all__ = [
    "Sort", "Predicate", "Var",
    "Formula", "Atom", "Eq", "And", "Not", "Forall",
    "Or", "Imp", "Iff", "Exists",
    "atom", "eq", "and_", "not_", "forall", "or_", "imp", "iff", "exists",
    "conj", "disj", "forall_many", "exists_many", "truth",
    "desugar", "substitute", "free_vars", "free_var_sorts", "is_core",
    "is_sentence", "subformulas", "alpha_canonical", "alpha_eq",
    "print_formula", "var_name",
]


@dataclass(frozen=True, order=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Predicate:
    name: str
    argument_sorts: tuple[Sort, ...]

    @property
    def arity(self) -> int:
        return len(self.argument_sorts)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(s.name for s in self.argument_sorts)})"


@dataclass(frozen=True, order=True)
class Var:
    """Variable identifier: a base name plus a numeric freshness suffix.

    Suffix 0 prints as the bare name; suffix k prints as ``name~k``.
    """

    name: str
    index: int = 0

    def __str__(self) -> str:
        return var_name(self)


def var_name(v: Var) -> str:
    return v.name if v.index == 0 else f"{v.name}~{v.index}"


# --------------------------------------------------------------------------
# Formula nodes.  eq=False: identity semantics; interning makes structural
# equality coincide with identity.  `free` maps each free variable to its
# sort, `surface` flags nodes containing sugar, `height` is AST height.

@dataclass(frozen=True, eq=False)
class Formula:
    free: Mapping[Var, Sort] = field(repr=False)
    surface: bool = field(repr=False)
    height: int = field(repr=False)

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True, eq=False)
class Atom(Formula):
    pred: Predicate = None  # type: ignore[assignment]
    args: tuple[Var, ...] = ()


@dataclass(frozen=True, eq=False)
class Eq(Formula):
    sort: Sort = None  # type: ignore[assignment]
    left: Var = None  # type: ignore[assignment]
    right: Var = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class And(Formula):
    left: Formula = None  # type: ignore[assignment]
    right: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Forall(Formula):
    var: Var = None  # type: ignore[assignment]
    sort: Sort = None  # type: ignore[assignment]
    body: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Or(Formula):
    left: Formula = None  # type: ignore[assignment]
    right: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Imp(Formula):
    left: Formula = None  # type: ignore[assignment]
    right: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Iff(Formula):
    left: Formula = None  # type: ignore[assignment]
    right: Formula = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Exists(Formula):
    var: Var = None  # type: ignore[assignment]
    sort: Sort = None  # type: ignore[assignment]
    body: Formula = None  # type: ignore[assignment]


# --------------------------------------------------------------------------
# Interning factories.

_table: dict[tuple, Formula] = {}


def _merge_free(parts: Iterable[Mapping[Var, Sort]]) -> dict[Var, Sort]:
    out: dict[Var, Sort] = {}
    for part in parts:
        for v, s in part.items():
            prev = out.setdefault(v, s)
            if prev != s:
                raise SortError(
                    f"variable {v} used at sorts {prev.name} and {s.name}")
    return out


def atom(pred: Predicate, args: Sequence[Var]) -> Atom:
    args = tuple(args)
    if len(args) != pred.arity:
        raise SortError(
            f"predicate {pred.name} expects {pred.arity} arguments, got {len(args)}")
    key = ("atom", pred, args)
    node = _table.get(key)
    if node is None:
        free = _merge_free(
            {v: s} for v, s in zip(args, pred.argument_sorts))
        node = Atom(free, False, 0, pred, args)
        _table[key] = node
    return node  # type: ignore[return-value]


def eq(sort: Sort, left: Var, right: Var) -> Eq:
    key = ("eq", sort, left, right)
    node = _table.get(key)
    if node is None:
        free = _merge_free([{left: sort}, {right: sort}])
        node = Eq(free, False, 0, sort, left, right)
        _table[key] = node
    return node  # type: ignore[return-value]


def _binary(cls, tag: str, left: Formula, right: Formula) -> Formula:
    key = (tag, id(left), id(right))
    node = _table.get(key)
    if node is None:
        free = _merge_free([left.free, right.free])
        surface = cls is not And or left.surface or right.surface
        node = cls(free, surface, 1 + max(left.height, right.height), left, right)
        _table[key] = node
    return node


def and_(left: Formula, right: Formula) -> And:
    return _binary(And, "and", left, right)  # type: ignore[return-value]


def or_(left: Formula, right: Formula) -> Or:
    return _binary(Or, "or", left, right)  # type: ignore[return-value]


def imp(left: Formula, right: Formula) -> Imp:
    return _binary(Imp, "imp", left, right)  # type: ignore[return-value]


def iff(left: Formula, right: Formula) -> Iff:
    return _binary(Iff, "iff", left, right)  # type: ignore[return-value]


def not_(body: Formula) -> Not:
    key = ("not", id(body))
    node = _table.get(key)
    if node is None:
        node = Not(body.free, body.surface, 1 + body.height, body)
        _table[key] = node
    return node  # type: ignore[return-value]


def _quant(cls, tag: str, var: Var, sort: Sort, body: Formula) -> Formula:
    bound = body.free.get(var)
    if bound is not None and bound != sort:
        raise SortError(
            f"cannot bind {var} at sort {sort.name}: occurs at sort {bound.name}")
    key = (tag, var, sort, id(body))
    node = _table.get(key)
    if node is None:
        free = dict(body.free)
        free.pop(var, None)
        surface = cls is not Forall or body.surface
        node = cls(free, surface, 1 + body.height, var, sort, body)
        _table[key] = node
    return node


def forall(var: Var, sort: Sort, body: Formula) -> Forall:
    return _quant(Forall, "forall", var, sort, body)  # type: ignore[return-value]


def exists(var: Var, sort: Sort, body: Formula) -> Exists:
    return _quant(Exists, "exists", var, sort, body)  # type: ignore[return-value]


# --------------------------------------------------------------------------
# Convenience builders.

def conj(parts: Sequence[Formula], empty: Optional[Formula] = None) -> Formula:
    """Right-nested conjunction; `empty` (a tautology) for the empty list."""
    parts = list(parts)
    if not parts:
        if empty is None:
            raise ValueError("empty conjunction with no default")
        return empty
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = and_(p, out)
    return out


def disj(parts: Sequence[Formula], empty: Optional[Formula] = None) -> Formula:
    parts = list(parts)
    if not parts:
        if empty is None:
            raise ValueError("empty disjunction with no default")
        return empty
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = or_(p, out)
    return out


def forall_many(pairs: Sequence[tuple[Var, Sort]], body: Formula) -> Formula:
    for v, s in reversed(pairs):
        body = forall(v, s, body)
    return body


def exists_many(pairs: Sequence[tuple[Var, Sort]], body: Formula) -> Formula:
    for v, s in reversed(pairs):
        body = exists(v, s, body)
    return body


def truth(var: Var, sort: Sort) -> Eq:
    """The tautology `var = var` (the core AST has no boolean constants)."""
    return eq(sort, var, var)


# --------------------------------------------------------------------------
# Queries.

def free_var_sorts(phi: Formula) -> dict[Var, Sort]:
    return dict(phi.free)


def free_vars(phi: Formula) -> frozenset[Var]:
    return frozenset(phi.free)


def is_core(phi: Formula) -> bool:
    return not phi.surface


def is_sentence(phi: Formula) -> bool:
    return not phi.free


def all_vars(phi: Formula) -> frozenset[Var]:
    """Every variable occurring in phi, free or bound."""
    out: set[Var] = set()
    for node in subformulas(phi):
        if isinstance(node, Atom):
            out.update(node.args)
        elif isinstance(node, Eq):
            out.add(node.left)
            out.add(node.right)
        elif isinstance(node, (Forall, Exists)):
            out.add(node.var)
    return frozenset(out)


def subformulas(phi: Formula) -> Iterator[Formula]:
    """All distinct subformula nodes (DAG-aware, postorder)."""
    seen: set[int] = set()
    stack: list[tuple[Formula, bool]] = [(phi, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in _children(node):
            stack.append((child, False))


def _children(node: Formula) -> tuple[Formula, ...]:
    if isinstance(node, (And, Or, Imp, Iff)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (Forall, Exists)):
        return (node.body,)
    return ()


# --------------------------------------------------------------------------
# Desugaring.  or(a,b) = not(and(not a, not b)); imp(a,b) = or(not a, b);
# iff(a,b) = and(imp(a,b), imp(b,a)); exists = not-forall-not.

def desugar(phi: Formula) -> Formula:
    memo: dict[int, Formula] = {}

    def go(f: Formula) -> Formula:
        if not f.surface:
            return f
        out = memo.get(id(f))
        if out is not None:
            return out
        if isinstance(f, And):
            out = and_(go(f.left), go(f.right))
        elif isinstance(f, Not):
            out = not_(go(f.body))
        elif isinstance(f, Forall):
            out = forall(f.var, f.sort, go(f.body))
        elif isinstance(f, Or):
            out = not_(and_(not_(go(f.left)), not_(go(f.right))))
        elif isinstance(f, Imp):
            out = not_(and_(go(f.left), not_(go(f.right))))
        elif isinstance(f, Iff):
            left, right = go(f.left), go(f.right)
            fwd = not_(and_(left, not_(right)))
            bwd = not_(and_(right, not_(left)))
            out = and_(fwd, bwd)
        elif isinstance(f, Exists):
            out = not_(forall(f.var, f.sort, not_(go(f.body))))
        else:  # pragma: no cover - atoms are never surface
            out = f
        memo[id(f)] = out
        return out

    return go(phi)


# --------------------------------------------------------------------------
# Substitution (variables for variables, capture-avoiding).

def substitute(phi: Formula, mapping: Mapping[Var, Var]) -> Formula:
    """Replace free occurrences per `mapping`, renaming binders on capture.

    Renamed binders take the smallest free numeric suffix, so the result is
    deterministic and independent of any global state.
    """
    return _subst(phi, dict(mapping), {})


def _subst(phi: Formula, mapping: dict[Var, Var], memo: dict) -> Formula:
    active = {v: w for v, w in mapping.items() if v in phi.free and v != w}
    if not active:
        return phi
    key = (id(phi), tuple(sorted(active.items())))
    out = memo.get(key)
    if out is not None:
        return out
    if isinstance(phi, Atom):
        out = atom(phi.pred, tuple(active.get(a, a) for a in phi.args))
    elif isinstance(phi, Eq):
        out = eq(phi.sort, active.get(phi.left, phi.left),
                 active.get(phi.right, phi.right))
    elif isinstance(phi, (And, Or, Imp, Iff)):
        mk = {And: and_, Or: or_, Imp: imp, Iff: iff}[type(phi)]
        out = mk(_subst(phi.left, active, memo), _subst(phi.right, active, memo))
    elif isinstance(phi, Not):
        out = not_(_subst(phi.body, active, memo))
    elif isinstance(phi, (Forall, Exists)):
        mk = forall if isinstance(phi, Forall) else exists
        v, body = phi.var, phi.body
        inner = {x: w for x, w in active.items() if x != v}
        targets = {w for x, w in inner.items() if x in body.free}
        if v in targets:
            avoid = set(targets) | set(body.free) | set(inner)
            v2 = _fresh_like(v, avoid)
            inner[v] = v2
            out = mk(v2, phi.sort, _subst(body, inner, memo))
        else:
            out = mk(v, phi.sort, _subst(body, inner, memo))
    else:  # pragma: no cover
        raise TypeError(type(phi))
    memo[key] = out
    return out


def _fresh_like(v: Var, avoid: set[Var]) -> Var:
    k = v.index + 1
    while Var(v.name, k) in avoid:
        k += 1
    return Var(v.name, k)


def rename_bound(phi: Formula, taken: Iterable[Var]) -> Formula:
    """Rename every binder so no bound variable appears in `taken` or shadows.

    Used by translation to keep instantiated component formulas from
    capturing the argument variables being plugged in.
    """
    taken_set = set(taken)

    def go(f: Formula, env: dict[Var, Var], used: set[Var]) -> Formula:
        if isinstance(f, Atom):
            return atom(f.pred, tuple(env.get(a, a) for a in f.args))
        if isinstance(f, Eq):
            return eq(f.sort, env.get(f.left, f.left), env.get(f.right, f.right))
        if isinstance(f, (And, Or, Imp, Iff)):
            mk = {And: and_, Or: or_, Imp: imp, Iff: iff}[type(f)]
            return mk(go(f.left, env, used), go(f.right, env, used))
        if isinstance(f, Not):
            return not_(go(f.body, env, used))
        if isinstance(f, (Forall, Exists)):
            mk = forall if isinstance(f, Forall) else exists
            v = f.var
            if v in used:
                v2 = _fresh_like(v, used | set(f.body.free))
            else:
                v2 = v
            used.add(v2)
            env2 = dict(env)
            env2[v] = v2
            return mk(v2, f.sort, go(f.body, env2, used))
        raise TypeError(type(f))  # pragma: no cover

    return go(phi, {}, taken_set | set(phi.free))


# --------------------------------------------------------------------------
# Alpha-equivalence via canonical renaming: bound variables are renamed to
# $1, $2, ... in traversal order; free variables keep their names.

def alpha_canonical(phi: Formula) -> Formula:
    counter = [0]

    def go(f: Formula, env: dict[Var, Var]) -> Formula:
        if isinstance(f, Atom):
            return atom(f.pred, tuple(env.get(a, a) for a in f.args))
        if isinstance(f, Eq):
            return eq(f.sort, env.get(f.left, f.left), env.get(f.right, f.right))
        if isinstance(f, (And, Or, Imp, Iff)):
            mk = {And: and_, Or: or_, Imp: imp, Iff: iff}[type(f)]
            return mk(go(f.left, env), go(f.right, env))
        if isinstance(f, Not):
            return not_(go(f.body, env))
        if isinstance(f, (Forall, Exists)):
            mk = forall if isinstance(f, Forall) else exists
            counter[0] += 1
            v2 = Var("$", counter[0])
            env2 = dict(env)
            env2[f.var] = v2
            return mk(v2, f.sort, go(f.body, env2))
        raise TypeError(type(f))  # pragma: no cover

    return go(phi, {})


def alpha_eq(a: Formula, b: Formula) -> bool:
    return alpha_canonical(a) is alpha_canonical(b)


# --------------------------------------------------------------------------
# Printing (the formula half of the DSL; the reader lives in dsl.py).

_KEYWORD = {
    And: "and", Or: "or", Imp: "imp", Iff: "iff",
}


def print_formula(phi: Formula) -> str:
    out: list[str] = []
    _emit(phi, out)
    return "".join(out)


def _emit(phi: Formula, out: list[str]) -> None:
    stack: list[object] = [phi]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        f = item
        if isinstance(f, Atom):
            out.append("(pred " + f.pred.name)
            for a in f.args:
                out.append(" " + var_name(a))
            out.append(")")
        elif isinstance(f, Eq):
            out.append(f"(= {f.sort.name} {var_name(f.left)} {var_name(f.right)})")
        elif isinstance(f, (And, Or, Imp, Iff)):
            out.append(f"({_KEYWORD[type(f)]} ")
            stack.extend([")", f.right, " ", f.left])
        elif isinstance(f, Not):
            out.append("(not ")
            stack.extend([")", f.body])
        elif isinstance(f, (Forall, Exists)):
            kw = "forall" if isinstance(f, Forall) else "exists"
            out.append(f"({kw} ({var_name(f.var)} {f.sort.name}) ")
            stack.extend([")", f.body])
        else:  # pragma: no cover
            raise TypeError(type(f))
