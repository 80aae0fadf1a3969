"""Kripke semantics as a theory functor.

km(T) axiomatizes Kripke models of a one-sorted theory T: a preordered set
of worlds, antitone nonempty domains, domain-confined persistent relation
tables, and one forced axiom per T axiom.  force() is the world-relative
truth translation; KripkeDatum is the concrete finite-model counterpart,
convertible to a flat two-sorted structure on which translated formulas can
be evaluated directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ModelError, TheoryError
from . import _pyeval
from .evaluator import K_ATOM, K_EQ, K_AND, K_NOT, K_FORALL, eval_formula
from .structures import FiniteStructure
from .syntax import (And, Atom, Eq, Forall, Formula, Not, Predicate, Sort,
                     Var, all_vars, and_, atom, desugar, forall, not_,
                     substitute)
from .theory import (Scheme, Signature, Theory, ensure_one_sorted, fresh_name)

__all__ = [
    "ForcingMap", "km", "force", "KmForcedScheme",
    "KripkeDatum", "make_kripke", "validate_kripke", "kripke_to_flat",
    "persistence_report", "PersistenceReport",
    "enumerate_preorders", "frame_below_masks",
    "standard_kripke", "sweep_persistence",
]


@dataclass(frozen=True)
class ForcingMap:
    """Signature bookkeeping for a forcing theory: where everything went."""

    world_sort: Sort
    elem_sort: Sort
    le: Predicate
    dom: Predicate
    eq_at: Predicate
    starred: tuple[tuple[str, Predicate], ...]
    base_sort: Sort
    literal_negation: bool = False

    def starred_pred(self, name: str) -> Predicate:
        for n, p in self.starred:
            if n == name:
                return p
        raise TheoryError(f"no world-indexed table for predicate {name}")


def km(t: Theory, literal_negation: bool = False) -> Theory:
    """The theory of Kripke models of a one-sorted theory.

    Frame axioms: reflexive transitive order, nonempty antitone domains,
    confinement and persistence for every world-indexed table (including
    the domain-restricted equality table), then one forced axiom per T
    axiom and a forced scheme per T scheme.
    """
    t = ensure_one_sorted(t)
    base_sort = t.sole_sort()
    world = Sort("world")
    elem = Sort("elem")
    pred_names: set[str] = set()

    def fresh_pred(base: str, args: tuple[Sort, ...]) -> Predicate:
        name = fresh_name(base, pred_names, warn="predicate")
        pred_names.add(name)
        return Predicate(name, args)

    le = fresh_pred("le", (world, world))
    dom = fresh_pred("dom", (world, elem))
    starred = []
    for p in t.signature.predicates:
        starred.append((p.name, fresh_pred(
            f"{p.name}_at", (world,) + (elem,) * p.arity)))
    eq_at = fresh_pred("eq_at", (world, elem, elem))
    fm = ForcingMap(world, elem, le, dom, eq_at, tuple(starred), base_sort,
                    literal_negation)

    p_, q_, r_ = Var("p"), Var("q"), Var("r")
    x_ = Var("x")
    axioms = [
        desugar(forall(p_, world, atom(le, (p_, p_)))),
        _closed_imp([(p_, world), (q_, world), (r_, world)],
                    and_(atom(le, (r_, q_)), atom(le, (q_, p_))),
                    atom(le, (r_, p_))),
        desugar(forall(p_, world, _exists(x_, elem, atom(dom, (p_, x_))))),
        _closed_imp([(p_, world), (q_, world), (x_, elem)],
                    and_(atom(le, (q_, p_)), atom(dom, (p_, x_))),
                    atom(dom, (q_, x_))),
    ]
    for _, sp in starred + [("=", eq_at)]:
        k = sp.arity - 1
        xs = tuple(Var("x", i + 1) for i in range(k))
        pairs = [(p_, world)] + [(x, elem) for x in xs]
        confined = _conj([atom(dom, (p_, x)) for x in xs])
        axioms.append(_closed_imp(pairs, atom(sp, (p_,) + xs), confined))
        pairs2 = [(p_, world), (q_, world)] + [(x, elem) for x in xs]
        axioms.append(_closed_imp(
            pairs2,
            and_(atom(le, (q_, p_)), atom(sp, (p_,) + xs)),
            atom(sp, (q_,) + xs)))

    for ax in t.axioms:
        axioms.append(desugar(forall(p_, world, force_with(fm, ax, p_))))

    schemes = tuple(KmForcedScheme(inner, fm, t) for inner in t.schemes)

    return Theory(
        name=f"km-{t.name}",
        signature=Signature(
            (world, elem),
            (le, dom) + tuple(sp for _, sp in starred) + (eq_at,)),
        axioms=tuple(axioms),
        schemes=schemes,
        meta={**t.meta, "km": fm, "km_base": t},
    )


def _exists(v: Var, s: Sort, body: Formula) -> Formula:
    return not_(forall(v, s, not_(body)))


def _conj(parts: Sequence[Formula]) -> Formula:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = and_(p, out)
    return out


def _closed_imp(pairs, antecedent: Formula, consequent: Formula) -> Formula:
    body = not_(and_(antecedent, not_(consequent)))
    out = body
    for v, s in reversed(pairs):
        out = forall(v, s, out)
    return desugar(out)


def force(t_km: Theory, phi: Formula, world_var: Var) -> Formula:
    """Translate a base-theory formula to its forcing at world_var."""
    fm = t_km.meta.get("km")
    if fm is None:
        raise TheoryError(f"{t_km.name} is not a forcing theory")
    return force_with(fm, phi, world_var)


def force_with(fm: ForcingMap, phi: Formula, world_var: Var) -> Formula:
    """Forcing clauses, structurally:

    atom:   every stronger world has a yet stronger one in the table;
    and:    both conjuncts forced here;
    not:    no stronger world forces the body (the literal variant reads
            the body at the outer world instead);
    forall: forced for every domain element of every stronger world;
    equality routes through the world-indexed equality table like an atom.
    """
    phi = desugar(phi)
    used = all_vars(phi) | {world_var}
    counter = 1 + max((v.index for v in used if v.name == "q"), default=-1)

    def next_q() -> Var:
        nonlocal counter
        v = Var("q", counter)
        counter += 1
        return v

    pivot = next_q()
    world, elem = fm.world_sort, fm.elem_sort
    le = fm.le

    def ball(below: Var, body_of) -> Formula:
        # (forall q below) body
        q = next_q()
        return forall(q, world, not_(and_(atom(le, (q, below)),
                                          not_(body_of(q)))))

    def bexists(below: Var, body_of) -> Formula:
        q = next_q()
        return not_(forall(q, world, not_(and_(atom(le, (q, below)),
                                               body_of(q)))))

    memo: dict[int, Formula] = {}

    def at(node: Formula, w: Var) -> Formula:
        built = go(node)
        return substitute(built, {pivot: w}) if w is not pivot else built

    def go(node: Formula) -> Formula:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Atom):
            sp = fm.starred_pred(node.pred.name)
            out = ball(pivot, lambda q: bexists(
                q, lambda r: atom(sp, (r,) + node.args)))
        elif isinstance(node, Eq):
            out = ball(pivot, lambda q: bexists(
                q, lambda r: atom(fm.eq_at, (r, node.left, node.right))))
        elif isinstance(node, And):
            out = and_(go(node.left), go(node.right))
        elif isinstance(node, Not):
            if fm.literal_negation:
                out = ball(pivot, lambda q: not_(go(node.body)))
            else:
                out = ball(pivot, lambda q: not_(at(node.body, q)))
        elif isinstance(node, Forall):
            if node.sort != fm.base_sort:
                raise TheoryError(
                    f"cannot force a quantifier over sort {node.sort.name}")
            out = ball(pivot, lambda q: forall(
                node.var, elem,
                not_(and_(atom(fm.dom, (q, node.var)),
                          not_(at(node.body, q))))))
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[id(node)] = out
        return out

    return at(phi, world_var)


@dataclass(frozen=True)
class KmForcedScheme(Scheme):
    """Scheme of a forcing theory: forced instances of a base-theory scheme."""

    inner: Scheme
    fm: ForcingMap
    base: Theory
    kind = "km-forced-axioms"

    def admissible(self, phi: Formula) -> None:
        self.inner.admissible(phi)

    def instantiate(self, phi: Formula) -> Formula:
        sentence = self.inner.instantiate(phi)
        p = Var("p")
        return desugar(forall(p, self.fm.world_sort,
                              force_with(self.fm, sentence, p)))

    def instance_vars(self) -> tuple[Var, ...]:
        return self.inner.instance_vars()

    def instance_sorts(self) -> tuple[Sort, ...]:
        return self.inner.instance_sorts()

    def instance_signature(self, theory: Theory) -> Signature:
        return self.inner.instance_signature(self.base)


# --------------------------------------------------------------------------
# Concrete Kripke data.

@dataclass(frozen=True)
class KripkeDatum:
    """A finite Kripke model datum: worlds, order, domains, tables.

    le pairs read (q, p) = "q is at least as strong as p".  Tables are keyed
    by base-theory predicate name; rows are element tuples per world.
    """

    worlds: tuple[str, ...]
    le: tuple[tuple[str, str], ...]
    domains: tuple[tuple[str, tuple[str, ...]], ...]
    tables: tuple[tuple[str, tuple[tuple[str, tuple[tuple[str, ...], ...]],
                                   ...]], ...]

    @cached_property
    def dom_map(self) -> dict[str, frozenset[str]]:
        return {w: frozenset(es) for w, es in self.domains}

    @cached_property
    def le_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.le)

    @cached_property
    def table_map(self) -> dict[str, dict[str, frozenset[tuple[str, ...]]]]:
        return {pred: {w: frozenset(rows) for w, rows in per_world}
                for pred, per_world in self.tables}

    def below(self, p: str) -> list[str]:
        return [q for q in self.worlds if (q, p) in self.le_set]

    def elements(self) -> list[str]:
        out: list[str] = []
        for _, es in self.domains:
            for e in es:
                if e not in out:
                    out.append(e)
        return out


def make_kripke(worlds: Sequence[str],
                le: Iterable[tuple[str, str]],
                domains: Mapping[str, Iterable[str]],
                tables: Mapping[str, Mapping[str, Iterable[Sequence[str]]]],
                reflexive: bool = True) -> KripkeDatum:
    """Canonicalize a Kripke datum; optionally add the reflexive pairs."""
    worlds = tuple(worlds)
    pairs = set((q, p) for q, p in le)
    if reflexive:
        pairs.update((w, w) for w in worlds)
    dom_rows = tuple((w, tuple(sorted(set(domains.get(w, ()))))) for w in worlds)
    table_rows = []
    for pred in sorted(tables):
        per_world = tuple(
            (w, tuple(sorted(tuple(row) for row in tables[pred].get(w, ()))))
            for w in worlds)
        table_rows.append((pred, per_world))
    return KripkeDatum(worlds, tuple(sorted(pairs)), dom_rows,
                       tuple(table_rows))


def validate_kripke(k: KripkeDatum, base: Theory) -> list[str]:
    """Check the frame and table invariants; returns violation descriptions."""
    out: list[str] = []
    ws = set(k.worlds)
    if len(ws) != len(k.worlds):
        out.append("duplicate world names")
    elems = set(k.elements())
    if ws & elems:
        out.append(f"world/element name clash: {sorted(ws & elems)}")
    for q, p in k.le_set:
        if q not in ws or p not in ws:
            out.append(f"le pair ({q},{p}) mentions unknown world")
    for w in k.worlds:
        if (w, w) not in k.le_set:
            out.append(f"order not reflexive at {w}")
    for a, b in k.le_set:
        for c, d in k.le_set:
            if b == c and (a, d) not in k.le_set:
                out.append(f"order not transitive: {a}<={b}<={d}")
    for w in k.worlds:
        if not k.dom_map.get(w):
            out.append(f"empty domain at {w}")
    for q, p in k.le_set:
        missing = k.dom_map.get(p, frozenset()) - k.dom_map.get(q, frozenset())
        if missing:
            out.append(f"domain not antitone: {sorted(missing)} in dom({p}) "
                       f"but not dom({q}) though {q}<={p}")
    sig_preds = {p.name: p for p in base.signature.predicates}
    for pred, per_world in k.table_map.items():
        if pred not in sig_preds:
            out.append(f"table for unknown predicate {pred}")
            continue
        arity = sig_preds[pred].arity
        for w, rows in per_world.items():
            for row in rows:
                if len(row) != arity:
                    out.append(f"{pred} row {row} has wrong arity at {w}")
                elif any(e not in k.dom_map.get(w, frozenset()) for e in row):
                    out.append(f"{pred} row {row} at {w} leaves the domain")
        for q, p in k.le_set:
            if q == p:
                continue
            leaked = per_world.get(p, frozenset()) - per_world.get(
                q, frozenset())
            if leaked:
                out.append(f"{pred} rows {sorted(leaked)} at {p} not "
                           f"persistent down to {q}")
    return out


def kripke_to_flat(k: KripkeDatum, t_km: Theory) -> FiniteStructure:
    """Flat two-sorted structure: worlds + elements, all tables realized.

    The equality table is filled as restricted identity: eq_at(p, x, x) for
    every x in the domain of p.
    """
    fm: ForcingMap = t_km.meta["km"]
    elems = k.elements()
    clash = set(k.worlds) & set(elems)
    if clash:
        raise ModelError(f"world/element name clash: {sorted(clash)}")
    sort_of = {w: fm.world_sort.name for w in k.worlds}
    sort_of.update({e: fm.elem_sort.name for e in elems})
    tables: dict[str, frozenset] = {
        fm.le.name: frozenset(k.le_set),
        fm.dom.name: frozenset((w, e) for w, es in k.domains for e in es),
        fm.eq_at.name: frozenset(
            (w, e, e) for w, es in k.domains for e in es),
    }
    for base_name, sp in fm.starred:
        rows = set()
        for w, per in k.table_map.get(base_name, {}).items():
            for row in per:
                rows.add((w,) + tuple(row))
        tables[sp.name] = frozenset(rows)
    universe = tuple(k.worlds) + tuple(elems)
    return FiniteStructure(universe,
                           {a: sort_of[a] for a in universe},
                           tables)


def standard_kripke(n_chain: int = 2, elems: Sequence[str] = ("e1", "e2"),
                    tables: Optional[Mapping] = None) -> KripkeDatum:
    """A descending chain w1 >= w2 >= ... with full domains everywhere."""
    worlds = [f"w{i + 1}" for i in range(n_chain)]
    le = [(worlds[j], worlds[i]) for i in range(n_chain)
          for j in range(i, n_chain)]
    return make_kripke(worlds, le, {w: elems for w in worlds}, tables or {})


# --------------------------------------------------------------------------
# Persistence reports via the translated-formula path.

@dataclass(frozen=True)
class PersistenceReport:
    checks: int
    violations: tuple[tuple, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def persistence_report(t_km: Theory, k: KripkeDatum,
                       formulas: Sequence[Formula],
                       backend: Optional[str] = None) -> PersistenceReport:
    """Evaluate p forces phi on the flat structure for every world pair and
    valid assignment; record every downward persistence failure."""
    fm: ForcingMap = t_km.meta["km"]
    flat = kripke_to_flat(k, t_km)
    wv = Var("w", 10 ** 6)  # avoids every pool variable by construction
    checks = 0
    bad: list[tuple] = []
    for phi in formulas:
        phi = desugar(phi)
        translated = force_with(fm, phi, wv)
        frees = sorted(phi.free, key=lambda v: (v.name, v.index))
        for p in k.worlds:
            dom_p = sorted(k.dom_map[p])
            for vals in product(dom_p, repeat=len(frees)):
                env = dict(zip(frees, vals))
                env[wv] = p
                if not eval_formula(flat, translated, env, backend=backend):
                    continue
                for q in k.below(p):
                    if q == p:
                        continue
                    checks += 1
                    env_q = dict(env)
                    env_q[wv] = q
                    if not eval_formula(flat, translated, env_q,
                                        backend=backend):
                        bad.append((phi, p, q, vals))
    return PersistenceReport(checks, tuple(bad))


# --------------------------------------------------------------------------
# Frame enumeration and the exhaustive sweep.

def enumerate_preorders(n: int) -> list[tuple[int, ...]]:
    """All reflexive transitive relations on n labeled points, as below-masks.

    below[p] = bitmask of worlds q with q <= p.  Counts: 1, 4, 29 for
    n = 1, 2, 3.
    """
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = []
    for bits in range(1 << len(pairs)):
        rel = [[i == j for j in range(n)] for i in range(n)]
        for idx, (i, j) in enumerate(pairs):
            if bits >> idx & 1:
                rel[i][j] = True
        ok = True
        for i in range(n):
            for j in range(n):
                if not rel[i][j]:
                    continue
                for kk in range(n):
                    if rel[j][kk] and not rel[i][kk]:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            # rel[q][p] means q <= p; below-mask of p collects q rows
            out.append(tuple(
                sum(1 << q for q in range(n) if rel[q][p])
                for p in range(n)))
    return out


def frame_below_masks(max_worlds: int = 3) -> list[tuple[int, ...]]:
    frames: list[tuple[int, ...]] = []
    for n in range(1, max_worlds + 1):
        frames.extend(enumerate_preorders(n))
    return frames


def compile_pool_nodes(pool: Sequence[Formula], x: Var, y: Var):
    """Shared child-first node table for the sweep kernels.

    Returns (nodes, roots, free_mask) in the kernel encoding: ATOM carries
    the predicate tag (0 unary, 1 binary) and argument slots, EQ two slots,
    AND/NOT/FORALL child references, FORALL also its slot.
    """
    slot = {x: 0, y: 1}
    nodes: list[tuple[int, int, int, int]] = []
    index: dict[int, int] = {}
    free_mask: list[int] = []

    def add(node: Formula) -> int:
        hit = index.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Atom):
            if node.pred.arity == 1:
                enc = (K_ATOM, 0, slot[node.args[0]], -1)
            else:
                enc = (K_ATOM, 1, slot[node.args[0]], slot[node.args[1]])
        elif isinstance(node, Eq):
            enc = (K_EQ, slot[node.left], slot[node.right], -1)
        elif isinstance(node, And):
            enc = (K_AND, add(node.left), add(node.right), -1)
        elif isinstance(node, Not):
            enc = (K_NOT, add(node.body), -1, -1)
        elif isinstance(node, Forall):
            enc = (K_FORALL, slot[node.var], add(node.body), -1)
        else:  # pragma: no cover
            raise TypeError(type(node))
        i = len(nodes)
        nodes.append(enc)
        fm = 0
        if x in node.free:
            fm |= 1
        if y in node.free:
            fm |= 2
        free_mask.append(fm)
        index[id(node)] = i
        return i

    roots = [add(phi) for phi in pool]
    return nodes, roots, free_mask


def sweep_persistence(pool: Sequence[Formula], x: Var, y: Var,
                      max_worlds: int = 3, n_elems: int = 2,
                      literal: bool = False, backend: Optional[str] = None,
                      collect_limit: int = 10) -> dict:
    """Exhaustive persistence check of a formula pool over every Kripke
    datum with at most max_worlds worlds and n_elems elements.

    Returns the kernel aggregate: datum count, persistence checks and
    violations (with samples), and the one-world collapse comparison
    against ordinary evaluation.
    """
    nodes, roots, free_mask = compile_pool_nodes(pool, x, y)
    frames = frame_below_masks(max_worlds)
    impl = _sweep_impl(backend)
    return impl(nodes, roots, free_mask, frames, n_elems=n_elems,
                literal=literal, collect_limit=collect_limit)


def _sweep_impl(backend: Optional[str]):
    from . import evaluator
    name = backend or evaluator.active_backend()
    if name == "native":
        from . import _kernel
        return _kernel.persistence_sweep
    return _pyeval.persistence_sweep
