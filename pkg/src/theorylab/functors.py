"""Theory-to-theory constructors.

Each functor takes a theory and emits a new Theory value: class extensions,
tuple extensions, adjunctive sets, power encodings, and the self-singleton
variant.  All constructors are deterministic; fresh names are chosen by
suffixing and collisions warn.
"""

from __future__ import annotations

from typing import Optional

from .errors import CapExceeded, TheoryError
from .syntax import (Eq, Formula, Predicate, Sort, Var, and_, atom, conj,
                     desugar, eq, exists, exists_many, forall, forall_many,
                     iff, imp, not_, or_, truth)
from .theory import (PcComprehension, PcStComprehension, PsSeparation,
                     Signature, Theory, ensure_one_sorted, flatten,
                     fresh_name)

__all__ = [
    "pc_le_n", "pc",
    "tuple_le_n",
    "as_theory",
    "ac_le_n", "ps_le_n", "with_nu",
    "t_power", "pc_st",
    "pc_power_chain_theories",
]

MAX_CHAIN_PREDICATES = 512


def _taken(t: Theory) -> tuple[set, set]:
    return ({s.name for s in t.signature.sorts},
            {p.name for p in t.signature.predicates})


def pc_le_n(t: Theory, n: int) -> Theory:
    """Class extension: class sorts for k-ary relations, 1 <= k <= n.

    Adds membership predicates, one extensionality axiom per class sort,
    and one comprehension scheme per class sort.
    """
    if n < 1:
        raise TheoryError("pc_le_n requires n >= 1")
    t = ensure_one_sorted(t)
    s = t.sole_sort()
    sort_names, pred_names = _taken(t)
    class_sorts = []
    member_preds = []
    for k in range(1, n + 1):
        cls = Sort(fresh_name(f"cls{k}", sort_names, warn="sort"))
        mem = Predicate(fresh_name(f"mem{k}", pred_names, warn="predicate"),
                        (s,) * k + (cls,))
        class_sorts.append(cls)
        member_preds.append(mem)

    axioms = list(t.axioms)
    schemes = list(t.schemes)
    for k in range(1, n + 1):
        cls, mem = class_sorts[k - 1], member_preds[k - 1]
        big_x, big_y = Var("X"), Var("Y")
        xs = tuple(Var("x", i + 1) for i in range(k))
        same = forall_many([(x, s) for x in xs],
                           iff(atom(mem, xs + (big_x,)),
                               atom(mem, xs + (big_y,))))
        axioms.append(desugar(forall_many(
            [(big_x, cls), (big_y, cls)],
            imp(same, eq(cls, big_x, big_y)))))
        schemes.append(PcComprehension(s, cls, mem))

    return Theory(
        name=f"pc{n}-{t.name}",
        signature=Signature(t.signature.sorts + tuple(class_sorts),
                            t.signature.predicates + tuple(member_preds)),
        axioms=tuple(axioms),
        schemes=tuple(schemes),
        meta={**t.meta, "pc": {
            "object_sort": s,
            "class_sorts": tuple(class_sorts),
            "member_preds": tuple(member_preds),
            "n": n,
        }},
    )


def pc(t: Theory) -> Theory:
    return pc_le_n(t, 1)


def tuple_le_n(t: Theory, n: int) -> Theory:
    """Tuple extension: sorts of i-tuples over the base, 2 <= i <= n."""
    if n < 2:
        raise TheoryError("tuple_le_n requires n >= 2")
    t = ensure_one_sorted(t)
    base = t.sole_sort()
    sort_names, pred_names = _taken(t)
    tuple_sorts = {1: base}
    tuple_preds = {}
    for i in range(2, n + 1):
        ts = Sort(fresh_name(f"tup{i}", sort_names, warn="sort"))
        tp = Predicate(fresh_name(f"tup{i}", pred_names, warn="predicate"),
                       (ts,) + (base,) * i)
        tuple_sorts[i] = ts
        tuple_preds[i] = tp

    axioms = list(t.axioms)
    for i in range(2, n + 1):
        ts, tp = tuple_sorts[i], tuple_preds[i]
        p, q = Var("p"), Var("q")
        xs = tuple(Var("x", j + 1) for j in range(i))
        ys = tuple(Var("y", j + 1) for j in range(i))
        agree = conj([eq(base, x, y) for x, y in zip(xs, ys)])
        axioms.append(desugar(forall_many(
            [(p, ts), (q, ts)] + [(x, base) for x in xs]
            + [(y, base) for y in ys],
            imp(and_(atom(tp, (p,) + xs), atom(tp, (q,) + ys)),
                iff(eq(ts, p, q), agree)))))
        axioms.append(desugar(forall(
            p, ts, exists_many([(x, base) for x in xs],
                               atom(tp, (p,) + xs)))))
        axioms.append(desugar(forall_many(
            [(x, base) for x in xs],
            exists(p, ts, atom(tp, (p,) + xs)))))

    return Theory(
        name=f"tuple{n}-{t.name}",
        signature=Signature(t.signature.sorts
                            + tuple(tuple_sorts[i] for i in range(2, n + 1)),
                            t.signature.predicates
                            + tuple(tuple_preds[i] for i in range(2, n + 1))),
        axioms=tuple(axioms),
        schemes=t.schemes,
        meta={**t.meta, "tuple": {
            "base_sort": base,
            "tuple_sorts": dict(tuple_sorts),
            "tuple_preds": dict(tuple_preds),
            "n": n,
        }},
    )


def as_theory(t: Theory) -> Theory:
    """Adjunctive sets: a membership relation with empty set and adjunction."""
    t = ensure_one_sorted(t)
    s = t.sole_sort()
    _, pred_names = _taken(t)
    mem = Predicate(fresh_name("mem", pred_names, warn="predicate"), (s, s))
    x, y, z, w = Var("x"), Var("y"), Var("z"), Var("w")
    empty = desugar(exists(x, s, forall(y, s, not_(atom(mem, (y, x))))))
    adjoin = desugar(forall_many(
        [(x, s), (y, s)],
        exists(z, s, forall(w, s, iff(atom(mem, (w, z)),
                                      or_(atom(mem, (w, x)), eq(s, w, y)))))))
    return Theory(
        name=f"as-{t.name}",
        signature=Signature(t.signature.sorts, t.signature.predicates + (mem,)),
        axioms=t.axioms + (empty, adjoin),
        schemes=t.schemes,
        meta={**t.meta, "as": {"member_pred": mem}},
    )


def _class_language(t: Theory, n: int):
    """Shared sort/predicate scaffolding for the class-extension theories."""
    t = ensure_one_sorted(t)
    s = t.sole_sort()
    sort_names, pred_names = _taken(t)
    class_sorts = []
    member_preds = []
    for k in range(1, n + 1):
        cls = Sort(fresh_name(f"cls{k}", sort_names, warn="sort"))
        mem = Predicate(fresh_name(f"mem{k}", pred_names, warn="predicate"),
                        (s,) * k + (cls,))
        class_sorts.append(cls)
        member_preds.append(mem)
    return t, s, class_sorts, member_preds


def ac_le_n(t: Theory, n: int, strict: bool = False) -> Theory:
    """Adjunctive classes: empty class and tuple adjunction per class sort.

    strict=True keeps the literal adjunction bound (the conjunction stops
    one coordinate short), for comparison only.
    """
    if n < 1:
        raise TheoryError("ac_le_n requires n >= 1")
    t, s, class_sorts, member_preds = _class_language(t, n)
    axioms = list(t.axioms)
    for k in range(1, n + 1):
        cls, mem = class_sorts[k - 1], member_preds[k - 1]
        big_x, big_y = Var("X"), Var("Y")
        xs = tuple(Var("x", i + 1) for i in range(k))
        ys = tuple(Var("y", i + 1) for i in range(k))
        axioms.append(desugar(exists(
            big_x, cls,
            forall_many([(x, s) for x in xs],
                        not_(atom(mem, xs + (big_x,)))))))
        stop = k - 1 if strict else k
        hit = conj([eq(s, ys[i], xs[i]) for i in range(stop)],
                   empty=truth(ys[0], s))
        axioms.append(desugar(forall_many(
            [(big_x, cls)] + [(x, s) for x in xs],
            exists(big_y, cls,
                   forall_many([(y, s) for y in ys],
                               iff(atom(mem, ys + (big_y,)),
                                   or_(atom(mem, ys + (big_x,)), hit)))))))
    return Theory(
        name=f"ac{n}-{t.name}",
        signature=Signature(t.signature.sorts + tuple(class_sorts),
                            t.signature.predicates + tuple(member_preds)),
        axioms=tuple(axioms),
        schemes=t.schemes,
        meta={**t.meta, "pc": {
            "object_sort": s,
            "class_sorts": tuple(class_sorts),
            "member_preds": tuple(member_preds),
            "n": n,
        }, "ac": True},
    )


def ps_le_n(t: Theory, n: int, strict: bool = False) -> Theory:
    """Adjunctive classes plus the separation scheme per class sort."""
    out = ac_le_n(t, n, strict=strict)
    info = out.meta["pc"]
    s = info["object_sort"]
    schemes = list(out.schemes)
    for k in range(1, n + 1):
        schemes.append(PsSeparation(
            object_sort=s,
            class_sort=info["class_sorts"][k - 1],
            member=info["member_preds"][k - 1],
            container_sort=info["class_sorts"][0],
            container_member=info["member_preds"][0]))
    return Theory(
        name=f"ps{n}-{t.name}",
        signature=out.signature,
        axioms=out.axioms,
        schemes=tuple(schemes),
        meta={**out.meta, "ps": True},
    )


def with_nu(t: Theory) -> Theory:
    """Add the no-universe axiom: no class contains every object."""
    info = t.meta.get("pc")
    if info is None:
        raise TheoryError(f"{t.name} has no class sorts; apply a class functor first")
    s = info["object_sort"]
    cls1 = info["class_sorts"][0]
    mem1 = info["member_preds"][0]
    big_x, x = Var("X"), Var("x")
    nu = desugar(not_(exists(big_x, cls1,
                             forall(x, s, atom(mem1, (x, big_x))))))
    if nu in t.axioms:
        return t
    return Theory(
        name=f"{t.name}-nu",
        signature=t.signature,
        axioms=t.axioms + (nu,),
        schemes=t.schemes,
        meta=t.meta,
    )


def t_power(t: Theory, n: int, strict: bool = False) -> Theory:
    """Power encoding: every object is an n-tuple of diagonal individuals.

    strict=True emits the literal identification axiom with its unconstrained
    second tuple variable, for comparison only.
    """
    if n < 1:
        raise TheoryError("t_power requires n >= 1")
    t = ensure_one_sorted(t)
    s = t.sole_sort()
    _, pred_names = _taken(t)
    diag = Predicate(fresh_name("diag", pred_names, warn="predicate"), (s,))
    pred_names.add(diag.name)
    tup = Predicate(fresh_name("tup", pred_names, warn="predicate"),
                    (s,) * (n + 1))

    x, x2 = Var("x"), Var("x", 1)
    ys = tuple(Var("y", i + 1) for i in range(n))
    zs = tuple(Var("z", i + 1) for i in range(n))

    def guard(v: Var) -> Formula:
        return atom(diag, (v,))

    relativized = [
        _relativize_one_sorted(ax, s, diag) for ax in t.axioms]
    confined = desugar(forall_many(
        [(x, s)] + [(y, s) for y in ys],
        imp(atom(tup, (x,) + ys), conj([guard(y) for y in ys]))))
    second = x if strict else x2
    ident = desugar(forall_many(
        [(x, s), (x2, s)] + [(y, s) for y in ys] + [(z, s) for z in zs],
        imp(and_(atom(tup, (x,) + ys), atom(tup, (second,) + zs)),
            iff(eq(s, x, x2), conj([eq(s, y, z) for y, z in zip(ys, zs)])))))
    total_proj = desugar(forall(
        x, s, exists_many([(y, s) for y in ys], atom(tup, (x,) + ys))))
    total_tup = desugar(forall_many(
        [(y, s) for y in ys],
        imp(conj([guard(y) for y in ys]),
            exists(x, s, atom(tup, (x,) + ys)))))
    diag_tup = desugar(forall(
        x, s, imp(guard(x), atom(tup, (x,) * (n + 1)))))

    return Theory(
        name=f"tpow{n}-{t.name}",
        signature=Signature(t.signature.sorts,
                            t.signature.predicates + (diag, tup)),
        axioms=tuple(relativized) + (confined, ident, total_proj,
                                     total_tup, diag_tup),
        schemes=t.schemes,
        meta={**t.meta, "t_power": {
            "power": n,
            "diag_pred": diag,
            "tuple_pred": tup,
            "base": t,
        }},
    )


def _relativize_one_sorted(phi: Formula, s: Sort, guard_pred: Predicate
                           ) -> Formula:
    """Guard every quantifier of a one-sorted formula by a unary predicate."""
    from .theory import transform_formula
    return transform_formula(
        phi, {s: s}, {}, {s: lambda v: atom(guard_pred, (v,))})


def pc_st(t: Theory) -> Theory:
    """Self-singleton classes: one-sorted class theory over a Sng predicate."""
    t = ensure_one_sorted(t)
    s = t.sole_sort()
    _, pred_names = _taken(t)
    sng = Predicate(fresh_name("sng", pred_names, warn="predicate"), (s,))
    pred_names.add(sng.name)
    mem = Predicate(fresh_name("mem", pred_names, warn="predicate"), (s, s))

    x, y = Var("x"), Var("y")
    relativized = [_relativize_one_sorted(ax, s, sng) for ax in t.axioms]
    singleton = desugar(forall(
        x, s, iff(forall(y, s, iff(atom(mem, (y, x)), eq(s, y, x))),
                  atom(sng, (x,)))))

    return Theory(
        name=f"pcst-{t.name}",
        signature=Signature(t.signature.sorts,
                            t.signature.predicates + (sng, mem)),
        axioms=tuple(relativized) + (singleton,),
        schemes=t.schemes + (PcStComprehension(s, sng, mem),),
        meta={**t.meta, "pc_st": {"sng_pred": sng, "member_pred": mem}},
    )


def pc_power_chain_theories(t: Theory, n: int) -> list[Theory]:
    """The iterated class tower: 2n+1 single-class steps, then the wide theory.

    Entry j (0-based, j < 2n+1) is the class extension applied j+1 times with
    flattening between applications; the last entry is the arity-2^n class
    extension of the base.  Signatures grow along the way; a cap guards
    against runaway inputs.
    """
    if n < 0:
        raise TheoryError("pc_power_chain_theories requires n >= 0")
    base = ensure_one_sorted(t)
    out = []
    cur = base
    for _ in range(2 * n + 1):
        step = pc(flatten(cur)) if out else pc(cur)
        if len(step.signature.predicates) > MAX_CHAIN_PREDICATES:
            raise CapExceeded("class tower signature too large",
                              len(step.signature.predicates),
                              MAX_CHAIN_PREDICATES)
        out.append(step)
        cur = step
    out.append(pc_le_n(base, 2 ** n))
    return out
