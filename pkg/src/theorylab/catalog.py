"""A catalog of reusable interpretations between the constructed theories.

Each builder returns a validated `Interpretation` (or a small dataclass
bundling one with bookkeeping).  The constructions here only use the
signature metadata left behind by the theory builders, so they compose
mechanically: flattened images are located by name through `sort_preds`
and `pred_map`, class machinery through the "pc" info, tuple machinery
through the "tuple" info, and forcing signatures through the recorded
`ForcingMap`.
"""

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InterpretationError, TheoryError
from .forcing import ForcingMap, km
from .functors import (ac_le_n, as_theory, pc, pc_le_n, pc_st, ps_le_n,
                       t_power, tuple_le_n, with_nu)
from .interp import (DomainComp, EqComp, Interpretation, PredComp, compose,
                     identity_interp, interpretation, translate, validate_wf)
from .syntax import (And, Atom, Eq, Forall, Formula, Not, Predicate, Sort,
                     Var, all_vars, alpha_canonical, and_, atom, conj,
                     desugar, disj, eq, exists, exists_many, forall,
                     forall_many, free_var_sorts, iff, imp, not_, or_,
                     substitute, truth, var_name)
from .theory import (Theory, ensure_one_sorted, flatten, flatten_overlapping,
                     transform_formula)

__all__ = [
    "ForcingInterpretation", "InternalModel", "SeparationInstance",
    "SmallClass", "all_small_forcing_interp", "dim_convert", "flat_adapter",
    "internal_satisfaction", "kuratowski_interp", "lift_forcing_to_pc",
    "lift_to_pc", "lift_to_pc_multi", "lift_to_tuple",
    "names_forcing_interp", "pc_st_simulation", "pc_tuple_to_pc_le",
    "ps_small_interp", "small_class_formula", "small_relation_forcing_interp",
    "sorted_into_flat", "t_power_expand", "tuple_interleave_interp",
    "union_friendly_interp",
]


# --------------------------------------------------------------------------
# Shared plumbing.

def _fresh_block(prefix: str, dim: int, taken: Iterable[Var]
                 ) -> tuple[Var, ...]:
    """A block of `dim` variables avoiding every variable in `taken`."""
    avoid = set(taken)
    stem = prefix
    while True:
        block = tuple(Var(stem, j + 1) for j in range(dim))
        if not avoid.intersection(block):
            return block
        stem = stem + "q"


def _blocks(prefix: str, count: int, dim: int, taken: Iterable[Var]
            ) -> list[tuple[Var, ...]]:
    """`count` pairwise-disjoint blocks of width `dim`, avoiding `taken`."""
    avoid = set(taken)
    stem = prefix
    while True:
        out = [tuple(Var(stem, j * dim + c + 1) for c in range(dim))
               for j in range(count)]
        flat = [v for b in out for v in b]
        if not avoid.intersection(flat):
            return out
        stem = stem + "q"


def _flat_parts(flat_theory: Theory
                ) -> tuple[Mapping[str, Predicate], Mapping[str, Predicate]]:
    return flat_theory.meta["sort_preds"], flat_theory.meta["pred_map"]


def _flatten_formula(phi: Formula, sorted_theory: Theory,
                     flat_theory: Theory) -> Formula:
    """Carry a formula of a sorted theory into its flattening.

    Bound variables pick up sort-guard atoms.  Free variables are left
    bare; the caller decides how to constrain them.
    """
    if flat_theory is sorted_theory:
        return desugar(phi)
    univ = flat_theory.meta["flat_sort"]
    sp, pm = _flat_parts(flat_theory)
    sort_map = {s: univ for s in sorted_theory.signature.sorts}
    pred_map = {p: pm[p.name] for p in sorted_theory.signature.predicates}
    guards = {s: (lambda v, q=sp[s.name]: atom(q, (v,)))
              for s in sorted_theory.signature.sorts}
    return transform_formula(phi, sort_map, pred_map, guards)


def _embedding(v: Theory, w: Theory, guard: Predicate,
               pred_of: Mapping[str, Predicate], name: str) -> Interpretation:
    """Read a one-sorted theory in a flat host behind one guard predicate."""
    univ = w.sole_sort()
    vv = Var("v")
    l, r = Var("v", 1), Var("v", 2)
    preds = {}
    for p in v.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((a,) for a in args),
                                 atom(pred_of[p.name], args))
    return interpretation(
        name, v, w, 1,
        {v.sole_sort().name: DomainComp((vv,), atom(guard, (vv,)))},
        preds,
        {v.sole_sort().name: EqComp((l,), (r,), eq(univ, l, r))})


def sorted_into_flat(t: Theory, name: Optional[str] = None) -> Interpretation:
    """Read a sorted theory inside its own flattening.

    Sorts become their tag predicates, predicates their flat copies, and
    equality stays literal.  A one-sorted theory yields its identity.
    """
    f = flatten(t)
    if f is t:
        return identity_interp(t)
    univ = f.sole_sort()
    sp, pm = _flat_parts(f)
    v = Var("v")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), atom(sp[s.name], (v,)))
               for s in t.signature.sorts}
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r))
           for s in t.signature.sorts}
    preds = {}
    for p in t.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((a,) for a in args),
                                 atom(pm[p.name], args))
    return interpretation(name or f"embed-{t.name}", t, f, 1,
                          domains, preds, eqs)


def flat_adapter(i: Interpretation,
                 name: Optional[str] = None) -> Interpretation:
    """Re-key an interpretation of a sorted theory to read its flattening.

    The flat domain is the union of the sort domains, sort tags map to
    those domains, and flat equality is the union of the per-sort
    equalities.  Returns `i` unchanged when the source is one-sorted.
    """
    src = i.source
    f = flatten(src)
    if f is src:
        return i
    univ_name = f.sole_sort().name
    sp, pm = _flat_parts(f)
    taken = set(i.params)
    block = _fresh_block("v", i.dim, taken)
    left = _fresh_block("l", i.dim, taken)
    right = _fresh_block("r", i.dim, taken.union(left))

    def dom_on(sort: Sort, actual: tuple[Var, ...]) -> Formula:
        c = i.domains[sort.name]
        return substitute(c.formula, dict(zip(c.block, actual)))

    preds = {}
    dom_parts = []
    eq_parts = []
    for s in src.signature.sorts:
        dom_parts.append(dom_on(s, block))
        e = i.eqs[s.name]
        shifted = substitute(e.formula,
                             dict(zip(e.left + e.right, left + right)))
        eq_parts.append(conj([dom_on(s, left), dom_on(s, right), shifted]))
        preds[sp[s.name].name] = PredComp((block,), dom_on(s, block))
    for p in src.signature.predicates:
        c = i.preds[p.name]
        preds[pm[p.name].name] = PredComp(c.blocks, c.formula)
    domains = {univ_name: DomainComp(block, disj(dom_parts))}
    eqs = {univ_name: EqComp(left, right, disj(eq_parts))}
    return interpretation(name or f"{i.name}-onflat", f, i.target, i.dim,
                          domains, preds, eqs, i.params, i.param_domain)


# --------------------------------------------------------------------------
# Pairing through nested classes.

def kuratowski_interp(t: Theory, name: Optional[str] = None) -> Interpretation:
    """Pairs as two-element nests inside two levels of classes.

    An ordered pair (a, b) of base objects is coded by the second-level
    class whose members are exactly {a} and {a, b}.  The arity-two tuple
    sort maps onto those nests, with coordinates recovered from the nest
    shape; class extensionality at both levels makes the coding rigid, so
    tuple equality can stay literal.
    """
    base = ensure_one_sorted(t)
    s = base.sole_sort()
    p1 = pc(base)
    f1 = flatten(p1)
    p2 = pc(f1)
    w = flatten(p2)
    univ = w.sole_sort()
    sp1, _ = _flat_parts(f1)
    sp2, pm2 = _flat_parts(w)

    sp_obj = pm2[sp1[s.name].name]
    sp_c1 = pm2[sp1[p1.meta["pc"]["class_sorts"][0].name].name]
    sp_c2 = sp2[p2.meta["pc"]["class_sorts"][0].name]
    m1 = pm2[p1.meta["pc"]["member_preds"][0].name]
    m2 = pm2[p2.meta["pc"]["member_preds"][0].name]

    src = tuple_le_n(base, 2)
    tinfo = src.meta["tuple"]
    pair_sort = tinfo["tuple_sorts"][2]
    pair_pred = tinfo["tuple_preds"][2]

    pv, av, bv = Var("p"), Var("a"), Var("b")
    ca, cb, cc, z = Var("A"), Var("B"), Var("C"), Var("z")

    def nest(p: Var, a: Var, b: Var) -> Formula:
        sing = forall(z, univ, imp(atom(sp_obj, (z,)),
                                   iff(atom(m1, (z, ca)), eq(univ, z, a))))
        doub = forall(z, univ, imp(atom(sp_obj, (z,)),
                                   iff(atom(m1, (z, cb)),
                                       or_(eq(univ, z, a), eq(univ, z, b)))))
        exact = forall(cc, univ, iff(atom(m2, (cc, p)),
                                     or_(eq(univ, cc, ca),
                                         eq(univ, cc, cb))))
        return exists(ca, univ, conj([
            atom(sp_c1, (ca,)), sing,
            exists(cb, univ, conj([atom(sp_c1, (cb,)), doub, exact]))]))

    domains = {
        s.name: DomainComp((Var("v"),), atom(sp_obj, (Var("v"),))),
        pair_sort.name: DomainComp((pv,), and_(
            atom(sp_c2, (pv,)),
            exists(av, univ, and_(
                atom(sp_obj, (av,)),
                exists(bv, univ, and_(atom(sp_obj, (bv,)),
                                      nest(pv, av, bv))))))),
    }
    preds = {pair_pred.name: PredComp(
        ((pv,), (av,), (bv,)),
        conj([atom(sp_c2, (pv,)), atom(sp_obj, (av,)), atom(sp_obj, (bv,)),
              nest(pv, av, bv)]))}
    for p in base.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(pm2[p.name], args))
    l, r = Var("v", 1), Var("v", 2)
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r)),
           pair_sort.name: EqComp((l,), (r,), eq(univ, l, r))}
    return interpretation(name or f"kuratowski-{base.name}", src, w, 1,
                          domains, preds, eqs)


def pc_tuple_to_pc_le(t: Theory, n: int,
                      name: Optional[str] = None) -> Interpretation:
    """Classes over tuple sorts become plain classes of tuple objects.

    The class sort of arity k maps to first-level classes all of whose
    members carry the arity-k tuple sort; membership of a k-tuple of
    objects goes through the tuple relation.
    """
    if n < 1:
        raise TheoryError("pc_tuple_to_pc_le requires n >= 1")
    base = ensure_one_sorted(t)
    s = base.sole_sort()
    if n == 1:
        tt = ft = base
    else:
        tt = tuple_le_n(base, n)
        ft = flatten(tt)
    pt = pc(ft)
    w = flatten(pt)
    univ = w.sole_sort()
    spw, pmw = _flat_parts(w)

    if n == 1:
        sp_base = spw[s.name]
        sp_tup: dict[int, Predicate] = {}
        tp: dict[int, Predicate] = {}
    else:
        tinfo = tt.meta["tuple"]
        spf = ft.meta["sort_preds"]
        sp_base = pmw[spf[s.name].name]
        sp_tup = {k: pmw[spf[tinfo["tuple_sorts"][k].name].name]
                  for k in range(2, n + 1)}
        tp = {k: pmw[tinfo["tuple_preds"][k].name] for k in range(2, n + 1)}

    sp_cls = spw[pt.meta["pc"]["class_sorts"][0].name]
    m1 = pmw[pt.meta["pc"]["member_preds"][0].name]

    src = pc_le_n(base, n)
    info = src.meta["pc"]
    v, bx, u = Var("v"), Var("X"), Var("u")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), atom(sp_base, (v,)))}
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r))}
    preds = {}
    for p in base.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(pmw[p.name], args))
    for k in range(1, n + 1):
        csort = info["class_sorts"][k - 1]
        cmem = info["member_preds"][k - 1]
        member_guard = sp_base if k == 1 else sp_tup[k]
        domains[csort.name] = DomainComp((bx,), and_(
            atom(sp_cls, (bx,)),
            forall(u, univ, imp(atom(m1, (u, bx)),
                                atom(member_guard, (u,))))))
        xs = tuple(Var("x", j + 1) for j in range(k))
        if k == 1:
            body = atom(m1, (xs[0], bx))
        else:
            body = exists(u, univ, and_(atom(m1, (u, bx)),
                                        atom(tp[k], (u,) + xs)))
        preds[cmem.name] = PredComp(tuple((x,) for x in xs) + ((bx,),), body)
        eqs[csort.name] = EqComp((l,), (r,), eq(univ, l, r))
    return interpretation(name or f"pctuple{n}-{base.name}", src, w, 1,
                          domains, preds, eqs)


def tuple_interleave_interp(t: Theory, n: int, m: int,
                            name: Optional[str] = None) -> Interpretation:
    """Tuples of arity up to n*m as outer tuples of inner tuples.

    A k-tuple splits into consecutive blocks of m coordinates.  Full
    blocks become inner m-tuples, a shorter final block keeps its own
    arity, a remainder of one stays a bare element, and a k <= m tuple is
    a single inner tuple with no outer wrapper.
    """
    if n < 2 or m < 2:
        raise TheoryError("tuple_interleave_interp requires n, m >= 2")
    base = ensure_one_sorted(t)
    s = base.sole_sort()
    inner = tuple_le_n(base, m)
    fi = flatten(inner)
    outer = tuple_le_n(fi, n)
    w = flatten(outer)
    univ = w.sole_sort()
    spi = fi.meta["sort_preds"]
    iinfo = inner.meta["tuple"]
    spo, pmo = _flat_parts(w)
    oinfo = outer.meta["tuple"]

    sp_o = pmo[spi[s.name].name]
    sp_in = {j: pmo[spi[iinfo["tuple_sorts"][j].name].name]
             for j in range(2, m + 1)}
    in_tp = {j: pmo[iinfo["tuple_preds"][j].name] for j in range(2, m + 1)}
    sp_out = {c: spo[oinfo["tuple_sorts"][c].name] for c in range(2, n + 1)}
    out_tp = {c: pmo[oinfo["tuple_preds"][c].name] for c in range(2, n + 1)}

    src = tuple_le_n(base, n * m)
    sinfo = src.meta["tuple"]

    def slot_guard(size: int) -> Predicate:
        return sp_o if size == 1 else sp_in[size]

    v = Var("v")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), atom(sp_o, (v,)))}
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r))}
    preds = {}
    for p in base.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(pmo[p.name], args))

    pv = Var("p")
    for k in range(2, n * m + 1):
        sort_k = sinfo["tuple_sorts"][k]
        pred_k = sinfo["tuple_preds"][k]
        full, rem = divmod(k, m)
        sizes = [m] * full + ([rem] if rem else [])
        c = len(sizes)
        xs = tuple(Var("x", j + 1) for j in range(k))
        if c == 1:
            dom_formula: Formula = atom(sp_in[k], (pv,))
            body: Formula = atom(in_tp[k], (pv,) + xs)
        else:
            ws = tuple(Var("w", j + 1) for j in range(c))
            shape = [atom(out_tp[c], (pv,) + ws)]
            shape += [atom(slot_guard(sz), (wv,))
                      for wv, sz in zip(ws, sizes)]
            dom_formula = and_(
                atom(sp_out[c], (pv,)),
                exists_many([(wv, univ) for wv in ws], conj(shape)))
            slots: list[Var] = []
            decode = []
            bound = []
            pos = 0
            for idx, sz in enumerate(sizes):
                piece = xs[pos:pos + sz]
                pos += sz
                if sz == 1:
                    slots.append(piece[0])
                else:
                    wv = ws[idx]
                    bound.append(wv)
                    slots.append(wv)
                    decode.append(atom(in_tp[sz], (wv,) + piece))
            body = and_(
                atom(sp_out[c], (pv,)),
                exists_many([(wv, univ) for wv in bound],
                            conj([atom(out_tp[c], (pv,) + tuple(slots))]
                                 + decode)))
        domains[sort_k.name] = DomainComp((pv,), dom_formula)
        preds[pred_k.name] = PredComp(((pv,),) + tuple((x,) for x in xs),
                                      body)
        eqs[sort_k.name] = EqComp((l,), (r,), eq(univ, l, r))
    return interpretation(name or f"interleave{n}x{m}-{base.name}", src, w, 1,
                          domains, preds, eqs)


# --------------------------------------------------------------------------
# Lifting interpretations through the class and tuple extensions.

def lift_to_pc_multi(i: Interpretation, m: int,
                     name: Optional[str] = None) -> Interpretation:
    """Lift an interpretation to the class extensions of both ends.

    A class of k-tuples of source objects is carried by a class of
    (dim * k)-tuples over the target base: membership concatenates the
    coordinate blocks, and class equality is coextensionality over
    represented blocks.  The dimension stays that of the input; class
    blocks pad with repeats of their first coordinate.
    """
    if m < 1:
        raise TheoryError("lift_to_pc_multi requires m >= 1")
    u = i.source
    if len(u.signature.sorts) != 1:
        raise InterpretationError(
            f"{i.name}: source must be one-sorted to lift; "
            "apply flat_adapter first")
    v = i.target
    d = i.dim
    src = pc_le_n(u, m)
    big = pc_le_n(v, d * m)
    w = flatten(big)
    univ = w.sole_sort()
    spw, pmw = _flat_parts(w)
    sp_base = spw[v.sole_sort().name]
    binfo = big.meta["pc"]
    sp_cls = {k: spw[binfo["class_sorts"][k - 1].name]
              for k in range(1, d * m + 1)}
    wmem = {k: pmw[binfo["member_preds"][k - 1].name]
            for k in range(1, d * m + 1)}

    inject = _embedding(v, w, sp_base, pmw, f"embed-{v.name}")

    def tr(phi: Formula) -> Formula:
        return translate(inject, phi)

    su = u.sole_sort()
    uinfo = src.meta["pc"]
    taken = set(i.params)
    dom_u = i.domains[su.name]
    base_block = dom_u.block
    dom_guarded = conj([atom(sp_base, (x,)) for x in base_block]
                       + [tr(dom_u.formula)])
    domains = {su.name: DomainComp(base_block, dom_guarded)}
    eq_u = i.eqs[su.name]
    eqs = {su.name: EqComp(eq_u.left, eq_u.right, tr(eq_u.formula))}
    preds = {}
    for p in u.signature.predicates:
        c = i.preds[p.name]
        preds[p.name] = PredComp(c.blocks, tr(c.formula))

    for k in range(1, m + 1):
        csort = uinfo["class_sorts"][k - 1]
        cmem = uinfo["member_preds"][k - 1]
        nk = d * k
        xb = _fresh_block("X", d, taken)
        yb = _fresh_block("Y", d, taken.union(xb))
        x0, y0 = xb[0], yb[0]
        pad_x = [eq(univ, xb[j], x0) for j in range(1, d)]
        us = tuple(Var("u", j + 1) for j in range(nk))
        ublocks = [us[j * d:(j + 1) * d] for j in range(k)]
        valid = [substitute(dom_guarded, dict(zip(base_block, ub)))
                 for ub in ublocks]
        member_ok = forall_many(
            [(uv, univ) for uv in us],
            imp(atom(wmem[nk], us + (x0,)), conj(valid)))
        domains[csort.name] = DomainComp(xb, conj(
            [atom(sp_cls[nk], (x0,))] + pad_x + [member_ok]))
        mblocks = _blocks("x", k, d, taken.union(xb))
        flat_args = tuple(c for b in mblocks for c in b)
        preds[cmem.name] = PredComp(
            tuple(mblocks) + (xb,),
            atom(wmem[nk], flat_args + (x0,)))
        coext = forall_many(
            [(uv, univ) for uv in us],
            imp(conj(valid),
                iff(atom(wmem[nk], us + (x0,)),
                    atom(wmem[nk], us + (y0,)))))
        eqs[csort.name] = EqComp(xb, yb, coext)

    pd_parts = [atom(sp_base, (pvar,)) for pvar in i.params]
    if i.param_domain is not None:
        pd_parts.append(tr(i.param_domain))
    param_domain = conj(pd_parts) if pd_parts else None
    return interpretation(name or f"pclift{m}-{i.name}", src, w, d,
                          domains, preds, eqs, i.params, param_domain)


def lift_to_pc(i: Interpretation,
               name: Optional[str] = None) -> Interpretation:
    """One-class-sort specialization of lift_to_pc_multi."""
    return lift_to_pc_multi(i, 1, name=name or f"pclift-{i.name}")


def lift_to_tuple(i: Interpretation, n: int,
                  name: Optional[str] = None) -> Interpretation:
    """Lift an interpretation to the tuple extensions of both ends.

    A k-tuple of source objects, each a dim-wide block of target
    elements, is carried by a dim-wide block of target k-tuples:
    coordinate j of the image collects the j-th coordinates of the
    source blocks.  Tuple equality decodes both sides and compares them
    with the lifted object equality.
    """
    if n < 2:
        raise TheoryError("lift_to_tuple requires n >= 2")
    ii = flat_adapter(i)
    u = ii.source
    v = ii.target
    d = ii.dim
    src = tuple_le_n(u, n)
    tb = tuple_le_n(v, n)
    w = flatten(tb)
    univ = w.sole_sort()
    spw, pmw = _flat_parts(w)
    sp_b = spw[v.sole_sort().name]
    tinfo = tb.meta["tuple"]
    sp_wt = {k: spw[tinfo["tuple_sorts"][k].name] for k in range(2, n + 1)}
    wtp = {k: pmw[tinfo["tuple_preds"][k].name] for k in range(2, n + 1)}

    inject = _embedding(v, w, sp_b, pmw, f"embed-{v.name}")

    def tr(phi: Formula) -> Formula:
        return translate(inject, phi)

    su = u.sole_sort()
    sinfo = src.meta["tuple"]
    taken = set(ii.params)
    dom_u = ii.domains[su.name]
    base_block = dom_u.block
    dom_b = conj([atom(sp_b, (x,)) for x in base_block]
                 + [tr(dom_u.formula)])
    eq_u = ii.eqs[su.name]
    eq_b = tr(eq_u.formula)

    domains = {su.name: DomainComp(base_block, dom_b)}
    eqs = {su.name: EqComp(eq_u.left, eq_u.right, eq_b)}
    preds = {}
    for p in u.signature.predicates:
        c = ii.preds[p.name]
        preds[p.name] = PredComp(c.blocks, tr(c.formula))

    for k in range(2, n + 1):
        sk = sinfo["tuple_sorts"][k]
        pk = sinfo["tuple_preds"][k]
        wb = _fresh_block("w", d, taken)
        vb = _fresh_block("wq", d, taken.union(wb))
        xrows = _blocks("x", k, d, taken.union(wb).union(vb))
        yrows = _blocks("y", k, d,
                        taken.union(wb).union(vb).union(
                            v2 for b in xrows for v2 in b))

        def col(rows: list[tuple[Var, ...]], j: int) -> tuple[Var, ...]:
            return tuple(row[j] for row in rows)

        decode_x = [atom(wtp[k], (wb[j],) + col(xrows, j)) for j in range(d)]
        decode_y = [atom(wtp[k], (vb[j],) + col(yrows, j)) for j in range(d)]
        row_ok = [substitute(dom_b, dict(zip(base_block, row)))
                  for row in xrows]
        domains[sk.name] = DomainComp(wb, conj(
            [atom(sp_wt[k], (wv,)) for wv in wb]
            + [exists_many([(x, univ) for row in xrows for x in row],
                           conj(decode_x + row_ok))]))
        preds[pk.name] = PredComp((wb,) + tuple(xrows), conj(decode_x))
        same = [substitute(eq_b, dict(zip(eq_u.left + eq_u.right, xr + yr)))
                for xr, yr in zip(xrows, yrows)]
        eqs[sk.name] = EqComp(wb, vb, exists_many(
            [(x, univ) for row in xrows for x in row]
            + [(y, univ) for row in yrows for y in row],
            conj(decode_x + decode_y + same)))

    pd_parts = [atom(sp_b, (pvar,)) for pvar in ii.params]
    if ii.param_domain is not None:
        pd_parts.append(tr(ii.param_domain))
    param_domain = conj(pd_parts) if pd_parts else None
    return interpretation(name or f"tuplift{n}-{i.name}", src, w, d,
                          domains, preds, eqs, ii.params, param_domain)


# --------------------------------------------------------------------------
# Forcing with names: carrying a Kripke reading to the class extension.

def names_forcing_interp(t: Theory,
                         name: Optional[str] = None) -> Interpretation:
    """Kripke models of the class extension, built from names.

    The worlds stay those of a Kripke model of the base theory; class
    elements are names, classes of world/element pairs confined to the
    world domains.  A name is everywhere; its members at a world are the
    elements put in at some weaker world, and two names are equal at a
    world when every weaker world sees the same members.
    """
    base = ensure_one_sorted(t)
    if base.schemes:
        raise TheoryError(
            "names_forcing_interp needs a theory with concrete axioms only")
    src = km(pc(base))
    fm: ForcingMap = src.meta["km"]
    fpc: Theory = src.meta["km_base"]
    pinfo = pc(base).meta["pc"]
    mem_name = pinfo["member_preds"][0].name
    sobj_name = fpc.meta["sort_preds"][base.sole_sort().name].name
    scls_name = fpc.meta["sort_preds"][pinfo["class_sorts"][0].name].name

    tk = km(base)
    fmk: ForcingMap = tk.meta["km"]
    fk = flatten(tk)
    spk, pmk = _flat_parts(fk)
    p2 = pc_le_n(fk, 2)
    w = flatten(p2)
    univ = w.sole_sort()
    spw, pmw = _flat_parts(w)

    sp_world = pmw[spk[fmk.world_sort.name].name]
    sp_elem = pmw[spk[fmk.elem_sort.name].name]
    le = pmw[pmk[fmk.le.name].name]
    dm = pmw[pmk[fmk.dom.name].name]
    eqat = pmw[pmk[fmk.eq_at.name].name]
    star = {pname: pmw[pmk[p.name].name] for pname, p in fmk.starred}
    info2 = p2.meta["pc"]
    m2 = pmw[info2["member_preds"][1].name]
    sp_c2 = spw[info2["class_sorts"][1].name]

    na, nb, qq, qr, zz = Var("na"), Var("nb"), Var("qq"), Var("qr"), Var("nz")
    pv, xv, yv, av = Var("p"), Var("x"), Var("y"), Var("A")

    def name_of(x: Var) -> Formula:
        pair_ok = conj([atom(sp_world, (na,)), atom(sp_elem, (nb,)),
                        atom(dm, (na, nb))])
        return and_(atom(sp_c2, (x,)),
                    forall(na, univ, forall(nb, univ, imp(
                        atom(m2, (na, nb, x)), pair_ok))))

    def forced_in(world: Var, member: Var, cls: Var) -> Formula:
        return exists(qq, univ, and_(atom(le, (world, qq)),
                                     atom(m2, (qq, member, cls))))

    old_pair = and_(atom(sp_elem, (xv,)), atom(sp_elem, (yv,)))
    coext = forall(qr, univ, imp(
        atom(le, (qr, pv)),
        forall(zz, univ, imp(
            and_(atom(sp_elem, (zz,)), atom(dm, (qr, zz))),
            iff(forced_in(qr, zz, xv), forced_in(qr, zz, yv))))))

    domains = {
        fm.world_sort.name: DomainComp((pv,), atom(sp_world, (pv,))),
        fm.elem_sort.name: DomainComp((xv,), or_(atom(sp_elem, (xv,)),
                                                 name_of(xv))),
    }
    l, r = Var("v", 1), Var("v", 2)
    eqs = {
        fm.world_sort.name: EqComp((l,), (r,), eq(univ, l, r)),
        fm.elem_sort.name: EqComp((l,), (r,), eq(univ, l, r)),
    }
    preds = {
        fm.le.name: PredComp(((l,), (r,)), atom(le, (l, r))),
        fm.dom.name: PredComp(
            ((pv,), (xv,)),
            or_(and_(atom(sp_elem, (xv,)), atom(dm, (pv, xv))),
                and_(atom(sp_world, (pv,)), name_of(xv)))),
        fm.eq_at.name: PredComp(
            ((pv,), (xv,), (yv,)),
            or_(conj([old_pair, atom(eqat, (pv, xv, yv))]),
                conj([atom(sp_world, (pv,)), name_of(xv), name_of(yv),
                      coext]))),
    }
    for pname, _ in fm.starred:
        if pname == mem_name:
            preds[fm.starred_pred(pname).name] = PredComp(
                ((pv,), (xv,), (av,)),
                conj([atom(sp_elem, (xv,)), atom(dm, (pv, xv)),
                      forced_in(pv, xv, av), name_of(av)]))
        elif pname == sobj_name:
            preds[fm.starred_pred(pname).name] = PredComp(
                ((pv,), (xv,)),
                and_(atom(sp_elem, (xv,)), atom(dm, (pv, xv))))
        elif pname == scls_name:
            preds[fm.starred_pred(pname).name] = PredComp(
                ((pv,), (xv,)),
                and_(atom(sp_world, (pv,)), name_of(xv)))
        else:
            sp = star[pname]
            args = tuple(Var("v", k + 2) for k in range(sp.arity - 1))
            preds[fm.starred_pred(pname).name] = PredComp(
                ((pv,),) + tuple((x,) for x in args),
                atom(sp, (pv,) + args))
    return interpretation(name or f"names-{base.name}", src, w, 1,
                          domains, preds, eqs)


@dataclass(frozen=True)
class ForcingInterpretation:
    """An interpretation whose source is the Kripke-model theory of base."""

    base: Theory
    interp: Interpretation

    @property
    def dim(self) -> int:
        return self.interp.dim


def lift_forcing_to_pc(f: ForcingInterpretation,
                       name: Optional[str] = None
                       ) -> tuple[ForcingInterpretation, int]:
    """Carry a forcing reading of a theory to its class extension.

    Composes the name construction for the class stage with the class
    lift of the given interpretation.  Returns the new forcing reading
    together with the tuple width the lift needed on the target side.
    """
    u = ensure_one_sorted(f.base)
    nf = names_forcing_interp(u)
    lifted = flat_adapter(lift_to_pc_multi(flat_adapter(f.interp), 2))
    out = compose(lifted, nf,
                  name=name or f"pcforce-{f.interp.name}")
    return ForcingInterpretation(pc(u), out), 2 * f.interp.dim


# --------------------------------------------------------------------------
# Coded models inside the classes, and smallness.

@dataclass(frozen=True)
class InternalModel:
    """Satisfaction inside coded models: a carrier class, an equality
    class, and one relation class per predicate."""

    host: Theory
    base: Theory
    domain_var: Var
    equality_var: Var
    relation_vars: tuple[tuple[str, Var], ...]
    nonempty: Formula
    equivalence: Formula
    congruences: tuple[Formula, ...]
    relativized_axioms: tuple[Formula, ...]
    model_of: Formula


def internal_satisfaction(t: Theory) -> InternalModel:
    """Formulas stating that classes D, E, R carry a model of the theory.

    D is the carrier, E an equivalence used as equality, and each
    predicate gets a relation class of matching arity; the axioms are
    relativized to D with atoms read through the relation classes.  All
    of it lives in the class extension of the theory's base, wide enough
    for binary relations and every predicate.
    """
    base = ensure_one_sorted(t)
    if base.schemes:
        raise TheoryError(
            "internal_satisfaction needs a theory with concrete axioms only")
    for p in base.signature.predicates:
        if p.arity == 0:
            raise TheoryError("internal_satisfaction: nullary predicates "
                              "have no relation class")
    n = max([2] + [p.arity for p in base.signature.predicates])
    host = pc_le_n(base, n)
    info = host.meta["pc"]
    s = info["object_sort"]
    mem = info["member_preds"]
    dv, ev = Var("smD"), Var("smE")
    rvars = tuple((p.name, Var("smR", idx + 1))
                  for idx, p in enumerate(base.signature.predicates))
    rmap = dict(rvars)
    arity = {p.name: p.arity for p in base.signature.predicates}
    x, y, z = Var("smx"), Var("smy"), Var("smz")

    def ind(v: Var) -> Formula:
        return atom(mem[0], (v, dv))

    def eqe(a: Var, b: Var) -> Formula:
        return atom(mem[1], (a, b, ev))

    nonempty = exists(x, s, ind(x))
    refl = forall(x, s, imp(ind(x), eqe(x, x)))
    sym = forall_many([(x, s), (y, s)],
                      imp(conj([eqe(x, y), ind(x), ind(y)]), eqe(y, x)))
    trans = forall_many([(x, s), (y, s), (z, s)],
                        imp(conj([eqe(x, y), eqe(y, z),
                                  ind(x), ind(y), ind(z)]),
                            eqe(x, z)))
    equivalence = conj([refl, sym, trans])

    congruences = []
    for pname, rv in rvars:
        k = arity[pname]
        xs = tuple(Var("smx", j + 1) for j in range(k))
        ys = tuple(Var("smy", j + 1) for j in range(k))
        ante = conj([atom(mem[k - 1], xs + (rv,))]
                    + [ind(v) for v in xs]
                    + [eqe(xs[j], ys[j]) for j in range(k)]
                    + [ind(v) for v in ys])
        congruences.append(forall_many(
            [(v, s) for v in xs] + [(v, s) for v in ys],
            imp(ante, atom(mem[k - 1], ys + (rv,)))))

    def relativize(phi: Formula) -> Formula:
        phi = alpha_canonical(desugar(phi))

        def go(node: Formula) -> Formula:
            if isinstance(node, Atom):
                k = node.pred.arity
                return atom(mem[k - 1], node.args + (rmap[node.pred.name],))
            if isinstance(node, Eq):
                return eqe(node.left, node.right)
            if isinstance(node, And):
                return and_(go(node.left), go(node.right))
            if isinstance(node, Not):
                return not_(go(node.body))
            if isinstance(node, Forall):
                return forall(node.var, s, imp(ind(node.var), go(node.body)))
            raise TheoryError(f"unexpected node {type(node).__name__}")

        return go(phi)

    relativized = tuple(relativize(ax) for ax in base.axioms)
    model_of = conj([nonempty, equivalence] + congruences
                    + list(relativized))
    return InternalModel(host, base, dv, ev, rvars, nonempty, equivalence,
                         tuple(congruences), relativized, model_of)


@dataclass(frozen=True)
class SmallClass:
    """A one-free-variable formula saying the class is small."""

    host: Theory
    var: Var
    formula: Formula
    internal: InternalModel


def small_class_formula(t: Theory) -> SmallClass:
    """No coded model of the theory fits inside the class.

    Small(A) says there are no classes D, E, R with D contained in A
    forming a model of the theory.  Anything below every model carrier is
    small; when the theory pins a minimum size, smallness is a size
    bound.
    """
    im = internal_satisfaction(t)
    host = im.host
    info = host.meta["pc"]
    s = info["object_sort"]
    cls = info["class_sorts"]
    mem1 = info["member_preds"][0]
    arity = {p.name: p.arity for p in im.base.signature.predicates}
    av, wv = Var("smA"), Var("smw")
    subset = forall(wv, s, imp(atom(mem1, (wv, im.domain_var)),
                               atom(mem1, (wv, av))))
    inner: Formula = conj(list(im.congruences) + list(im.relativized_axioms),
                          empty=truth(im.domain_var, cls[0]))
    for pname, rv in reversed(im.relation_vars):
        inner = exists(rv, cls[arity[pname] - 1], inner)
    inner = exists(im.equality_var, cls[1], and_(im.equivalence, inner))
    witness = exists(im.domain_var, cls[0],
                     conj([subset, im.nonempty, inner]))
    return SmallClass(host, av, desugar(not_(witness)), im)


# --------------------------------------------------------------------------
# Forcing with small relations.

def _relation_forcing(base: Theory, host: Theory,
                      small: Optional[SmallClass],
                      name: str) -> ForcingInterpretation:
    """Shared core: worlds are (carrier class, relation class) pairs under
    end-extension, elements are all base objects, membership at a world
    reads the relation class."""
    w = flatten(host)
    univ = w.sole_sort()
    sp, pm = _flat_parts(w)
    info = host.meta["pc"]
    s = info["object_sort"]
    sp_obj = sp[s.name]
    sp_c1 = sp[info["class_sorts"][0].name]
    sp_c2 = sp[info["class_sorts"][1].name]
    m1 = pm[info["member_preds"][0].name]
    m2 = pm[info["member_preds"][1].name]

    asrc = as_theory(base)
    mem_pred = asrc.meta["as"]["member_pred"]
    src = km(asrc)
    fm: ForcingMap = src.meta["km"]

    p1, p2 = Var("wp", 1), Var("wp", 2)
    q1, q2 = Var("wq", 1), Var("wq", 2)
    x1, x2 = Var("ex", 1), Var("ex", 2)
    y1, y2 = Var("ey", 1), Var("ey", 2)
    ra, rb = Var("ra"), Var("rb")

    contain = forall_many(
        [(ra, univ), (rb, univ)],
        imp(atom(m2, (ra, rb, p2)),
            and_(atom(m1, (ra, p1)), atom(m1, (rb, p1)))))
    world_parts = [atom(sp_c1, (p1,)), atom(sp_c2, (p2,)), contain]
    if small is not None:
        small_flat = _flatten_formula(small.formula, host, w)
        world_parts.append(substitute(small_flat, {small.var: p1}))
    delta_world = conj(world_parts)

    grow = forall(ra, univ, imp(atom(m1, (ra, p1)), atom(m1, (ra, q1))))
    agree = forall(ra, univ, imp(
        atom(m1, (ra, p1)),
        forall(rb, univ, imp(
            atom(m1, (rb, p1)),
            iff(atom(m2, (ra, rb, q2)), atom(m2, (ra, rb, p2)))))))
    end = forall(rb, univ, imp(
        atom(m1, (rb, p1)),
        forall(ra, univ, imp(
            atom(m1, (ra, q1)),
            or_(atom(m1, (ra, p1)), not_(atom(m2, (ra, rb, q2))))))))

    domains = {
        fm.world_sort.name: DomainComp((p1, p2), delta_world),
        fm.elem_sort.name: DomainComp((x1, x2), and_(
            atom(sp_obj, (x1,)), eq(univ, x2, x1))),
    }
    eqs = {
        fm.world_sort.name: EqComp((p1, p2), (q1, q2),
                                   and_(eq(univ, p1, q1), eq(univ, p2, q2))),
        fm.elem_sort.name: EqComp((x1, x2), (y1, y2), eq(univ, x1, y1)),
    }
    preds = {
        fm.le.name: PredComp(((q1, q2), (p1, p2)),
                             conj([grow, agree, end])),
        fm.dom.name: PredComp(((p1, p2), (x1, x2)), atom(sp_obj, (x1,))),
        fm.eq_at.name: PredComp(((p1, p2), (x1, x2), (y1, y2)),
                                eq(univ, x1, y1)),
    }
    for pname, _ in fm.starred:
        starred = fm.starred_pred(pname)
        if pname == mem_pred.name:
            preds[starred.name] = PredComp(
                ((p1, p2), (y1, y2), (x1, x2)), atom(m2, (y1, x1, p2)))
        else:
            k = starred.arity - 1
            blocks = _blocks("z", k, 2, [p1, p2])
            preds[starred.name] = PredComp(
                ((p1, p2),) + tuple(blocks),
                atom(pm[pname], tuple(b[0] for b in blocks)))
    out = interpretation(name, src, w, 2, domains, preds, eqs)
    return ForcingInterpretation(asrc, out)


def small_relation_forcing_interp(t: Theory,
                                  base_interp: Optional[Interpretation]
                                  = None,
                                  name: Optional[str] = None
                                  ) -> ForcingInterpretation:
    """Force adjunctive sets by small relations inside the classes.

    Worlds are pairs of a small carrier class and a binary relation class
    confined to it, ordered by end-extension: carriers grow, the relation
    is unchanged on old carrier pairs, and nothing new lands in an old
    set.  Elements are all base objects; membership at a world reads the
    relation class.  An accompanying interpretation argument is validated
    and recorded for callers that track where the base theory came from,
    but the construction itself only consumes the theory.
    """
    base = ensure_one_sorted(t)
    if base.schemes:
        raise TheoryError(
            "small_relation_forcing_interp needs concrete axioms only")
    if base_interp is not None:
        validate_wf(base_interp)
    sc = small_class_formula(base)
    return _relation_forcing(base, sc.host, sc,
                             name or f"smallforce-{base.name}")


def all_small_forcing_interp(t: Theory,
                             base_interp: Optional[Interpretation] = None,
                             name: Optional[str] = None
                             ) -> ForcingInterpretation:
    """The small-relation construction with every class counted small.

    Same worlds and ordering, but the carrier condition is dropped, and
    the host is the separation-class theory with nonempty universe
    appended, so separation instances stand in for full comprehension.
    """
    base = ensure_one_sorted(t)
    if base.schemes:
        raise TheoryError(
            "all_small_forcing_interp needs concrete axioms only")
    if base_interp is not None:
        validate_wf(base_interp)
    n = max([2] + [p.arity for p in base.signature.predicates])
    host = with_nu(ps_le_n(base, n))
    return _relation_forcing(base, host, None,
                             name or f"allsmallforce-{base.name}")


# --------------------------------------------------------------------------
# Separation-backed constructions.

@dataclass(frozen=True)
class SeparationInstance:
    """One separation instance: a member condition with its parameters."""

    formula: Formula
    member_vars: tuple[Var, ...]
    params: tuple[tuple[Var, Sort], ...] = ()


def _check_instance(inst: SeparationInstance, ac: Theory, n: int) -> None:
    k = len(inst.member_vars)
    if not 1 <= k <= n:
        raise InterpretationError(
            f"separation instance arity {k} outside 1..{n}")
    if len(set(inst.member_vars)) != k:
        raise InterpretationError("separation instance repeats a member "
                                  "variable")
    s = ac.meta["pc"]["object_sort"]
    declared = {v: s for v in inst.member_vars}
    declared.update(dict(inst.params))
    for v, sort in free_var_sorts(desugar(inst.formula)).items():
        if v not in declared:
            raise InterpretationError(
                f"separation instance leaves {var_name(v)} undeclared")
        if declared[v] != sort:
            raise InterpretationError(
                f"separation instance uses {var_name(v)} at sort "
                f"{sort.name}, declared {declared[v].name}")


def union_friendly_interp(t: Theory, instances: Sequence[SeparationInstance],
                          n: Optional[int] = None,
                          name: Optional[str] = None) -> Interpretation:
    """Separation instances recovered inside union-friendly classes.

    The source is the adjunctive class theory plus one separation axiom
    per instance.  First-level classes shrink to those for which every
    variant of every instance, with any subset of the member positions
    relativized to the class and the rest pinned to witnesses, cuts out a
    class whose unions with arbitrary classes exist.  Everything else is
    read identically in the flattening of the adjunctive class theory.
    """
    base = ensure_one_sorted(t)
    instances = tuple(instances)
    if n is None:
        n = max([1] + [len(inst.member_vars) for inst in instances])
    ac = ac_le_n(base, n)
    info = ac.meta["pc"]
    s = info["object_sort"]
    cls = info["class_sorts"]
    mems = info["member_preds"]
    for inst in instances:
        _check_instance(inst, ac, n)

    extra = []
    for inst in instances:
        k = len(inst.member_vars)
        used = set(inst.member_vars) | {v for v, _ in inst.params}
        used |= all_vars(inst.formula)
        (cv,) = _fresh_block("C", 1, used)
        (yv,) = _fresh_block("Y", 1, used | {cv})
        sep_body = and_(inst.formula,
                        conj([atom(mems[0], (x, cv))
                              for x in inst.member_vars]))
        extra.append(desugar(forall_many(
            list(inst.params) + [(cv, cls[0])],
            exists(yv, cls[k - 1], forall_many(
                [(x, s) for x in inst.member_vars],
                iff(atom(mems[k - 1], inst.member_vars + (yv,)),
                    sep_body))))))
    src = Theory(f"{ac.name}-sep{len(instances)}", ac.signature,
                 ac.axioms + tuple(extra), ac.schemes, ac.meta)

    w = flatten(ac)
    univ = w.sole_sort()
    sp, pm = _flat_parts(w)
    sp_obj = sp[s.name]
    sp_cls = {k: sp[cls[k - 1].name] for k in range(1, n + 1)}
    fmem = {k: pm[mems[k - 1].name] for k in range(1, n + 1)}

    def union_friendly(yv: Var, k: int, used: set[Var]) -> Formula:
        (other,) = _fresh_block("ufY", 1, used)
        (zv,) = _fresh_block("ufZ", 1, used | {other})
        uxs = _blocks("ufx", k, 1, used | {other, zv})
        flat = tuple(b[0] for b in uxs)
        member_union = forall_many(
            [(x, univ) for x in flat],
            imp(conj([atom(sp_obj, (x,)) for x in flat]),
                iff(atom(fmem[k], flat + (zv,)),
                    or_(atom(fmem[k], flat + (yv,)),
                        atom(fmem[k], flat + (other,))))))
        return forall(other, univ, imp(
            atom(sp_cls[k], (other,)),
            exists(zv, univ, and_(atom(sp_cls[k], (zv,)), member_union))))

    seen: set[Var] = set()
    for inst in instances:
        seen |= all_vars(inst.formula) | set(inst.member_vars)
        seen |= {v for v, _ in inst.params}
    (bx,) = _fresh_block("X", 1, seen)
    conds = []
    for inst in instances:
        k = len(inst.member_vars)
        phi_f = _flatten_formula(inst.formula, ac, w)
        used = set(all_vars(phi_f)) | set(inst.member_vars) | {bx}
        used |= {v for v, _ in inst.params}
        (cv,) = _fresh_block("uC", 1, used)
        used.add(cv)
        zs = _blocks("uz", k, 1, used)
        zflat = tuple(b[0] for b in zs)
        used.update(zflat)
        (yv,) = _fresh_block("uY", 1, used)
        used.add(yv)
        phi_full = and_(phi_f, conj([atom(fmem[1], (x, cv))
                                     for x in inst.member_vars]))
        variants = []
        for mask in range(1 << k):
            pins = []
            for j, x in enumerate(inst.member_vars):
                if mask >> j & 1:
                    pins.append(atom(fmem[1], (x, bx)))
                else:
                    pins.append(eq(univ, x, zflat[j]))
            defn = forall_many(
                [(x, univ) for x in inst.member_vars],
                imp(conj([atom(sp_obj, (x,)) for x in inst.member_vars]),
                    iff(atom(fmem[k], inst.member_vars + (yv,)),
                        conj([phi_full] + pins))))
            variants.append(exists(yv, univ, conj([
                atom(sp_cls[k], (yv,)), defn,
                union_friendly(yv, k, used)])))
        quant = [(v, univ) for v, _ in inst.params] + [(cv, univ)]
        guards = [atom(sp[sort.name], (v,)) for v, sort in inst.params]
        guards.append(atom(sp_cls[1], (cv,)))
        conds.append(forall_many(quant, imp(
            conj(guards),
            forall_many([(z, univ) for z in zflat],
                        imp(conj([atom(sp_obj, (z,)) for z in zflat]),
                            conj(variants))))))

    v = Var("v")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), atom(sp_obj, (v,)))}
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r))}
    preds = {}
    for p in base.signature.predicates:
        args = tuple(Var("v", j + 1) for j in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(pm[p.name], args))
    for k in range(1, n + 1):
        if k == 1:
            domains[cls[0].name] = DomainComp(
                (bx,), conj([atom(sp_cls[1], (bx,))] + conds))
        else:
            domains[cls[k - 1].name] = DomainComp(
                (bx,), atom(sp_cls[k], (bx,)))
        xs = tuple(Var("x", j + 1) for j in range(k))
        preds[mems[k - 1].name] = PredComp(
            tuple((x,) for x in xs) + ((bx,),),
            atom(fmem[k], xs + (bx,)))
        eqs[cls[k - 1].name] = EqComp((l,), (r,), eq(univ, l, r))
    return interpretation(name or f"unionfriendly-{ac.name}", src, w, 1,
                          domains, preds, eqs)


def ps_small_interp(t: Theory, n: int,
                    base_interp: Optional[Interpretation] = None,
                    name: Optional[str] = None) -> Interpretation:
    """Separation classes relativized to the small ones.

    Reads the separation-class theory with nonempty universe inside the
    flattening of the separation-class theory itself, shrinking the
    first-level class sort to the small classes and leaving everything
    else identical.  Separation inside a small class stays small, so the
    separation schemes survive the restriction.
    """
    base = ensure_one_sorted(t)
    if base_interp is not None:
        validate_wf(base_interp)
    sc = small_class_formula(base)
    need = sc.host.meta["pc"]["n"]
    if n < need:
        raise TheoryError(
            f"ps_small_interp needs n >= {need} for {base.name}")
    ps = ps_le_n(base, n)
    src = with_nu(ps)
    w = flatten(ps)
    univ = w.sole_sort()
    sp, pm = _flat_parts(w)
    info = ps.meta["pc"]
    s = info["object_sort"]
    cls = info["class_sorts"]
    mems = info["member_preds"]
    small_flat = _flatten_formula(sc.formula, sc.host, w)

    v, bx = Var("v"), Var("X")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), atom(sp[s.name], (v,)))}
    eqs = {s.name: EqComp((l,), (r,), eq(univ, l, r))}
    preds = {}
    for p in base.signature.predicates:
        args = tuple(Var("v", j + 1) for j in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(pm[p.name], args))
    for k in range(1, n + 1):
        guard: Formula = atom(sp[cls[k - 1].name], (bx,))
        if k == 1:
            guard = and_(guard, substitute(small_flat, {sc.var: bx}))
        domains[cls[k - 1].name] = DomainComp((bx,), guard)
        xs = tuple(Var("x", j + 1) for j in range(k))
        preds[mems[k - 1].name] = PredComp(
            tuple((x,) for x in xs) + ((bx,),),
            atom(pm[mems[k - 1].name], xs + (bx,)))
        eqs[cls[k - 1].name] = EqComp((l,), (r,), eq(univ, l, r))
    return interpretation(name or f"pssmall{n}-{base.name}", src, w, 1,
                          domains, preds, eqs)


# --------------------------------------------------------------------------
# Trading dimension against the power encoding.

def t_power_expand(t: Theory, n: int,
                   name: Optional[str] = None) -> Interpretation:
    """The n-dimensional reading of the power theory back in its base.

    A power object is an n-block of base elements; the diagonal predicate
    asks the block to be constant, tupling matches blocks coordinatewise
    against diagonal codes, and base predicates act on first coordinates.
    """
    base = ensure_one_sorted(t)
    tp = t_power(base, n)
    s = base.sole_sort()
    pinfo = tp.meta["t_power"]
    diag, tup = pinfo["diag_pred"], pinfo["tuple_pred"]
    block = tuple(Var("v", j + 1) for j in range(n))
    lblk = tuple(Var("l", j + 1) for j in range(n))
    rblk = tuple(Var("r", j + 1) for j in range(n))
    preds = {}
    for p in base.signature.predicates:
        bs = _blocks("x", p.arity, n, ())
        preds[p.name] = PredComp(tuple(bs),
                                 atom(p, tuple(b[0] for b in bs)))
    preds[diag.name] = PredComp(
        (block,), conj([eq(s, block[j], block[0]) for j in range(1, n)],
                       empty=truth(block[0], s)))
    wb = tuple(Var("w", j + 1) for j in range(n))
    ybs = _blocks("y", n, n, wb)
    parts = []
    for i, yb in enumerate(ybs):
        parts.append(eq(s, yb[0], wb[i]))
        parts += [eq(s, yb[j], yb[0]) for j in range(1, n)]
    preds[tup.name] = PredComp((wb,) + tuple(ybs), conj(parts))
    return interpretation(
        name or f"expand-{tp.name}", tp, base, n,
        {s.name: DomainComp(block, truth(block[0], s))},
        preds,
        {s.name: EqComp(lblk, rblk,
                        conj([eq(s, a, b) for a, b in zip(lblk, rblk)]))})


def dim_convert(i: Interpretation, direction: str,
                name: Optional[str] = None) -> Interpretation:
    """Trade interpretation dimension against the power theory.

    "forward" turns an n-dimensional reading into a one-dimensional
    reading in the power theory of the target: blocks become single
    power objects, decoded through the tupling predicate, with all
    target quantifiers relativized to the diagonal.  "backward"
    multiplies a one-dimensional reading out of a power theory back
    into blocks over that theory's base.
    """
    if i.params:
        raise InterpretationError(
            f"{i.name}: dim_convert does not carry parameters")
    if direction == "backward":
        pinfo = i.target.meta.get("t_power")
        if pinfo is None:
            raise InterpretationError(
                f"{i.name}: backward conversion needs a power theory target")
        if i.dim != 1:
            raise InterpretationError(
                f"{i.name}: backward conversion needs dimension 1")
        expand = t_power_expand(pinfo["base"], pinfo["power"])
        return compose(expand, i, name=name or f"widen-{i.name}")
    if direction != "forward":
        raise InterpretationError(
            f"dim_convert direction must be forward or backward, "
            f"got {direction!r}")

    v = i.target
    s = v.sole_sort()
    d = i.dim
    tp = t_power(v, d)
    pinfo = tp.meta["t_power"]
    diag, tup = pinfo["diag_pred"], pinfo["tuple_pred"]

    def rel(phi: Formula) -> Formula:
        return transform_formula(desugar(phi), {s: s}, {},
                                 {s: lambda vv: atom(diag, (vv,))})

    def decode(blocks: Sequence[tuple[Var, ...]], actual: Sequence[Var],
               phi: Formula) -> Formula:
        taken = set(actual)
        for b in blocks:
            taken.update(b)
        fresh = _blocks("dc", len(blocks), d, taken)
        mapping = {}
        for b, f in zip(blocks, fresh):
            mapping.update(dict(zip(b, f)))
        body = conj([atom(tup, (w,) + f)
                     for w, f in zip(actual, fresh)]
                    + [substitute(rel(phi), mapping)])
        return exists_many([(x, s) for f in fresh for x in f], body)

    domains = {}
    eqs = {}
    preds = {}
    for sname, c in i.domains.items():
        (w,) = _fresh_block("cw", 1, c.block)
        domains[sname] = DomainComp((w,), decode([c.block], [w], c.formula))
    for sname, c in i.eqs.items():
        (wl,) = _fresh_block("cl", 1, c.left + c.right)
        (wr,) = _fresh_block("cr", 1, c.left + c.right + (wl,))
        eqs[sname] = EqComp((wl,), (wr,),
                            decode([c.left, c.right], [wl, wr], c.formula))
    for pname, c in i.preds.items():
        flat = tuple(x for b in c.blocks for x in b)
        wvs = _blocks("cp", len(c.blocks), 1, flat)
        actual = [b[0] for b in wvs]
        preds[pname] = PredComp(tuple(wvs),
                                decode(list(c.blocks), actual, c.formula))
    return interpretation(name or f"narrow-{i.name}", i.source, tp, 1,
                          domains, preds, eqs)


# --------------------------------------------------------------------------
# Self-membered singletons simulating bounded classes.

def pc_st_simulation(t: Theory, n: int,
                     name: Optional[str] = None) -> Interpretation:
    """Bounded classes simulated over the power theory by one class sort.

    Objects are the diagonal singletons; any element serves as a class of
    every arity, with a k-tuple counted as member when some singleton
    member of the class tuples to it, padded out with repeats of the
    first coordinate.  Class equality is coextensionality over objects.
    """
    if n < 1:
        raise TheoryError("pc_st_simulation requires n >= 1")
    base = ensure_one_sorted(t)
    tp = t_power(base, n)
    tgt = flatten_overlapping(pc_st(tp))
    s = tgt.sole_sort()
    pinfo = tp.meta["t_power"]
    diag, tup = pinfo["diag_pred"], pinfo["tuple_pred"]
    cinfo = tgt.meta["pc_st"]
    sng, mem = cinfo["sng_pred"], cinfo["member_pred"]
    tpred = {p.name: p for p in tgt.signature.predicates}

    src = pc_le_n(base, n)
    info = src.meta["pc"]
    v, bx, zz = Var("v"), Var("X"), Var("z")
    l, r = Var("L"), Var("R")

    def obj(x: Var) -> Formula:
        return and_(atom(tpred[sng.name], (x,)), atom(tpred[diag.name], (x,)))

    domains = {info["object_sort"].name: DomainComp((v,), obj(v))}
    lo, ro = Var("v", 1), Var("v", 2)
    eqs = {info["object_sort"].name: EqComp((lo,), (ro,), eq(s, lo, ro))}
    preds = {}
    for p in base.signature.predicates:
        args = tuple(Var("v", j + 1) for j in range(p.arity))
        preds[p.name] = PredComp(tuple((x,) for x in args),
                                 atom(tpred[p.name], args))
    for k in range(1, n + 1):
        csort = info["class_sorts"][k - 1]
        cmem = info["member_preds"][k - 1]
        xs = tuple(Var("x", j + 1) for j in range(k))
        pad = (xs[0],) * (n - k)

        def coded(cvar: Var) -> Formula:
            return exists(zz, s, conj([
                atom(tpred[mem.name], (zz, cvar)),
                atom(tpred[sng.name], (zz,)),
                atom(tpred[tup.name], (zz,) + xs + pad)]))

        domains[csort.name] = DomainComp((bx,), truth(bx, s))
        preds[cmem.name] = PredComp(tuple((x,) for x in xs) + ((bx,),),
                                    coded(bx))
        eqs[csort.name] = EqComp((l,), (r,), forall_many(
            [(x, s) for x in xs],
            imp(conj([obj(x) for x in xs]),
                iff(coded(l), coded(r)))))
    return interpretation(name or f"sngsim{n}-{base.name}", src, tgt, 1,
                          domains, preds, eqs)
