"""Pure-Python evaluation backend.

Mirrors the compiled kernel exactly: same program format, same guard-set
strategy, same persistence-sweep algorithm.  Used when the extension is not
built and for differential testing of the kernel.
"""

from __future__ import annotations

import os
from itertools import product
from typing import Mapping, Optional

from .errors import CapExceeded, ModelError
from .evaluator import K_ATOM, K_EQ, K_AND, K_NOT, K_FORALL, Program
from .structures import FiniteStructure

__all__ = ["Context", "run", "persistence_sweep"]


def _scan_cap() -> int:
    return int(os.environ.get("THEORYLAB_MAX_SCAN", 200_000_000))


_MEMO_CAP = 2_000_000


class Context:
    """Per-structure evaluation state: indexed tables and guard caches."""

    def __init__(self, structure: FiniteStructure):
        self.structure = structure
        self.atoms = list(structure.universe)
        self.atom_index = {a: i for i, a in enumerate(self.atoms)}
        self.sort_tag = [structure.sort_of[a] for a in self.atoms]
        members: dict[str, list[int]] = {}
        for i, a in enumerate(self.atoms):
            members.setdefault(structure.sort_of[a], []).append(i)
        self.sort_members = members
        self.tables: dict[str, frozenset] = {}
        self.rows: dict[str, list[tuple[int, ...]]] = {}
        idx = self.atom_index
        for name, rows in structure.tables.items():
            encoded = [tuple(idx[a] for a in row) for row in sorted(rows)]
            self.rows[name] = encoded
            self.tables[name] = frozenset(encoded)
        self.guard_cache: dict = {}
        self.pos_index: dict = {}
        self.forall_memo: dict = {}

    def rows_with(self, name: str, pos: int, value: int
                  ) -> list[tuple[int, ...]]:
        """Rows of a table with a fixed value at one position, indexed."""
        key = (name, pos)
        by_val = self.pos_index.get(key)
        if by_val is None:
            by_val = {}
            for row in self.rows[name]:
                by_val.setdefault(row[pos], []).append(row)
            self.pos_index[key] = by_val
        return by_val.get(value, ())


def _bind(prog: Program, ctx: Context):
    tables = []
    rows = []
    for name in prog.pred_names:
        t = ctx.tables.get(name)
        if t is None:
            raise ModelError(f"structure has no table for predicate {name}")
        tables.append(t)
        rows.append(ctx.rows[name])
    members = [tuple(ctx.sort_members.get(name, ()))
               for name in prog.sort_names]
    return tables, rows, members


def _guard_set(prog: Program, ctx: Context, ci: int, env: list,
               tables, rows, members, ev) -> list[tuple[int, ...]]:
    spec = prog.chains[ci]
    key = (id(prog), ci, tuple(env[s] for s in spec.extras))
    hit = ctx.guard_cache.get(key)
    if hit is not None:
        return hit
    out: set[tuple[int, ...]] = set()
    tag = ctx.sort_tag
    sort_names = [prog.sort_names[s] for s in spec.sort_ids]
    if spec.atom_scan is not None:
        pred_id, argslots = spec.atom_scan
        extra_vals = {s: env[s] for s in spec.extras}
        scan = rows[pred_id]
        for pos, s in enumerate(argslots):
            if s in extra_vals:
                scan = ctx.rows_with(prog.pred_names[pred_id], pos,
                                     extra_vals[s])
                break
        for row in scan:
            vals: dict[int, int] = {}
            ok = True
            for pos, s in enumerate(argslots):
                v = row[pos]
                if s in extra_vals:
                    if v != extra_vals[s]:
                        ok = False
                        break
                elif s in vals:
                    if vals[s] != v:
                        ok = False
                        break
                else:
                    vals[s] = v
            if not ok:
                continue
            tup = tuple(vals[s] for s in spec.slots)
            if all(tag[v] == sn for v, sn in zip(tup, sort_names)):
                out.add(tup)
    else:
        ranges = [members[s] for s in spec.sort_ids]
        total = 1
        for r in ranges:
            total *= len(r)
        cap = _scan_cap()
        if total > cap:
            raise CapExceeded("guard scan too large", total, cap)
        saved = [env[s] for s in spec.slots]
        for tup in product(*ranges):
            for s, v in zip(spec.slots, tup):
                env[s] = v
            if ev(spec.guard):
                out.add(tup)
        for s, v in zip(spec.slots, saved):
            env[s] = v
    result = sorted(out)
    ctx.guard_cache[key] = result
    return result


def run(prog: Program, ctx: Context, env: list) -> bool:
    tables, rows, members = _bind(prog, ctx)
    kind, a, b, c = prog.kind, prog.a, prog.b, prog.c
    chain_of, args = prog.chain_of, prog.args
    forall_free = prog.forall_free
    memo = ctx.forall_memo
    prog_key = id(prog)

    def ev(i: int) -> bool:
        k = kind[i]
        if k == K_ATOM:
            off = b[i]
            return tuple(env[args[off + j]] for j in range(c[i])) in tables[a[i]]
        if k == K_EQ:
            return env[a[i]] == env[b[i]]
        if k == K_AND:
            return ev(a[i]) and ev(b[i])
        if k == K_NOT:
            return not ev(a[i])
        # K_FORALL: memoized on the values of the node's free slots when
        # there is at most one, so entries stay few and reusable
        mf = forall_free[i]
        mkey = None
        if len(mf) <= 1:
            mkey = (prog_key, i, tuple(env[s] for s in mf))
            hit = memo.get(mkey)
            if hit is not None:
                return hit
        ci = chain_of[i]
        if ci >= 0:
            spec = prog.chains[ci]
            g = _guard_set(prog, ctx, ci, env, tables, rows, members, ev)
            saved = [env[s] for s in spec.slots]
            ok = True
            for tup in g:
                for s, v in zip(spec.slots, tup):
                    env[s] = v
                if ev(spec.rest):
                    ok = False
                    break
            for s, v in zip(spec.slots, saved):
                env[s] = v
        else:
            slot, body = a[i], b[i]
            saved_v = env[slot]
            ok = True
            for v in members[c[i]]:
                env[slot] = v
                if not ev(body):
                    ok = False
                    break
            env[slot] = saved_v
        if mkey is not None and len(memo) < _MEMO_CAP:
            memo[mkey] = ok
        return ok

    return ev(prog.root)


# --------------------------------------------------------------------------
# Forcing persistence sweep.
#
# Pool formulas are over two element variables (slots 0, 1), one unary and
# one binary predicate, and equality.  A datum is a reflexive-transitive
# frame (below-masks), antitone nonempty domains over at most 2 elements,
# and persistent tables confined to the domains.  The DP computes the
# forcing value of every pool node at every world under all 4 environments.

def persistence_sweep(pool_nodes, roots, free_mask, frames, n_elems=2,
                      literal=False, collect_limit=10):
    """Run the full enumeration; returns an aggregate result dict.

    pool_nodes: list of (kind, a, b, c) in child-first order where ATOM has
    a=pred(0 unary P, 1 binary R), b/c arg slots; EQ a/b slots; AND/NOT/
    FORALL reference earlier nodes.  roots: node ids whose persistence is
    checked.  free_mask: per node, bitmask of free slots.
    """
    n_nodes = len(pool_nodes)
    envs = [(ex, ey) for ey in range(2) for ex in range(2)]
    data_count = 0
    checks = 0
    violations = 0
    samples = []
    collapse_checks = 0
    collapse_mismatches = 0

    elem_all = (1 << n_elems) - 1
    dom_options = [d for d in range(1, elem_all + 1)]

    for frame_idx, below in enumerate(frames):
        nw = len(below)
        # Nested enumeration of domains and tables with constraint pruning.
        doms = [0] * nw
        uns = [0] * nw
        bins = [0] * nw

        def rec(w):
            nonlocal data_count
            if w == nw:
                data_count += 1
                _check_datum(below, doms, uns, bins)
                return
            for d in dom_options:
                ok = True
                for q in range(w):
                    if below[w] >> q & 1 and d & ~doms[q]:
                        ok = False  # q below w: dom grows downward
                        break
                    if below[q] >> w & 1 and doms[q] & ~d:
                        ok = False
                        break
                if not ok:
                    continue
                doms[w] = d
                for u in range(1 << n_elems):
                    if u & ~d:
                        continue
                    ok = True
                    for q in range(w):
                        if below[w] >> q & 1 and u & ~uns[q]:
                            ok = False
                            break
                        if below[q] >> w & 1 and uns[q] & ~u:
                            ok = False
                            break
                    if not ok:
                        continue
                    uns[w] = u
                    pair_all = 0
                    for e1 in range(n_elems):
                        for e2 in range(n_elems):
                            if d >> e1 & 1 and d >> e2 & 1:
                                pair_all |= 1 << (e1 * n_elems + e2)
                    rmask = pair_all
                    r = 0
                    while True:
                        ok = True
                        for q in range(w):
                            if below[w] >> q & 1 and r & ~bins[q]:
                                ok = False
                                break
                            if below[q] >> w & 1 and bins[q] & ~r:
                                ok = False
                                break
                        if ok:
                            bins[w] = r
                            rec(w + 1)
                        if r == rmask:
                            break
                        r = (r - rmask) & rmask  # next subset of pair_all

        def _check_datum(below, doms, uns, bins):
            nonlocal checks, violations, collapse_checks, collapse_mismatches
            nw = len(below)
            val = [[[False] * 4 for _ in range(nw)] for _ in range(n_nodes)]
            for i, (k, na, nb, nc) in enumerate(pool_nodes):
                vi = val[i]
                if k == K_ATOM:
                    for p in range(nw):
                        vp = vi[p]
                        for ei, (ex, ey) in enumerate(envs):
                            e1 = ex if nb == 0 else ey
                            if na == 0:
                                bit = 1 << e1
                                tabs = uns
                            else:
                                e2 = ex if nc == 0 else ey
                                bit = 1 << (e1 * n_elems + e2)
                                tabs = bins
                            good = True
                            bq = below[p]
                            for q in range(nw):
                                if not (bq >> q & 1):
                                    continue
                                found = False
                                br = below[q]
                                for rr in range(nw):
                                    if br >> rr & 1 and tabs[rr] & bit:
                                        found = True
                                        break
                                if not found:
                                    good = False
                                    break
                            vp[ei] = good
                elif k == K_EQ:
                    for p in range(nw):
                        vp = vi[p]
                        for ei, (ex, ey) in enumerate(envs):
                            e1 = ex if na == 0 else ey
                            e2 = ex if nb == 0 else ey
                            if e1 != e2:
                                vp[ei] = False
                                continue
                            good = True
                            bq = below[p]
                            for q in range(nw):
                                if not (bq >> q & 1):
                                    continue
                                found = False
                                br = below[q]
                                for rr in range(nw):
                                    if br >> rr & 1 and doms[rr] >> e1 & 1:
                                        found = True
                                        break
                                if not found:
                                    good = False
                                    break
                            vp[ei] = good
                elif k == K_AND:
                    va, vb = val[na], val[nb]
                    for p in range(nw):
                        vp, vap, vbp = vi[p], va[p], vb[p]
                        for ei in range(4):
                            vp[ei] = vap[ei] and vbp[ei]
                elif k == K_NOT:
                    va = val[na]
                    for p in range(nw):
                        vp = vi[p]
                        bq = below[p]
                        for ei in range(4):
                            good = True
                            if literal:
                                # literal clause: inner world stays p
                                if bq and va[p][ei]:
                                    good = False
                            else:
                                for q in range(nw):
                                    if bq >> q & 1 and va[q][ei]:
                                        good = False
                                        break
                            vp[ei] = good
                else:  # K_FORALL over slot na, child nb
                    va = val[nb]
                    for p in range(nw):
                        vp = vi[p]
                        bq = below[p]
                        for ei, (ex, ey) in enumerate(envs):
                            good = True
                            for q in range(nw):
                                if not (bq >> q & 1):
                                    continue
                                dq = doms[q]
                                for d in range(n_elems):
                                    if not (dq >> d & 1):
                                        continue
                                    if na == 0:
                                        e2 = d + 2 * ey
                                    else:
                                        e2 = ex + 2 * d
                                    if not va[q][e2]:
                                        good = False
                                        break
                                if not good:
                                    break
                            vp[ei] = good

            # persistence over valid environments, for every pool member
            for i in roots:
                fm = free_mask[i]
                vi = val[i]
                for p in range(nw):
                    bq = below[p]
                    dp = doms[p]
                    for ei, (ex, ey) in enumerate(envs):
                        if fm & 1:
                            if ex >= n_elems or not (dp >> ex & 1):
                                continue
                        elif ex:
                            continue
                        if fm & 2:
                            if ey >= n_elems or not (dp >> ey & 1):
                                continue
                        elif ey:
                            continue
                        if not vi[p][ei]:
                            continue
                        for q in range(nw):
                            if q == p or not (bq >> q & 1):
                                continue
                            checks += 1
                            if not vi[q][ei]:
                                violations += 1
                                if len(samples) < collect_limit:
                                    samples.append(
                                        (frame_idx, i, p, q, ex, ey,
                                         tuple(doms), tuple(uns), tuple(bins)))
            if nw == 1:
                # one-world collapse: forcing == classical evaluation
                cval = _classical(pool_nodes, doms[0], uns[0], bins[0],
                                  n_elems)
                for i in roots:
                    fm = free_mask[i]
                    for ei, (ex, ey) in enumerate(envs):
                        if fm & 1:
                            if ex >= n_elems or not (doms[0] >> ex & 1):
                                continue
                        elif ex:
                            continue
                        if fm & 2:
                            if ey >= n_elems or not (doms[0] >> ey & 1):
                                continue
                        elif ey:
                            continue
                        collapse_checks += 1
                        if val[i][0][ei] != cval[i][ei]:
                            collapse_mismatches += 1

        rec(0)

    return {
        "data": data_count,
        "checks": checks,
        "violations": violations,
        "samples": samples,
        "collapse_checks": collapse_checks,
        "collapse_mismatches": collapse_mismatches,
    }


def _classical(pool_nodes, dom, un, bn, n_elems):
    """Ordinary one-structure evaluation used by the collapse check."""
    n_nodes = len(pool_nodes)
    out = [[False] * 4 for _ in range(n_nodes)]
    for i, (k, na, nb, nc) in enumerate(pool_nodes):
        oi = out[i]
        for ei in range(4):
            ex, ey = ei & 1, ei >> 1
            if k == K_ATOM:
                e1 = ex if nb == 0 else ey
                if na == 0:
                    oi[ei] = bool(un >> e1 & 1)
                else:
                    e2 = ex if nc == 0 else ey
                    oi[ei] = bool(bn >> (e1 * n_elems + e2) & 1)
            elif k == K_EQ:
                e1 = ex if na == 0 else ey
                e2 = ex if nb == 0 else ey
                oi[ei] = e1 == e2
            elif k == K_AND:
                oi[ei] = out[na][ei] and out[nb][ei]
            elif k == K_NOT:
                oi[ei] = not out[na][ei]
            else:
                good = True
                for d in range(n_elems):
                    if not (dom >> d & 1):
                        continue
                    e2 = (d + 2 * ey) if na == 0 else (ex + 2 * d)
                    if not out[nb][e2]:
                        good = False
                        break
                oi[ei] = good
    return out
