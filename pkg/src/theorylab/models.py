"""Finite-model search and interpretation verification.

Brute-force enumeration of labeled structures, satisfaction checking with
bounded scheme instances, quotient construction of the structure an
interpretation induces, and the two-path verification that translated and
induced satisfaction agree.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, Mapping, Optional, Sequence

from .errors import CapExceeded, InterpretationError, ModelError
from .evaluator import eval_formula
from .interp import Interpretation, translate
from .pool import scheme_instance_pool
from .structures import FiniteStructure
from .syntax import Formula, Var, desugar, print_formula, var_name
from .theory import Theory

__all__ = [
    "enumerate_models", "enumerate_structures", "check_theory",
    "induced_structure", "VerificationReport", "verify_interpretation",
]


def _model_cap() -> int:
    return int(os.environ.get("THEORYLAB_MAX_MODELS", 2_000_000))


def atom_names(t: Theory, sizes: Mapping[str, int]) -> dict[str, tuple[str, ...]]:
    out = {}
    for s in t.signature.sorts:
        n = sizes[s.name]
        out[s.name] = tuple(f"{s.name}{k + 1}" for k in range(n))
    return out


def enumerate_structures(t: Theory, sizes: Mapping[str, int] | int
                         ) -> Iterator[FiniteStructure]:
    """All labeled structures with the given exact sort cardinalities.

    Universe atoms are named sort1, sort2, ...; every combination of
    predicate tables is produced.  Raises CapExceeded when the table space
    is larger than THEORYLAB_MAX_MODELS.
    """
    if isinstance(sizes, int):
        sizes = {s.name: sizes for s in t.signature.sorts}
    for s in t.signature.sorts:
        if sizes.get(s.name, 0) < 1:
            raise ModelError(f"sort {s.name} needs at least one atom")
    names = atom_names(t, sizes)
    universe = tuple(a for s in t.signature.sorts for a in names[s.name])
    sort_of = {a: s.name for s in t.signature.sorts for a in names[s.name]}

    row_spaces = []
    total = 1
    for p in t.signature.predicates:
        rows = list(product(*(names[s.name] for s in p.argument_sorts)))
        row_spaces.append((p.name, rows))
        total *= 2 ** len(rows)
        if total > _model_cap():
            raise CapExceeded("structure space too large", total, _model_cap())

    def rec(idx: int, tables: dict):
        if idx == len(row_spaces):
            yield FiniteStructure(universe, sort_of, dict(tables))
            return
        pname, rows = row_spaces[idx]
        for bits in range(2 ** len(rows)):
            tables[pname] = frozenset(
                r for k, r in enumerate(rows) if bits >> k & 1)
            yield from rec(idx + 1, tables)

    yield from rec(0, {})


def enumerate_models(t: Theory, sizes: Mapping[str, int] | int,
                     scheme_depth: Optional[int] = None,
                     scheme_limit: Optional[int] = None
                     ) -> Iterator[FiniteStructure]:
    """Structures of the given sizes satisfying every axiom (and, when
    scheme_depth is set, every bounded scheme instance)."""
    sentences = list(t.axioms)
    if scheme_depth is not None:
        for scheme in t.schemes:
            sentences.extend(
                scheme.instantiate(phi) for phi in scheme_instance_pool(
                    t, scheme, depth=scheme_depth, limit=scheme_limit))
    for m in enumerate_structures(t, sizes):
        if all(eval_formula(m, ax) for ax in sentences):
            yield m


def check_theory(m: FiniteStructure, t: Theory,
                 scheme_depth: Optional[int] = None,
                 scheme_limit: Optional[int] = None) -> list[Formula]:
    """Axioms and bounded scheme instances failing in m."""
    bad = [ax for ax in t.axioms if not eval_formula(m, ax)]
    if scheme_depth is not None:
        for scheme in t.schemes:
            for phi in scheme_instance_pool(t, scheme, depth=scheme_depth,
                                            limit=scheme_limit):
                inst = scheme.instantiate(phi)
                if not eval_formula(m, inst):
                    bad.append(inst)
    return bad


# --------------------------------------------------------------------------
# Induced structures.

def _tuple_key(m: FiniteStructure) -> Mapping[str, int]:
    return {a: k for k, a in enumerate(m.universe)}


def induced_structure(i: Interpretation, m: FiniteStructure,
                      params: Mapping[Var, str] | None = None,
                      check: bool = True) -> FiniteStructure:
    """The source-signature structure an interpretation reads off m.

    Elements of each source sort are equivalence classes of coordinate
    tuples satisfying the domain formula, named by their least
    representative.  With check=True the equality components are verified
    to be equivalences and congruences for every predicate table (fail
    fast with a witness otherwise).
    """
    params = dict(params or {})
    if set(params) != set(i.params):
        raise InterpretationError(
            f"{i.name}: parameter assignment must cover exactly "
            f"{tuple(map(str, i.params))}")
    if i.param_domain is not None and params:
        if not eval_formula(m, i.param_domain, params):
            raise InterpretationError(
                f"{i.name}: parameter assignment violates the parameter "
                f"domain")
    order = _tuple_key(m)

    def key(tup: tuple[str, ...]):
        return tuple(order[a] for a in tup)

    # candidate tuples and equivalence classes per source sort
    reps: dict[str, dict[tuple[str, ...], tuple[str, ...]]] = {}
    classes: dict[str, list[tuple[str, ...]]] = {}
    for s in i.source.signature.sorts:
        dc = i.domains[s.name]
        cands = []
        for tup in product(m.universe, repeat=i.dim):
            env = dict(params)
            env.update(zip(dc.block, tup))
            if eval_formula(m, dc.formula, env):
                cands.append(tup)
        if not cands:
            raise ModelError(
                f"{i.name}: empty induced domain for sort {s.name}")
        ec = i.eqs[s.name]

        def equiv(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
            env = dict(params)
            env.update(zip(ec.left, a))
            env.update(zip(ec.right, b))
            return eval_formula(m, ec.formula, env)

        if check:
            for a in cands:
                if not equiv(a, a):
                    raise ModelError(
                        f"{i.name}: equality on {s.name} not reflexive "
                        f"at {a}")
            for a, b in combinations(cands, 2):
                ab, ba = equiv(a, b), equiv(b, a)
                if ab != ba:
                    raise ModelError(
                        f"{i.name}: equality on {s.name} not symmetric "
                        f"at {a}, {b}")
        rep_of: dict[tuple[str, ...], tuple[str, ...]] = {}
        for tup in sorted(cands, key=key):
            if tup in rep_of:
                continue
            rep_of[tup] = tup
            for other in cands:
                if other not in rep_of and equiv(tup, other):
                    rep_of[other] = tup
        if check:
            for a, b in combinations(cands, 2):
                if equiv(a, b) and rep_of[a] != rep_of[b]:
                    raise ModelError(
                        f"{i.name}: equality on {s.name} not transitive "
                        f"near {a}, {b}")
        reps[s.name] = rep_of
        classes[s.name] = sorted(set(rep_of.values()), key=key)

    def class_name(sort_name: str, rep: tuple[str, ...]) -> str:
        return f"{sort_name}:{'+'.join(rep)}"

    universe = tuple(class_name(s.name, rep)
                     for s in i.source.signature.sorts
                     for rep in classes[s.name])
    sort_of = {class_name(s.name, rep): s.name
               for s in i.source.signature.sorts
               for rep in classes[s.name]}

    tables: dict[str, frozenset] = {}
    for p in i.source.signature.predicates:
        pc = i.preds[p.name]

        def holds(tups: Sequence[tuple[str, ...]]) -> bool:
            env = dict(params)
            for block, tup in zip(pc.blocks, tups):
                env.update(zip(block, tup))
            return eval_formula(m, pc.formula, env)

        arg_classes = [classes[s.name] for s in p.argument_sorts]
        rows = set()
        for combo in product(*arg_classes):
            if holds(combo):
                rows.add(tuple(class_name(s.name, rep)
                               for s, rep in zip(p.argument_sorts, combo)))
        if check:
            # congruence: the translated table may not distinguish
            # equivalent representatives
            for combo in product(*arg_classes):
                base = holds(combo)
                for pos in range(p.arity):
                    sname = p.argument_sorts[pos].name
                    for alt, rep in reps[sname].items():
                        if rep != combo[pos] or alt == combo[pos]:
                            continue
                        variant = list(combo)
                        variant[pos] = alt
                        if holds(variant) != base:
                            raise ModelError(
                                f"{i.name}: predicate {p.name} not a "
                                f"congruence at {combo} vs {tuple(variant)}")
        tables[p.name] = frozenset(rows)

    return FiniteStructure(universe, sort_of, tables)


# --------------------------------------------------------------------------
# Two-path verification.

@dataclass(frozen=True)
class VerificationReport:
    interpretation: str
    model_size: int
    params: tuple[tuple[str, str], ...]
    axiom_results: tuple[tuple[str, bool, bool], ...]
    scheme_results: tuple[tuple[str, bool, bool], ...]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [f"interpretation {self.interpretation} on model of size "
               f"{self.model_size}"
               + (f" with params {dict(self.params)}" if self.params else "")]
        for label, tr, ind in self.axiom_results + self.scheme_results:
            mark = "ok" if tr and ind else "FAIL"
            out.append(f"  [{mark}] translated={tr} induced={ind} {label}")
        for f in self.failures:
            out.append(f"  failure: {f}")
        out.append(f"result: {'PASS' if self.ok else 'FAIL'}")
        return out


def verify_interpretation(i: Interpretation, m: FiniteStructure,
                          params: Mapping[Var, str] | None = None,
                          scheme_depth: Optional[int] = None,
                          scheme_limit: Optional[int] = None,
                          check_induced: bool = True,
                          axioms: Optional[Sequence[Formula]] = None
                          ) -> VerificationReport:
    """Check every source axiom along both paths on one target model.

    Path one translates the axiom and evaluates on m; path two evaluates
    the axiom directly on the induced structure.  Bounded scheme instances
    are checked the same way when scheme_depth is set.  Both paths must
    return True and agree; any equivalence/congruence defect surfaces as a
    failure rather than an exception.  Passing `axioms` restricts the
    axiom pass to exactly that sentence list in place of the full set.
    """
    params = dict(params or {})
    failures: list[str] = []
    induced = None
    try:
        induced = induced_structure(i, m, params, check=check_induced)
    except (ModelError, InterpretationError) as e:
        failures.append(str(e))

    axiom_list = list(i.source.axioms) if axioms is None else list(axioms)
    sentences: list[tuple[str, Formula]] = [
        (print_formula(ax), ax) for ax in axiom_list]
    if scheme_depth is not None:
        for scheme in i.source.schemes:
            for phi in scheme_instance_pool(i.source, scheme,
                                            depth=scheme_depth,
                                            limit=scheme_limit):
                sentences.append((f"[{scheme.kind}] {print_formula(phi)}",
                                  scheme.instantiate(phi)))
    n_axioms = len(axiom_list)

    axiom_results: list[tuple[str, bool, bool]] = []
    scheme_results: list[tuple[str, bool, bool]] = []
    for idx, (label, phi) in enumerate(sentences):
        phi = desugar(phi)
        tr_env = dict(params)
        tr = eval_formula(m, translate(i, phi), tr_env)
        ind = (eval_formula(induced, phi) if induced is not None else False)
        row = (label, tr, ind)
        (axiom_results if idx < n_axioms else scheme_results).append(row)
        if not tr:
            failures.append(f"translated axiom false: {label}")
        if induced is not None and not ind:
            failures.append(f"induced model refutes: {label}")
        if induced is not None and tr != ind:
            failures.append(f"paths disagree on: {label}")

    return VerificationReport(
        i.name, len(m.universe),
        tuple(sorted((var_name(v), a) for v, a in params.items())),
        tuple(axiom_results), tuple(scheme_results), tuple(failures))
