"""Multi-dimensional interpretations between theories.

An interpretation reads a source theory inside a one-sorted target: each
source sort becomes a definable set of coordinate tuples, each source
predicate a definable relation on them, and each source equality a definable
equivalence.  translate() carries formulas across; compose() chains two
interpretations, multiplying dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import InterpretationError
from .syntax import (And, Atom, Eq, Forall, Formula, Not, Var, and_, atom,
                     conj, desugar, eq, forall, not_, substitute, truth,
                     var_name)
from .theory import Theory

__all__ = [
    "DomainComp", "PredComp", "EqComp", "Interpretation",
    "interpretation", "validate_wf", "translate", "compose",
    "identity_interp", "pad_dim", "coord_vars",
]


@dataclass(frozen=True)
class DomainComp:
    """Relativization formula with its designated coordinate block."""
    block: tuple[Var, ...]
    formula: Formula


@dataclass(frozen=True)
class PredComp:
    """Predicate translation with one coordinate block per argument."""
    blocks: tuple[tuple[Var, ...], ...]
    formula: Formula


@dataclass(frozen=True)
class EqComp:
    """Equality translation with left and right coordinate blocks."""
    left: tuple[Var, ...]
    right: tuple[Var, ...]
    formula: Formula


@dataclass(frozen=True)
class Interpretation:
    """A dim-dimensional reading of `source` inside one-sorted `target`.

    domains/eqs are keyed by source sort name, preds by source predicate
    name.  Optional parameter variables range over the target and may occur
    free in every component formula; param_domain constrains them.
    """

    name: str
    source: Theory
    target: Theory
    dim: int
    domains: Mapping[str, DomainComp]
    preds: Mapping[str, PredComp]
    eqs: Mapping[str, EqComp]
    params: tuple[Var, ...] = ()
    param_domain: Optional[Formula] = None


def interpretation(name: str, source: Theory, target: Theory, dim: int,
                   domains: Mapping[str, DomainComp],
                   preds: Mapping[str, PredComp],
                   eqs: Mapping[str, EqComp],
                   params: tuple[Var, ...] = (),
                   param_domain: Optional[Formula] = None) -> Interpretation:
    """Build, desugar every component formula, and validate."""
    out = Interpretation(
        name, source, target, dim,
        {k: DomainComp(c.block, desugar(c.formula))
         for k, c in domains.items()},
        {k: PredComp(c.blocks, desugar(c.formula)) for k, c in preds.items()},
        {k: EqComp(c.left, c.right, desugar(c.formula))
         for k, c in eqs.items()},
        tuple(params),
        desugar(param_domain) if param_domain is not None else None)
    validate_wf(out)
    return out


def _check_component(i: Interpretation, what: str, phi: Formula,
                     blocks: Sequence[tuple[Var, ...]]) -> None:
    tgt = i.target.sole_sort()
    seen: set[Var] = set()
    for block in blocks:
        if len(block) != i.dim:
            raise InterpretationError(
                f"{i.name}/{what}: block {tuple(map(var_name, block))} has "
                f"{len(block)} variables, dimension is {i.dim}")
        for v in block:
            if v in seen:
                raise InterpretationError(
                    f"{i.name}/{what}: variable {var_name(v)} repeats "
                    f"across blocks")
            seen.add(v)
    allowed = seen | set(i.params)
    for v, s in phi.free.items():
        if v not in allowed:
            raise InterpretationError(
                f"{i.name}/{what}: stray free variable {var_name(v)}")
        if s != tgt:
            raise InterpretationError(
                f"{i.name}/{what}: variable {var_name(v)} has sort "
                f"{s.name}, target sort is {tgt.name}")
    for node in _formula_atoms(phi):
        if not i.target.signature.has_predicate(node.pred.name):
            raise InterpretationError(
                f"{i.name}/{what}: predicate {node.pred.name} is not in "
                f"the target signature")


def _formula_atoms(phi: Formula):
    from .syntax import subformulas
    for node in subformulas(phi):
        if isinstance(node, Atom):
            yield node


def validate_wf(i: Interpretation) -> None:
    """Structural well-formedness; semantic checks live in verification."""
    if i.dim < 1:
        raise InterpretationError(f"{i.name}: dimension must be >= 1")
    i.target.sole_sort()
    if len(set(i.params)) != len(i.params):
        raise InterpretationError(f"{i.name}: duplicate parameters")
    for s in i.source.signature.sorts:
        if s.name not in i.domains:
            raise InterpretationError(
                f"{i.name}: no domain formula for sort {s.name}")
        if s.name not in i.eqs:
            raise InterpretationError(
                f"{i.name}: no equality formula for sort {s.name}")
    for p in i.source.signature.predicates:
        if p.name not in i.preds:
            raise InterpretationError(
                f"{i.name}: no translation for predicate {p.name}")
        if len(i.preds[p.name].blocks) != p.arity:
            raise InterpretationError(
                f"{i.name}/{p.name}: {len(i.preds[p.name].blocks)} blocks "
                f"for arity {p.arity}")
    for name, c in i.domains.items():
        _check_component(i, f"domain {name}", c.formula, (c.block,))
    for name, c in i.preds.items():
        _check_component(i, f"pred {name}", c.formula, c.blocks)
    for name, c in i.eqs.items():
        _check_component(i, f"eq {name}", c.formula, (c.left, c.right))
    if i.param_domain is not None:
        _check_component(i, "params", i.param_domain, ())


# --------------------------------------------------------------------------
# Formula translation.

def coord_vars(v: Var, dim: int) -> tuple[Var, ...]:
    """The coordinate variables a source variable expands to.

    One-dimensional translations keep the variable; otherwise coordinates
    get an unambiguous positional suffix.
    """
    if dim == 1:
        return (v,)
    return tuple(Var(f"{var_name(v)}_{j + 1}") for j in range(dim))


def translate(i: Interpretation, phi: Formula) -> Formula:
    """Carry a source formula to the target signature.

    Quantifiers relativize to the domain formula; free variables expand to
    coordinate blocks but stay unguarded.  A closed source formula maps to
    a target formula whose free variables are exactly the parameters.
    """
    phi = desugar(phi)
    if i.dim > 1:
        coords = {c for v in _all_formula_vars(phi)
                  for c in coord_vars(v, i.dim)}
        clash = coords & set(i.params)
        if clash:
            raise InterpretationError(
                f"{i.name}: parameter(s) {sorted(var_name(v) for v in clash)} "
                f"collide with generated coordinates")
    tgt = i.target.sole_sort()
    memo: dict[int, Formula] = {}

    def subst_comp(formula: Formula, blocks, actuals) -> Formula:
        mapping: dict[Var, Var] = {}
        for block, coordtuple in zip(blocks, actuals):
            mapping.update(zip(block, coordtuple))
        return substitute(formula, mapping)

    def go(node: Formula) -> Formula:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Atom):
            comp = i.preds[node.pred.name]
            out = subst_comp(comp.formula, comp.blocks,
                             [coord_vars(v, i.dim) for v in node.args])
        elif isinstance(node, Eq):
            comp = i.eqs[node.sort.name]
            out = subst_comp(comp.formula, (comp.left, comp.right),
                             (coord_vars(node.left, i.dim),
                              coord_vars(node.right, i.dim)))
        elif isinstance(node, And):
            out = and_(go(node.left), go(node.right))
        elif isinstance(node, Not):
            out = not_(go(node.body))
        elif isinstance(node, Forall):
            comp = i.domains[node.sort.name]
            cs = coord_vars(node.var, i.dim)
            guard = subst_comp(comp.formula, (comp.block,), (cs,))
            body = not_(and_(guard, not_(go(node.body))))
            for c in reversed(cs):
                body = forall(c, tgt, body)
            out = body
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[id(node)] = out
        return out

    return go(phi)


def _all_formula_vars(phi: Formula):
    from .syntax import all_vars
    return all_vars(phi)


# --------------------------------------------------------------------------
# Composition: apply J, then read the result through I.

def compose(i: Interpretation, j: Interpretation,
            name: Optional[str] = None) -> Interpretation:
    """The interpretation translating as translate(i, translate(j, .)).

    j reads its source inside j.target; i reads j.target inside i.target;
    the composite reads j.source inside i.target at dimension i.dim * j.dim.
    Composite domain formulas conjoin the translated j-domain with the
    i-domain of every coordinate block.
    """
    mid = j.target
    if (tuple(s.name for s in mid.signature.sorts)
            != tuple(s.name for s in i.source.signature.sorts)
            or {p.name for p in mid.signature.predicates}
            - {p.name for p in i.source.signature.predicates}):
        raise InterpretationError(
            f"cannot compose {i.name} after {j.name}: middle signatures "
            f"disagree ({mid.name} vs {i.source.name})")
    mid_sort = mid.sole_sort()
    dim = i.dim * j.dim
    i_dom = i.domains[mid_sort.name]

    def expand(block: tuple[Var, ...]) -> tuple[Var, ...]:
        return tuple(c for v in block for c in coord_vars(v, i.dim))

    def block_guard(block: tuple[Var, ...]) -> list[Formula]:
        return [substitute(i_dom.formula,
                           dict(zip(i_dom.block, coord_vars(v, i.dim))))
                for v in block]

    new_params = list(i.params)
    for p in j.params:
        for c in coord_vars(p, i.dim):
            if c in new_params:
                raise InterpretationError(
                    f"parameter collision composing {i.name} after {j.name}: "
                    f"{var_name(c)}")
            new_params.append(c)
    pd_parts: list[Formula] = []
    if i.param_domain is not None:
        pd_parts.append(i.param_domain)
    if j.param_domain is not None:
        pd_parts.append(translate(i, j.param_domain))
    for p in j.params:
        pd_parts.extend(block_guard((p,)))

    domains = {}
    for sname, c in j.domains.items():
        domains[sname] = DomainComp(
            expand(c.block),
            conj(block_guard(c.block) + [translate(i, c.formula)]))
    preds = {}
    for pname, c in j.preds.items():
        preds[pname] = PredComp(tuple(expand(b) for b in c.blocks),
                                translate(i, c.formula))
    eqs = {}
    for sname, c in j.eqs.items():
        eqs[sname] = EqComp(expand(c.left), expand(c.right),
                            translate(i, c.formula))

    return interpretation(
        name or f"{j.name}-then-{i.name}",
        j.source, i.target, dim, domains, preds, eqs,
        tuple(new_params),
        conj(pd_parts) if pd_parts else None)


def identity_interp(t: Theory) -> Interpretation:
    """The one-dimensional identity reading of a one-sorted theory."""
    s = t.sole_sort()
    v = Var("v")
    l, r = Var("v", 1), Var("v", 2)
    domains = {s.name: DomainComp((v,), truth(v, s))}
    eqs = {s.name: EqComp((l,), (r,), eq(s, l, r))}
    preds = {}
    for p in t.signature.predicates:
        args = tuple(Var("v", k + 1) for k in range(p.arity))
        preds[p.name] = PredComp(tuple((a,) for a in args), atom(p, args))
    return interpretation(f"id-{t.name}", t, t, 1, domains, preds, eqs)


def pad_dim(i: Interpretation, dim: int,
                name: Optional[str] = None) -> Interpretation:
    """Pad an interpretation to a larger dimension.

    Extra coordinates are constrained to repeat the first coordinate of
    their block and are never consulted by the component formulas.
    """
    if dim < i.dim:
        raise InterpretationError(
            f"{i.name}: cannot shrink dimension {i.dim} to {dim}")
    if dim == i.dim:
        return i
    tgt = i.target.sole_sort()
    extra = dim - i.dim

    def pad_block(block: tuple[Var, ...], tag: int) -> tuple[Var, ...]:
        pads = tuple(Var(f"pad{tag}_{k + 1}") for k in range(extra))
        return block + pads

    def pad_guard(padded: tuple[Var, ...]) -> list[Formula]:
        return [eq(tgt, padded[i.dim + k], padded[0]) for k in range(extra)]

    domains = {}
    for sname, c in i.domains.items():
        block = pad_block(c.block, 0)
        domains[sname] = DomainComp(
            block, conj([c.formula] + pad_guard(block)))
    preds = {}
    for pname, c in i.preds.items():
        preds[pname] = PredComp(
            tuple(pad_block(b, k) for k, b in enumerate(c.blocks)), c.formula)
    eqs = {}
    for sname, c in i.eqs.items():
        eqs[sname] = EqComp(pad_block(c.left, 0), pad_block(c.right, 1),
                            c.formula)
    return interpretation(
        name or f"{i.name}-dim{dim}", i.source, i.target, dim,
        domains, preds, eqs, i.params, i.param_domain)
