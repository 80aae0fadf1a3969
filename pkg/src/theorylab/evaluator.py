"""Brute-force Tarskian evaluation over finite structures.

Formulas are compiled once into a flat node program; evaluation runs either
on the compiled extension (theorylab._kernel, Cython) or on the pure-Python
twin (theorylab._pyeval).  Both implement identical semantics; the backend
is chosen at import and can be forced with THEORYLAB_BACKEND=py|native or
:func:`set_backend`.

Quantifier blocks whose matrix starts with a guard formula over the block
variables (the shape emitted by relativization and by interpretation
translation) are evaluated through cached guard sets: the set of tuples
satisfying the guard is computed once per structure (by table scan when the
guard is a single atom) and reused, which is what makes the class-theory
searches tractable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import ModelError, ScopeError, TheoryLabError
from . import syntax as sy
from .syntax import And, Atom, Eq, Forall, Formula, Not, Var
from .structures import FiniteStructure

__all__ = [
    "Program", "ChainSpec", "compile_formula", "eval_formula",
    "active_backend", "set_backend", "available_backends", "clear_caches",
]

K_ATOM, K_EQ, K_AND, K_NOT, K_FORALL = 0, 1, 2, 3, 4

MAX_CHAIN = 6
MAX_EXTRAS = 2


@dataclass(frozen=True)
class ChainSpec:
    slots: tuple[int, ...]
    sort_ids: tuple[int, ...]
    guard: int
    rest: int
    extras: tuple[int, ...]
    atom_scan: Optional[tuple[int, tuple[int, ...]]]


@dataclass
class Program:
    kind: list[int]
    a: list[int]
    b: list[int]
    c: list[int]
    chain_of: list[int]
    args: list[int]
    pred_names: list[str]
    pred_arities: list[int]
    sort_names: list[str]
    chains: list[ChainSpec]
    root: int
    n_slots: int
    slot_of: dict[Var, int]
    forall_free: list[Optional[tuple[int, ...]]] = field(default_factory=list)
    native: object = field(default=None, repr=False)


def compile_formula(phi: Formula) -> Program:
    if phi.surface:
        raise TheoryLabError("cannot compile surface formula; desugar first")
    kind: list[int] = []
    a: list[int] = []
    b: list[int] = []
    c: list[int] = []
    args: list[int] = []
    nodes: list[Formula] = []
    slot_of: dict[Var, int] = {}
    pred_ids: dict[str, int] = {}
    pred_names: list[str] = []
    pred_arities: list[int] = []
    sort_ids: dict[str, int] = {}
    sort_names: list[str] = []
    index: dict[int, int] = {}

    def slot(v: Var) -> int:
        s = slot_of.get(v)
        if s is None:
            s = len(slot_of)
            slot_of[v] = s
        return s

    def pred_id(name: str, arity: int) -> int:
        p = pred_ids.get(name)
        if p is None:
            p = len(pred_names)
            pred_ids[name] = p
            pred_names.append(name)
            pred_arities.append(arity)
        return p

    def sort_id(name: str) -> int:
        s = sort_ids.get(name)
        if s is None:
            s = len(sort_names)
            sort_ids[name] = s
            sort_names.append(name)
        return s

    # Iterative postorder; shared subterms compile once.
    stack: list[tuple[Formula, bool]] = [(phi, False)]
    while stack:
        f, expanded = stack.pop()
        if id(f) in index and not expanded:
            continue
        if not expanded:
            stack.append((f, True))
            if isinstance(f, And):
                stack.append((f.right, False))
                stack.append((f.left, False))
            elif isinstance(f, Not):
                stack.append((f.body, False))
            elif isinstance(f, Forall):
                stack.append((f.body, False))
            continue
        if id(f) in index:
            continue
        i = len(kind)
        if isinstance(f, Atom):
            kind.append(K_ATOM)
            a.append(pred_id(f.pred.name, f.pred.arity))
            b.append(len(args))
            c.append(f.pred.arity)
            args.extend(slot(v) for v in f.args)
        elif isinstance(f, Eq):
            kind.append(K_EQ)
            a.append(slot(f.left))
            b.append(slot(f.right))
            c.append(-1)
        elif isinstance(f, And):
            kind.append(K_AND)
            a.append(index[id(f.left)])
            b.append(index[id(f.right)])
            c.append(-1)
        elif isinstance(f, Not):
            kind.append(K_NOT)
            a.append(index[id(f.body)])
            b.append(-1)
            c.append(-1)
        elif isinstance(f, Forall):
            kind.append(K_FORALL)
            a.append(slot(f.var))
            b.append(index[id(f.body)])
            c.append(sort_id(f.sort.name))
        else:  # pragma: no cover
            raise TypeError(type(f))
        nodes.append(f)
        index[id(f)] = i

    chains: list[ChainSpec] = []
    chain_of = [-1] * len(kind)
    forall_free: list[Optional[tuple[int, ...]]] = [None] * len(kind)
    for i, k in enumerate(kind):
        if k != K_FORALL:
            continue
        forall_free[i] = tuple(sorted(slot_of[v] for v in nodes[i].free))
        spec = _detect_chain(nodes[i], index, slot_of, sort_ids, pred_ids)
        if spec is not None:
            chain_of[i] = len(chains)
            chains.append(spec)

    return Program(kind, a, b, c, chain_of, args, pred_names, pred_arities,
                   sort_names, chains, index[id(phi)], len(slot_of), slot_of,
                   forall_free)


def _detect_chain(head: Forall, index, slot_of, sort_ids, pred_ids
                  ) -> Optional[ChainSpec]:
    block: list[Var] = []
    sorts: list[str] = []
    f: Formula = head
    while isinstance(f, Forall) and len(block) < MAX_CHAIN:
        if f.var in block:
            break  # shadowing inside one block: keep it simple, no guard
        block.append(f.var)
        sorts.append(f.sort.name)
        f = f.body
    if not (isinstance(f, Not) and isinstance(f.body, And)):
        return None
    guard, rest = f.body.left, f.body.right
    block_set = set(block)
    extras = sorted(
        (v for v in guard.free if v not in block_set),
        key=lambda v: (v.name, v.index))
    if len(extras) > MAX_EXTRAS:
        return None
    if not (set(guard.free) & block_set):
        return None  # guard constrains nothing in the block
    atom_scan = None
    if isinstance(guard, Atom) and block_set <= set(guard.args):
        atom_scan = (pred_ids[guard.pred.name],
                     tuple(slot_of[v] for v in guard.args))
    return ChainSpec(
        slots=tuple(slot_of[v] for v in block),
        sort_ids=tuple(sort_ids[s] for s in sorts),
        guard=index[id(guard)],
        rest=index[id(rest)],
        extras=tuple(slot_of[v] for v in extras),
        atom_scan=atom_scan,
    )


# --------------------------------------------------------------------------
# Backend selection.

_backend_name: Optional[str] = None


def available_backends() -> list[str]:
    out = ["py"]
    try:
        from . import _kernel  # noqa: F401
        out.insert(0, "native")
    except ImportError:
        pass
    return out


def active_backend() -> str:
    global _backend_name
    if _backend_name is None:
        wanted = os.environ.get("THEORYLAB_BACKEND")
        avail = available_backends()
        if wanted:
            if wanted not in ("py", "native"):
                raise TheoryLabError(
                    f"THEORYLAB_BACKEND must be py or native, got {wanted}")
            if wanted not in avail:
                raise TheoryLabError("native backend requested but not built")
            _backend_name = wanted
        else:
            _backend_name = avail[0]
    return _backend_name


def set_backend(name: Optional[str]) -> None:
    """Force a backend ('py' / 'native'), or None to re-detect."""
    global _backend_name
    if name is not None and name not in available_backends():
        raise TheoryLabError(f"backend {name} not available")
    _backend_name = name
    clear_caches()


# --------------------------------------------------------------------------
# Caches: compiled programs by formula identity, contexts by structure
# identity.  Strong references keep id() keys stable.

_program_cache: dict[int, tuple[Formula, Program]] = {}
_context_cache: dict[tuple[int, str], tuple[FiniteStructure, object]] = {}


def clear_caches() -> None:
    _program_cache.clear()
    _context_cache.clear()


def get_program(phi: Formula) -> Program:
    hit = _program_cache.get(id(phi))
    if hit is not None:
        return hit[1]
    prog = compile_formula(phi)
    _program_cache[id(phi)] = (phi, prog)
    return prog


def _get_engine(backend: str):
    if backend == "native":
        from . import _kernel
        return _kernel
    from . import _pyeval
    return _pyeval


def get_context(structure: FiniteStructure, backend: Optional[str] = None):
    backend = backend or active_backend()
    key = (id(structure), backend)
    hit = _context_cache.get(key)
    if hit is not None:
        return hit[1]
    ctx = _get_engine(backend).Context(structure)
    _context_cache[key] = (structure, ctx)
    return ctx


def eval_formula(structure: FiniteStructure, phi: Formula,
                 assignment: Optional[Mapping[Var, str]] = None,
                 backend: Optional[str] = None) -> bool:
    """Evaluate a core formula; free variables come from `assignment`."""
    backend = backend or active_backend()
    prog = get_program(phi)
    ctx = get_context(structure, backend)
    env = [-1] * max(prog.n_slots, 1)
    assignment = assignment or {}
    for v in phi.free:
        if v not in assignment:
            raise ScopeError(f"no value for free variable {v}")
        name = assignment[v]
        idx = ctx.atom_index.get(name)
        if idx is None:
            raise ModelError(f"assignment uses foreign atom {name}")
        env[prog.slot_of[v]] = idx
    return _get_engine(backend).run(prog, ctx, env)
