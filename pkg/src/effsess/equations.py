"""Equational rewriting over effect-calculus terms.

The four equations form an equational theory: let-reassociation, left and
right unit laws, and commutation of a pure binding past an adjacent one.
Rewrites target an explicit preorder position so they are deterministic and
testable; side conditions are enforced, not assumed.
"""

from __future__ import annotations

from .effects import IDENTITY, format_effect
from .infer import TypeEnv, infer
from .terms import Let, OpApp, Term, ValueType, Var, all_names, free_vars, substitute

# Rule names: forward orientations of Fig.-style equations plus the
# inverse orientations that have a canonical result.  The reverse of
# unitL would have to invent occurrences, so it is not provided.
RULES = ("assoc", "assoc_inv", "unitL", "unitR", "unitR_inv", "comm")


class RewriteError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Let):
        return (t.bound, t.body)
    if isinstance(t, OpApp):
        return (t.arg,)
    return ()


def _rebuild(t: Term, children: tuple[Term, ...]) -> Term:
    if isinstance(t, Let):
        return Let(t.name, children[0], children[1])
    if isinstance(t, OpApp):
        return OpApp(t.op, children[0])
    return t


def preorder_size(t: Term) -> int:
    return 1 + sum(preorder_size(c) for c in _children(t))


def subterm_at(t: Term, path: int) -> Term:
    if path == 0:
        return t
    offset = 1
    for child in _children(t):
        size = preorder_size(child)
        if path < offset + size:
            return subterm_at(child, path - offset)
        offset += size
    raise RewriteError("path", f"position {path} does not exist")


def _replace_at(t: Term, path: int, new: Term) -> Term:
    if path == 0:
        return new
    offset = 1
    rebuilt = []
    replaced = False
    for child in _children(t):
        size = preorder_size(child)
        if not replaced and offset <= path < offset + size:
            rebuilt.append(_replace_at(child, path - offset, new))
            replaced = True
        else:
            rebuilt.append(child)
        offset += size
    if not replaced:
        raise RewriteError("path", f"position {path} does not exist")
    return _rebuild(t, tuple(rebuilt))


def env_at(t: Term, path: int, env: TypeEnv, store_type: ValueType) -> TypeEnv:
    """The typing environment in scope at a preorder position."""
    if path == 0:
        return env
    if isinstance(t, Let):
        bound_size = preorder_size(t.bound)
        if path <= bound_size:
            return env_at(t.bound, path - 1, env, store_type)
        inner = dict(env)
        inner[t.name] = infer(env, store_type, t.bound)[0]
        return env_at(t.body, path - 1 - bound_size, inner, store_type)
    if isinstance(t, OpApp):
        return env_at(t.arg, path - 1, env, store_type)
    raise RewriteError("path", f"position {path} does not exist")


def apply_equation(t: Term, rule: str, path: int, env: TypeEnv, store_type: ValueType) -> Term:
    """Rewrite the subterm at ``path`` with the named equation."""
    if rule not in RULES:
        raise RewriteError("rule", f"unknown rule {rule!r}")
    sub = subterm_at(t, path)
    local_env = env_at(t, path, env, store_type)
    rewritten = _REWRITES[rule](sub, local_env, store_type)
    return _replace_at(t, path, rewritten)


def _rw_assoc(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # let y = (let x = M in N) in P  ==>  let x = M in (let y = N in P)
    if not (isinstance(sub, Let) and isinstance(sub.bound, Let)):
        raise RewriteError("shape", "assoc expects let y = (let x = M in N) in P")
    y, inner, p = sub.name, sub.bound, sub.body
    x, m, n = inner.name, inner.bound, inner.body
    if x in free_vars(p):
        raise RewriteError("side-condition", f"assoc requires {x!r} not free in the outer body")
    return Let(x, m, Let(y, n, p))


def _rw_assoc_inv(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # let x = M in (let y = N in P)  ==>  let y = (let x = M in N) in P
    if not (isinstance(sub, Let) and isinstance(sub.body, Let)):
        raise RewriteError("shape", "assoc_inv expects let x = M in (let y = N in P)")
    x, m, inner = sub.name, sub.bound, sub.body
    y, n, p = inner.name, inner.bound, inner.body
    if x in free_vars(p):
        raise RewriteError("side-condition", f"assoc_inv requires {x!r} not free in the final body")
    return Let(y, Let(x, m, n), p)


def _rw_unit_l(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # let y = x in M  ==>  M[x/y]
    if not (isinstance(sub, Let) and isinstance(sub.bound, Var)):
        raise RewriteError("shape", "unitL expects let y = x in M with a variable binding")
    x = sub.bound.name
    if x not in env:
        raise RewriteError("side-condition", f"unitL requires {x!r} to be bound in the context")
    return substitute(sub.body, sub.name, Var(x))


def _rw_unit_r(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # let x = M in x  ==>  M
    if not (isinstance(sub, Let) and isinstance(sub.body, Var) and sub.body.name == sub.name):
        raise RewriteError("shape", "unitR expects let x = M in x")
    return sub.bound


def _rw_unit_r_inv(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # M  ==>  let x = M in x, with x fresh
    x = "x"
    taken = all_names(sub)
    k = 0
    while x in taken:
        k += 1
        x = f"x{k}"
    return Let(x, sub, Var(x))


def _rw_comm(sub: Term, env: TypeEnv, store_type: ValueType) -> Term:
    # let x = M in (let y = N in P)  ==>  let y = N in (let x = M in P)
    if not (isinstance(sub, Let) and isinstance(sub.body, Let)):
        raise RewriteError("shape", "comm expects let x = M in (let y = N in P)")
    x, m, inner = sub.name, sub.bound, sub.body
    y, n, p = inner.name, inner.bound, inner.body
    if x == y:
        raise RewriteError("side-condition", "comm requires distinct binders")
    if x in free_vars(n):
        raise RewriteError("side-condition", f"comm requires {x!r} not free in the second binding")
    if y in free_vars(m):
        raise RewriteError("side-condition", f"comm requires {y!r} not free in the first binding")
    _, m_effect = infer(env, store_type, m)
    if m_effect != IDENTITY:
        raise RewriteError(
            "side-condition",
            f"comm requires a pure first binding, but it has effect {format_effect(m_effect)}",
        )
    return Let(y, n, Let(x, m, p))


_REWRITES = {
    "assoc": _rw_assoc,
    "assoc_inv": _rw_assoc_inv,
    "unitL": _rw_unit_l,
    "unitR": _rw_unit_r,
    "unitR_inv": _rw_unit_r_inv,
    "comm": _rw_comm,
}
