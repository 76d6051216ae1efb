"""Translations between the effect calculus and the session pi-calculus.

The effect/session correspondence sends an annotation to a chain of
single-label selects ending in `end`; the term translation threads one
effect channel through the computation (received on `ei`, handed on via
`eo`) and emits the result on a dedicated channel.  The store itself is a
recursive branching agent; a shared-channel variant initiates one short
session per effect operation, which serializes concurrent access at the
cost of forgetting effect order in the types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import process as P
from . import sessions as S
from .effects import EffectAnnotation, Get, IDENTITY, Put, STATE_ALGEBRA
from .infer import EffectTypeError, TypeEnv, infer
from .terms import Const, Let, OpApp, Program, Term, ValueType, Var, all_names, free_vars


class EmbeddingError(Exception):
    pass


class NotInImage(Exception):
    pass


RESERVED_RESULT = "r"
RESERVED_EFFECT = "eff"


# ------------------------------------------------- effect/session bijection

def effect_to_session(f: EffectAnnotation) -> S.SessionType:
    if not f:
        return S.END
    head, rest = f[0], f[1:]
    inner = effect_to_session(rest)
    if isinstance(head, Get):
        return S.Select((("get", S.Recv(head.param, inner)),))
    return S.Select((("put", S.Send(head.param, inner)),))


def session_to_effect(s: S.SessionType) -> EffectAnnotation:
    """The unique preimage under the effect interpretation."""
    if isinstance(s, S.End):
        return IDENTITY
    if isinstance(s, S.Select) and len(s.choices) == 1:
        label, cont = s.choices[0]
        if label == "get" and isinstance(cont, S.Recv) and S.is_value_payload(cont.payload):
            return (Get(cont.payload),) + session_to_effect(cont.cont)
        if label == "put" and isinstance(cont, S.Send) and S.is_value_payload(cont.payload):
            return (Put(cont.payload),) + session_to_effect(cont.cont)
    raise NotInImage(f"{S.format_session_type(s)} is not the image of an effect annotation")


def _splice_tail(s: S.SessionType, tail: S.SessionType) -> S.SessionType:
    """Replace the terminal end of a select chain."""
    if isinstance(s, S.End):
        return tail
    if isinstance(s, S.Select) and len(s.choices) == 1:
        label, cont = s.choices[0]
        if isinstance(cont, S.Recv):
            return S.Select(((label, S.Recv(cont.payload, _splice_tail(cont.cont, tail))),))
        if isinstance(cont, S.Send):
            return S.Select(((label, S.Send(cont.payload, _splice_tail(cont.cont, tail))),))
    raise EmbeddingError("can only splice onto an effect-image session type")


# ----------------------------------------------------------- store agents

def store_session_type(store_type: ValueType) -> S.SessionType:
    return S.Mu(
        "a",
        S.Branch(
            (
                ("get", S.Send(store_type, S.TVar("a"))),
                ("put", S.Recv(store_type, S.TVar("a"))),
                ("stop", S.END),
            )
        ),
    )


def store_agent(
    init: P.Value, c: P.Endpoint, store_type: ValueType, def_name: str = "Store"
) -> P.Process:
    """The recursive variable agent, instantiated at (init, c)."""
    s = P.Endpoint("s")
    body = P.Branch(
        s,
        (
            ("get", P.SendVal(s, P.VarRef("x"), P.Call(def_name, (P.VarRef("x"),), (s,)))),
            ("put", P.RecvVal(s, "y", P.Call(def_name, (P.VarRef("y"),), (s,)))),
            ("stop", P.NIL),
        ),
    )
    return P.Def(
        def_name,
        (("x", store_type),),
        (("s", store_session_type(store_type)),),
        body,
        P.Call(def_name, (init,), (c,)),
    )


def get_op(c: P.Endpoint, binder: str, cont: P.Process) -> P.Process:
    """get(c)(x).P: select get on the opposite endpoint, then receive."""
    d = c.flip()
    return P.Select(d, "get", P.RecvVal(d, binder, cont))


def put_op(c: P.Endpoint, value: P.Value, cont: P.Process) -> P.Process:
    """put(c)<V>.P: select put on the opposite endpoint, then send."""
    d = c.flip()
    return P.Select(d, "put", P.SendVal(d, value, cont))


# -------------------------------------------------------- shared channels

def shared_store_type(store_type: ValueType) -> S.SessionType:
    """Accept-side type of one store session; every session serves one
    effect operation, so ordering information is gone."""
    return S.Branch(
        (
            ("get", S.Send(store_type, S.END)),
            ("put", S.Recv(store_type, S.END)),
            ("stop", S.END),
        )
    )


def shared_store_agent(
    init: P.Value, k: str, store_type: ValueType, def_name: str = "Store"
) -> P.Process:
    """The store behind a shared channel: accept a session, serve one
    request atomically, recurse.  The shared name is ambient in the body
    since definition signatures carry only value and session types."""
    c = P.Endpoint("c")
    body = P.Accept(
        k,
        "c",
        P.Branch(
            c,
            (
                ("get", P.SendVal(c, P.VarRef("x"), P.Call(def_name, (P.VarRef("x"),), ()))),
                ("put", P.RecvVal(c, "y", P.Call(def_name, (P.VarRef("y"),), ()))),
                ("stop", P.NIL),
            ),
        ),
    )
    return P.Def(def_name, (("x", store_type),), (), body, P.Call(def_name, (init,), ()))


def shared_get(k: str, binder: str, cont: P.Process) -> P.Process:
    c = P.fresh_name("c", P.all_process_names(cont) | {binder, k})
    ep = P.Endpoint(c)
    return P.Request(k, c, P.Select(ep, "get", P.RecvVal(ep, binder, cont)))


def shared_put(k: str, value: P.Value, cont: P.Process) -> P.Process:
    c = P.fresh_name("c", P.all_process_names(cont) | {k} | P.value_var_names(value))
    ep = P.Endpoint(c)
    return P.Request(k, c, P.Select(ep, "put", P.SendVal(ep, value, cont)))


# ------------------------------------------------------------ name supply

@dataclass
class NameSupply:
    """Deterministic fresh names following the proof conventions: the bare
    base first (q, ea), then numbered (q1, q2, ...)."""

    taken: set[str] = field(default_factory=set)

    def fresh(self, base: str) -> str:
        name = base
        k = 0
        while name in self.taken:
            k += 1
            name = f"{base}{k}"
        self.taken.add(name)
        return name


def _supply_for(t: Term, *extra: str) -> NameSupply:
    return NameSupply(set(all_names(t)) | {RESERVED_RESULT, RESERVED_EFFECT} | set(extra))


_PURE_CONST_VALUES = {"zero": P.NatLit(0), "unit": P.UNIT_VALUE}
_PURE_OP_VALUES = {"suc": P.SucOf}


def _interp_type(tau: ValueType) -> ValueType:
    # Value types are shared between the calculi; the mapping is identity.
    return tau


# ----------------------------------------------------------- pure fragment

def embed_pure(
    t: Term,
    r: P.Endpoint,
    env: TypeEnv | None = None,
    store_type: ValueType = ValueType.NAT,
    supply: NameSupply | None = None,
) -> P.Process:
    """CBV embedding of a pure term: the result travels over ``r``.

    Restriction annotations are attached when a typing environment is
    supplied; otherwise the output is bare.
    """
    supply = supply or _supply_for(t, r.name)

    def annot(term: Term, local_env: TypeEnv | None) -> S.SessionType | None:
        if local_env is None:
            return None
        tau, _ = infer(local_env, store_type, term)
        return S.Send(_interp_type(tau), S.END)

    def go(term: Term, res: P.Endpoint, local_env: TypeEnv | None) -> P.Process:
        if isinstance(term, Var):
            return P.SendVal(res, P.VarRef(term.name), P.NIL)
        if isinstance(term, Const):
            if term.const not in _PURE_CONST_VALUES:
                raise EmbeddingError(f"constant {term.const} is effectful; no pure embedding")
            return P.SendVal(res, _PURE_CONST_VALUES[term.const], P.NIL)
        if isinstance(term, OpApp):
            if term.op not in _PURE_OP_VALUES:
                raise EmbeddingError(f"operation {term.op} is effectful; no pure embedding")
            q = supply.fresh("q")
            x = supply.fresh("x")
            qe = P.Endpoint(q)
            payload = _PURE_OP_VALUES[term.op](P.VarRef(x))
            return P.New(
                q,
                annot(term.arg, local_env),
                P.par(go(term.arg, qe, local_env), P.RecvVal(qe.flip(), x, P.SendVal(res, payload, P.NIL))),
            )
        if isinstance(term, Let):
            q = supply.fresh("q")
            qe = P.Endpoint(q)
            env2 = None
            if local_env is not None:
                env2 = dict(local_env)
                env2[term.name] = infer(local_env, store_type, term.bound)[0]
            return P.New(
                q,
                annot(term.bound, local_env),
                P.par(
                    go(term.bound, qe, local_env),
                    P.RecvVal(qe.flip(), term.name, go(term.body, res, env2)),
                ),
            )
        raise TypeError(f"not a term: {term!r}")

    return go(t, r, env)


def _graft_after_result(p: P.Process, r: P.Endpoint, cont: P.Process) -> P.Process:
    """Append ``cont`` after the unique send on the result endpoint."""

    count = 0

    def go(q: P.Process) -> P.Process:
        nonlocal count
        if isinstance(q, P.SendVal) and q.chan == r:
            if not isinstance(q.cont, P.Nil):
                raise EmbeddingError("result send already has a continuation")
            count += 1
            return P.SendVal(q.chan, q.value, cont)
        if isinstance(q, (P.RecvVal, P.RecvChan)):
            return type(q)(q.chan, q.binder, go(q.cont))
        if isinstance(q, P.SendVal):
            return P.SendVal(q.chan, q.value, go(q.cont))
        if isinstance(q, P.SendChan):
            return P.SendChan(q.chan, q.sent, go(q.cont))
        if isinstance(q, P.New):
            return P.New(q.name, q.annotation, go(q.body))
        if isinstance(q, P.Par):
            return P.Par(go(q.left), go(q.right))
        if isinstance(q, P.Select):
            return P.Select(q.chan, q.label, go(q.cont))
        if isinstance(q, P.Branch):
            return P.Branch(q.chan, tuple((l, go(c)) for l, c in q.branches))
        return q

    out = go(p)
    if count != 1:
        raise EmbeddingError(f"expected exactly one result send on {r}, found {count}")
    return out


# ----------------------------------------------------- intermediate layer

def embed_intermediate(
    t: Term,
    ei: P.Endpoint,
    eo: P.Endpoint,
    r: P.Endpoint,
    env: TypeEnv | None = None,
    store_type: ValueType = ValueType.NAT,
    supply: NameSupply | None = None,
    tail: EffectAnnotation = IDENTITY,
) -> P.Process:
    """Effect-threading embedding: receive the effect channel on ``ei``,
    perform the term's effects on it, hand it on via the opposite endpoint
    of ``eo``.  ``tail`` is the effect still to come after this term, used
    only to annotate the intermediate restrictions.
    """
    env = {} if env is None else env
    supply = supply or _supply_for(t, ei.name, eo.name, r.name)
    infer(env, store_type, t)

    def chan_annot(effect: EffectAnnotation) -> S.SessionType:
        return S.Recv(effect_to_session(effect), S.END)

    def go(term: Term, ei: P.Endpoint, eo: P.Endpoint, res: P.Endpoint, env: TypeEnv, tail: EffectAnnotation) -> P.Process:
        eo_bar = eo.flip()
        if isinstance(term, Var):
            c = supply.fresh("c")
            return P.RecvChan(
                ei, c, P.SendVal(res, P.VarRef(term.name), P.SendChan(eo_bar, P.Endpoint(c), P.NIL))
            )
        if isinstance(term, Const):
            if term.const in _PURE_CONST_VALUES:
                c = supply.fresh("c")
                inner = P.SendVal(res, _PURE_CONST_VALUES[term.const], P.SendChan(eo_bar, P.Endpoint(c), P.NIL))
                return P.RecvChan(ei, c, inner)
            if term.const == "get":
                c = supply.fresh("c")
                x = supply.fresh("x")
                ce = P.Endpoint(c)
                return P.RecvChan(
                    ei,
                    c,
                    P.Select(
                        ce,
                        "get",
                        P.RecvVal(ce, x, P.SendVal(res, P.VarRef(x), P.SendChan(eo_bar, ce, P.NIL))),
                    ),
                )
            raise EmbeddingError(f"effectful constant {term.const} has no embedding clause")
        if isinstance(term, OpApp):
            if term.op in _PURE_OP_VALUES:
                c = supply.fresh("c")
                pure = embed_pure(term, res, env, store_type, supply)
                return P.RecvChan(ei, c, _graft_after_result(pure, res, P.SendChan(eo_bar, P.Endpoint(c), P.NIL)))
            if term.op == "put":
                q = supply.fresh("q")
                c = supply.fresh("c")
                x = supply.fresh("x")
                qe, ce = P.Endpoint(q), P.Endpoint(c)
                doput = P.RecvChan(
                    ei,
                    c,
                    P.RecvVal(
                        qe.flip(),
                        x,
                        P.Select(
                            ce,
                            "put",
                            P.SendVal(
                                ce,
                                P.VarRef(x),
                                P.SendVal(res, P.UNIT_VALUE, P.SendChan(eo_bar, ce, P.NIL)),
                            ),
                        ),
                    ),
                )
                pure = embed_pure(term.arg, qe, env, store_type, supply)
                return P.New(q, S.Send(_interp_type(store_type), S.END), P.par(pure, doput))
            raise EmbeddingError(f"effectful operation {term.op} has no embedding clause")
        if isinstance(term, Let):
            sigma, _ = infer(env, store_type, term.bound)
            env2 = dict(env)
            env2[term.name] = sigma
            _, g_eff = infer(env2, store_type, term.body)
            q = supply.fresh("q")
            ea = supply.fresh("ea")
            qe = P.Endpoint(q)
            left = go(term.bound, ei, P.Endpoint(ea), qe, env, STATE_ALGEBRA.combine(g_eff, tail))
            right = P.RecvVal(qe.flip(), term.name, go(term.body, P.Endpoint(ea), eo, res, env2, tail))
            return P.New(
                q,
                S.Send(_interp_type(sigma), S.END),
                P.New(ea, chan_annot(STATE_ALGEBRA.combine(g_eff, tail)), P.par(left, right)),
            )
        raise TypeError(f"not a term: {term!r}")

    return go(t, ei, eo, r, env, tail)


# -------------------------------------------------------------- top level

@dataclass(frozen=True)
class EmbeddingResult:
    process: P.Process
    delta: dict[P.Endpoint, S.SessionType]
    gamma: dict[str, ValueType]
    source_type: ValueType
    source_effect: EffectAnnotation


def embed_term_top(
    t: Term,
    env: TypeEnv | None = None,
    store_type: ValueType = ValueType.NAT,
    eff: P.Endpoint = P.Endpoint(RESERVED_EFFECT),
    r: P.Endpoint = P.Endpoint(RESERVED_RESULT),
    optimize: bool = False,
    send_stop: bool = False,
) -> EmbeddingResult:
    """Wrap the intermediate embedding with the channel-feeding harness:
    the effect channel goes in over a fresh ei, and the leftover channel
    comes back over a fresh eo where it is dropped (or told to stop)."""
    env = {} if env is None else env
    tau, f_eff = infer(env, store_type, t)
    supply = NameSupply(set(all_names(t)) | set(env) | {eff.name, r.name})
    ei = supply.fresh("ei")
    eo = supply.fresh("eo")
    build = optimize_commuting if optimize else embed_intermediate
    body = build(t, P.Endpoint(ei), P.Endpoint(eo), r, env, store_type, supply, IDENTITY)

    eff_session = effect_to_session(f_eff)
    leftover: S.SessionType = S.END
    if send_stop:
        leftover = S.Select((("stop", S.END),))
        eff_session = _splice_tail(eff_session, leftover)
    c = supply.fresh("c")
    tail_proc: P.Process = P.NIL if not send_stop else P.Select(P.Endpoint(c), "stop", P.NIL)
    harness = P.SendChan(P.Endpoint(ei, True), eff, P.RecvChan(P.Endpoint(eo), c, tail_proc))
    process = P.New(
        ei,
        S.Recv(eff_session, S.END),
        P.New(eo, S.Recv(leftover, S.END), P.par(body, harness)),
    )
    delta = {
        r: S.Send(_interp_type(tau), S.END),
        eff: eff_session,
    }
    return EmbeddingResult(process, delta, dict(env), tau, f_eff)


def embed_top(
    prog: Program,
    eff: P.Endpoint = P.Endpoint(RESERVED_EFFECT),
    r: P.Endpoint = P.Endpoint(RESERVED_RESULT),
    optimize: bool = False,
    send_stop: bool = False,
) -> EmbeddingResult:
    return embed_term_top(
        prog.root, {}, prog.store_type, eff, r, optimize=optimize, send_stop=send_stop
    )


def initial_store_value(prog: Program) -> P.Value:
    if prog.store_type is ValueType.NAT:
        return P.NatLit(prog.init or 0)
    return P.UNIT_VALUE


def compose_with_store(result: EmbeddingResult, init: P.Value, store_type: ValueType,
                       eff: P.Endpoint = P.Endpoint(RESERVED_EFFECT)) -> P.Process:
    """The runnable system: the translated program in parallel with the
    store agent holding ``init``, with the effect channel restricted."""
    agent = store_agent(init, eff.flip(), store_type)
    return P.New(eff.name, None, P.par(agent, result.process))


# ----------------------------------------------------- concurrent variants

def naive_parallel_encode(
    m: Term,
    n: Term,
    eff: P.Endpoint = P.Endpoint(RESERVED_EFFECT),
    r: P.Endpoint = P.Endpoint(RESERVED_RESULT),
    env: TypeEnv | None = None,
    store_type: ValueType = ValueType.NAT,
) -> P.Process:
    """The rejected parallel encoding: both encodings share the effect
    channel, so the session checker reports a linearity violation.  Shipped
    as a negative-test constructor only."""
    env = {} if env is None else env
    names = set(all_names(m)) | set(all_names(n)) | set(env) | {eff.name, r.name}
    supply = NameSupply(names)
    q1 = supply.fresh("q1")
    q2 = supply.fresh("q2")
    x = supply.fresh("x")
    y = supply.fresh("y")
    left = embed_term_top(m, env, store_type, eff, P.Endpoint(q1))
    right = embed_term_top(n, env, store_type, eff, P.Endpoint(q2))
    collect = P.RecvVal(
        P.Endpoint(q1, True),
        x,
        P.RecvVal(
            P.Endpoint(q2, True),
            y,
            P.SendVal(r, P.Pair(P.VarRef(x), P.VarRef(y)), P.NIL),
        ),
    )
    tau1 = S.Send(_interp_type(left.source_type), S.END)
    tau2 = S.Send(_interp_type(right.source_type), S.END)
    return P.New(q1, tau1, P.New(q2, tau2, P.par(left.process, right.process, collect)))


def optimize_commuting(
    t: Term,
    ei: P.Endpoint,
    eo: P.Endpoint,
    r: P.Endpoint,
    env: TypeEnv | None = None,
    store_type: ValueType = ValueType.NAT,
    supply: NameSupply | None = None,
    tail: EffectAnnotation = IDENTITY,
) -> P.Process:
    """Compile a commuting let pair to the parallel form: the pure binding
    runs as a sibling of the effectful one.  Anything else falls back to
    the standard embedding."""
    env = {} if env is None else env
    supply = supply or _supply_for(t, ei.name, eo.name, r.name)

    def match_commuting(term: Term):
        # let x = M in (let y = N in P) with M pure, or the mirror image
        # let y = N in (let x = M in P) with M pure.
        if not (isinstance(term, Let) and isinstance(term.body, Let)):
            return None
        outer, inner = term, term.body
        for pure_first in (True, False):
            if pure_first:
                x, m = outer.name, outer.bound
                y, n = inner.name, inner.bound
            else:
                y, n = outer.name, outer.bound
                x, m = inner.name, inner.bound
            if x == y:
                continue
            try:
                _, m_eff = infer(env, store_type, m)
            except EffectTypeError:
                continue
            if m_eff != IDENTITY:
                continue
            if x in free_vars(n) or y in free_vars(m):
                continue
            return x, m, y, n, inner.body
        return None

    hit = match_commuting(t)
    if hit is None:
        return embed_intermediate(t, ei, eo, r, env, store_type, supply, tail)
    x, m, y, n, p_body = hit
    sigma_m, _ = infer(env, store_type, m)
    sigma_n, _ = infer(env, store_type, n)
    env_p = dict(env)
    env_p[x] = sigma_m
    env_p[y] = sigma_n
    _, g_eff = infer(env_p, store_type, p_body)
    q = supply.fresh("q")
    s_name = supply.fresh("s")
    ea = supply.fresh("ea")
    qe, se = P.Endpoint(q), P.Endpoint(s_name)
    pure_m = embed_pure(m, qe, env, store_type, supply)
    enc_n = embed_intermediate(
        n, ei, P.Endpoint(ea), se, env, store_type, supply, STATE_ALGEBRA.combine(g_eff, tail)
    )
    enc_p = embed_intermediate(p_body, P.Endpoint(ea), eo, r, env_p, store_type, supply, tail)
    collect = P.RecvVal(qe.flip(), x, P.RecvVal(se.flip(), y, enc_p))
    return P.New(
        q,
        S.Send(_interp_type(sigma_m), S.END),
        P.New(
            s_name,
            S.Send(_interp_type(sigma_n), S.END),
            P.New(
                ea,
                S.Recv(effect_to_session(STATE_ALGEBRA.combine(g_eff, tail)), S.END),
                P.par(pure_m, enc_n, collect),
            ),
        ),
    )
