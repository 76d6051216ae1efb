"""Early labelled semantics over canonical configurations.

A configuration is a flattened parallel composition together with its
hoisted restricted names, a definition environment, and the set of
observable free channels.  All internal synchronization (value and channel
exchange, select/branch, accept/request pairing, call unfolding) is tau;
actions on free observables appear as visible labels, with inputs
enumerated over a finite value domain and channel inputs drawn from a
canonical fresh-name supply.

States are interned by the structural-congruence normal form, so
exploration is finite whenever the process is.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from . import process as P
from .normalize import canonical_parts, serialize_process, _decompose


class RuntimeSafetyViolation(Exception):
    pass


class FuelExhausted(Exception):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class StateCapExceeded(Exception):
    pass


# ------------------------------------------------------------------ labels

@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class OutVal:
    chan: P.Endpoint
    value: P.Value


@dataclass(frozen=True)
class InVal:
    chan: P.Endpoint
    value: P.Value


@dataclass(frozen=True)
class OutChan:
    chan: P.Endpoint
    name: str


@dataclass(frozen=True)
class InChan:
    chan: P.Endpoint
    name: str


@dataclass(frozen=True)
class SelectL:
    chan: P.Endpoint
    label: str


@dataclass(frozen=True)
class OfferL:
    chan: P.Endpoint
    label: str


@dataclass(frozen=True)
class SharedInit:
    shared: str


TransitionLabel = Tau | OutVal | InVal | OutChan | InChan | SelectL | OfferL | SharedInit
TAU = Tau()


def format_label(label: TransitionLabel) -> str:
    if isinstance(label, Tau):
        return "tau"
    if isinstance(label, OutVal):
        return f"{label.chan}!<{P.format_value(label.value)}>"
    if isinstance(label, InVal):
        return f"{label.chan}?({P.format_value(label.value)})"
    if isinstance(label, OutChan):
        return f"{label.chan}!<{label.name}>"
    if isinstance(label, InChan):
        return f"{label.chan}?({label.name})"
    if isinstance(label, SelectL):
        return f"{label.chan}<+{label.label}"
    if isinstance(label, OfferL):
        return f"{label.chan}>>{label.label}"
    if isinstance(label, SharedInit):
        return f"init {label.shared}"
    raise TypeError(f"not a label: {label!r}")


# ------------------------------------------------------------ configuration

DefClosure = tuple[tuple[str, ...], tuple[str, ...], P.Process]


@dataclass(frozen=True)
class Configuration:
    restricted: tuple[str, ...]
    components: tuple[P.Process, ...]
    defs: tuple[tuple[str, DefClosure], ...]
    observables: frozenset[str]
    key: str

    def all_names(self) -> set[str]:
        names = set(self.restricted) | self.observables
        for comp in self.components:
            names |= P.all_process_names(comp)
        for name, (_, _, body) in self.defs:
            names.add(name)
            names |= P.all_process_names(body)
        return names

    def residual_process(self) -> P.Process:
        body: P.Process = P.par(*self.components)
        for name in reversed(self.restricted):
            body = P.New(name, None, body)
        return body


def _rename_calls(p: P.Process, old: str, new: str) -> P.Process:
    def go(q: P.Process) -> P.Process:
        if isinstance(q, P.Call) and q.name == old:
            return P.Call(new, q.val_args, q.chan_args)
        if isinstance(q, P.Def):
            body = q.body if q.name == old else go(q.body)
            scope = q.scope if q.name == old else go(q.scope)
            return P.Def(q.name, q.val_params, q.chan_params, body, scope)
        if isinstance(q, (P.RecvVal, P.RecvChan, P.Select, P.Accept, P.Request)):
            return type(q)(*_head_fields(q), go(q.cont))
        if isinstance(q, P.SendVal):
            return P.SendVal(q.chan, q.value, go(q.cont))
        if isinstance(q, P.SendChan):
            return P.SendChan(q.chan, q.sent, go(q.cont))
        if isinstance(q, P.Branch):
            return P.Branch(q.chan, tuple((l, go(c)) for l, c in q.branches))
        if isinstance(q, P.New):
            return P.New(q.name, q.annotation, go(q.body))
        if isinstance(q, P.Par):
            return P.Par(go(q.left), go(q.right))
        return q

    return go(p)


def _head_fields(q: P.Process) -> tuple:
    if isinstance(q, (P.RecvVal, P.RecvChan)):
        return (q.chan, q.binder)
    if isinstance(q, P.Select):
        return (q.chan, q.label)
    if isinstance(q, (P.Accept, P.Request)):
        return (q.shared, q.binder)
    raise TypeError(q)


def make_configuration(
    p: P.Process,
    observables: frozenset[str] = frozenset(),
    defs: dict[str, DefClosure] | None = None,
) -> Configuration:
    restricted, comps = _decompose(p)
    return _assemble(restricted, comps, dict(defs or {}), observables)


def _assemble(
    restricted: list[str],
    comps: list[P.Process],
    defs: dict[str, DefClosure],
    observables: frozenset[str],
) -> Configuration:
    # Reduction exposes fresh structure (restrictions, parallels,
    # definitions) at component roots, so rebuild and re-flatten the whole
    # soup, pulling definitions into the environment as they surface.
    body: P.Process = P.par(*comps)
    for name in reversed(restricted):
        body = P.New(name, None, body)
    restricted, pending = _decompose(body)
    comps = []
    while pending:
        comp = pending.pop(0)
        if isinstance(comp, P.Def):
            name = comp.name
            scope = comp.scope
            def_body = comp.body
            if name in defs and defs[name][2] != _close_def(comp)[2]:
                fresh = P.fresh_name(
                    name, set(defs) | P.all_process_names(scope) | P.all_process_names(def_body)
                )
                def_body = _rename_calls(def_body, name, fresh)
                scope = _rename_calls(scope, name, fresh)
                name = fresh
            defs[name] = _close_def(P.Def(name, comp.val_params, comp.chan_params, def_body, P.NIL))
            sub_restricted, sub_comps = _decompose(scope)
            taken = set(restricted) | {n for c in (comps + pending) for n in P.all_process_names(c)}
            for sub in sub_restricted:
                if sub in taken:
                    fresh = P.fresh_name(sub, taken | set(sub_restricted))
                    sub_comps = [P.subst_endpoint(c, sub, P.Endpoint(fresh)) for c in sub_comps]
                    sub = fresh
                restricted.append(sub)
                taken.add(sub)
            pending = sub_comps + pending
        elif isinstance(comp, P.Nil):
            continue
        else:
            comps.append(comp)
    restricted, comps = canonical_parts(restricted, comps)
    key_parts = [",".join(restricted)]
    key_parts.extend(serialize_process(c) for c in comps)
    key_parts.append("|defs:" + ",".join(sorted(name for name, _ in sorted(defs.items()))))
    return Configuration(
        restricted=tuple(restricted),
        components=tuple(comps),
        defs=tuple(sorted(defs.items())),
        observables=observables,
        key="\n".join(key_parts),
    )


def _close_def(d: P.Def) -> DefClosure:
    """Canonicalize a definition body with positional parameter names."""
    val_names = tuple(f"%v{i}" for i in range(len(d.val_params)))
    chan_names = tuple(f"%c{i}" for i in range(len(d.chan_params)))
    body = d.body
    for (old, _), new in zip(d.val_params, val_names):
        body = P.subst_value_name(body, old, P.VarRef(new))
    for (old, _), new in zip(d.chan_params, chan_names):
        body = P.subst_endpoint(body, old, P.Endpoint(new))
    return (val_names, chan_names, body)


def _fresh_supply_name(cfg: Configuration) -> str:
    taken = cfg.all_names()
    k = 0
    while f"@{k}" in taken:
        k += 1
    return f"@{k}"


def _fresh_session_name(cfg: Configuration) -> str:
    taken = cfg.all_names()
    k = 0
    while f"s{k}'" in taken:
        k += 1
    return f"s{k}'"


# ------------------------------------------------------------- transitions

_SEND_HEADS = (P.SendVal, P.SendChan)
_RECV_HEADS = (P.RecvVal, P.RecvChan)


def _receive(cont_holder: P.Process, payload) -> P.Process:
    """Substitute an incoming item (value or endpoint) for the binder."""
    binder = cont_holder.binder
    cont = cont_holder.cont
    if isinstance(payload, P.Endpoint):
        return P.subst_endpoint(cont, binder, payload)
    return P.subst_value_name(cont, binder, payload)


def _payload(send_head: P.Process):
    if isinstance(send_head, P.SendVal):
        return P.eval_value(send_head.value)
    return send_head.sent


def _sync_mismatch(a: P.Process, b: P.Process) -> str | None:
    """A reason string when two dual heads cannot synchronize safely."""
    if isinstance(a, _SEND_HEADS):
        if isinstance(b, _RECV_HEADS):
            return None
        return f"send on {a.chan} meets {type(b).__name__}"
    if isinstance(a, _RECV_HEADS):
        if isinstance(b, _SEND_HEADS):
            return None
        return f"receive on {a.chan} meets {type(b).__name__}"
    if isinstance(a, P.Select):
        if isinstance(b, P.Branch):
            if b.get(a.label) is None:
                return f"selected label {a.label} is not offered on {b.chan}"
            return None
        return f"select on {a.chan} meets {type(b).__name__}"
    if isinstance(a, P.Branch):
        if isinstance(b, P.Select):
            return _sync_mismatch(b, a)
        return f"branch on {a.chan} meets {type(b).__name__}"
    return f"{type(a).__name__} meets {type(b).__name__}"


def transitions(
    cfg: Configuration, value_domain: tuple[P.Value, ...] = (P.NatLit(0), P.NatLit(1))
) -> list[tuple[TransitionLabel, Configuration]]:
    out: list[tuple[TransitionLabel, Configuration]] = []
    comps = cfg.components
    restricted = set(cfg.restricted)
    defs = dict(cfg.defs)

    def rebuild(new_comps: list[P.Process], new_restricted=None) -> Configuration:
        return _assemble(
            list(new_restricted if new_restricted is not None else cfg.restricted),
            [c for c in new_comps if not isinstance(c, P.Nil)],
            dict(defs),
            cfg.observables,
        )

    def replaced(i: int, *new: P.Process) -> list[P.Process]:
        return [c for k, c in enumerate(comps) if k != i] + list(new)

    def replaced2(i: int, j: int, *new: P.Process) -> list[P.Process]:
        return [c for k, c in enumerate(comps) if k not in (i, j)] + list(new)

    # internal synchronization on dual endpoints
    for i, a in enumerate(comps):
        subj_a = getattr(a, "chan", None)
        if subj_a is None:
            continue
        for j, b in enumerate(comps):
            if i == j:
                continue
            subj_b = getattr(b, "chan", None)
            if subj_b is None or subj_b != subj_a.flip():
                continue
            if not isinstance(a, _SEND_HEADS) and not isinstance(a, P.Select):
                continue  # count each pair once, from the active side
            reason = _sync_mismatch(a, b)
            if reason is not None:
                if subj_a.name in restricted:
                    raise RuntimeSafetyViolation(reason)
                continue
            if isinstance(a, _SEND_HEADS):
                target = rebuild(replaced2(i, j, a.cont, _receive(b, _payload(a))))
            else:
                target = rebuild(replaced2(i, j, a.cont, b.get(a.label)))
            out.append((TAU, target))

    # accept/request pairing on shared names
    for i, a in enumerate(comps):
        if not isinstance(a, P.Accept):
            continue
        for j, b in enumerate(comps):
            if not isinstance(b, P.Request) or b.shared != a.shared:
                continue
            session = _fresh_session_name(cfg)
            acc = P.subst_endpoint(a.cont, a.binder, P.Endpoint(session, False))
            req = P.subst_endpoint(b.cont, b.binder, P.Endpoint(session, True))
            target = rebuild(replaced2(i, j, acc, req), list(cfg.restricted) + [session])
            label: TransitionLabel = (
                SharedInit(a.shared) if a.shared in cfg.observables else TAU
            )
            out.append((label, target))

    # call unfolding
    for i, a in enumerate(comps):
        if not isinstance(a, P.Call):
            continue
        closure = defs.get(a.name)
        if closure is None:
            raise RuntimeSafetyViolation(f"call to unknown definition {a.name!r}")
        val_names, chan_names, body = closure
        if len(val_names) != len(a.val_args) or len(chan_names) != len(a.chan_args):
            raise RuntimeSafetyViolation(f"arity mismatch calling {a.name!r}")
        for name, value in zip(val_names, a.val_args):
            body = P.subst_value_name(body, name, P.eval_value(value))
        for name, ep in zip(chan_names, a.chan_args):
            body = P.subst_endpoint(body, name, ep)
        out.append((TAU, rebuild(replaced(i, body))))

    # visible actions on observable free endpoints; names drawn from the
    # canonical fresh supply (@k) are observable by construction
    for i, a in enumerate(comps):
        subj = getattr(a, "chan", None)
        if subj is None or subj.name in restricted:
            continue
        if subj.name not in cfg.observables and not subj.name.startswith("@"):
            continue
        if isinstance(a, P.SendVal):
            out.append((OutVal(subj, P.eval_value(a.value)), rebuild(replaced(i, a.cont))))
        elif isinstance(a, P.SendChan):
            sent = a.sent
            if sent.name in restricted:
                fresh = _fresh_supply_name(cfg)
                renamed = [P.subst_endpoint(c, sent.name, P.Endpoint(fresh)) for c in replaced(i, a.cont)]
                rest = [n for n in cfg.restricted if n != sent.name]
                out.append(
                    (OutChan(subj, str(P.Endpoint(fresh, sent.dual))), rebuild(renamed, rest))
                )
            else:
                out.append((OutChan(subj, str(sent)), rebuild(replaced(i, a.cont))))
        elif isinstance(a, P.RecvVal):
            for v in value_domain:
                out.append((InVal(subj, v), rebuild(replaced(i, _receive(a, v)))))
        elif isinstance(a, P.RecvChan):
            fresh = _fresh_supply_name(cfg)
            out.append((InChan(subj, fresh), rebuild(replaced(i, _receive(a, P.Endpoint(fresh, False))))))
        elif isinstance(a, P.Select):
            out.append((SelectL(subj, a.label), rebuild(replaced(i, a.cont))))
        elif isinstance(a, P.Branch):
            for label, cont in a.branches:
                out.append((OfferL(subj, label), rebuild(replaced(i, cont))))
    return out


# -------------------------------------------------------------- execution

@dataclass(frozen=True)
class Outcome:
    emitted: tuple[P.Value, ...]
    store: P.Value | None
    residual: str
    steps: int

    def residual_hash(self) -> str:
        return hashlib.sha256(self.residual.encode()).hexdigest()[:12]


def find_store_value(cfg: Configuration) -> P.Value | None:
    """Read the current store contents out of a waiting store agent: the
    payload of the get branch of a {get, put, stop} offer (possibly behind
    an accept)."""

    def from_branch(b: P.Process) -> P.Value | None:
        if isinstance(b, P.Branch) and set(dict(b.branches)) == {"get", "put", "stop"}:
            get_cont = b.get("get")
            if isinstance(get_cont, P.SendVal):
                return P.eval_value(get_cont.value)
        return None

    for comp in cfg.components:
        found = from_branch(comp)
        if found is None and isinstance(comp, P.Accept):
            found = from_branch(comp.cont)
        if found is not None:
            return found
    return None


def _executable(label: TransitionLabel, observables: frozenset[str]) -> bool:
    if isinstance(label, (Tau, SharedInit)):
        return True
    if isinstance(label, OutVal):
        return label.chan.name in observables
    return False


def run(
    p: P.Process,
    mode: str = "all",
    *,
    seed: int = 0,
    fuel: int = 10_000,
    cap: int = 100_000,
    observables: frozenset[str] = frozenset({"r"}),
    value_domain: tuple[P.Value, ...] = (P.NatLit(0), P.NatLit(1)),
    store_reader=None,
) -> tuple[Outcome, ...]:
    """Execute to quiescence; internal steps are taus, shared-channel
    initiations, and outputs on observable channels (recorded in order).

    ``mode`` is "one" (a seeded deterministic schedule) or "all"
    (exhaustive over internal nondeterminism, deduplicated by canonical
    configuration).
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    initial = make_configuration(p, observables=observables)

    def outcome(cfg: Configuration, emitted: tuple[P.Value, ...], steps: int) -> Outcome:
        store = store_reader(cfg) if store_reader is not None else None
        return Outcome(emitted, store, P.format_process(cfg.residual_process()), steps)

    def steps_of(cfg: Configuration) -> list[tuple[TransitionLabel, Configuration]]:
        return [
            (label, target)
            for label, target in transitions(cfg, value_domain)
            if _executable(label, observables)
        ]

    if mode == "one":
        rng = random.Random(seed)
        cfg, emitted, steps = initial, (), 0
        while True:
            enabled = steps_of(cfg)
            if not enabled:
                return (outcome(cfg, emitted, steps),)
            if steps >= fuel:
                raise FuelExhausted(
                    f"no quiescence within {fuel} steps", partial=outcome(cfg, emitted, steps)
                )
            label, cfg = rng.choice(enabled)
            if isinstance(label, OutVal):
                emitted = emitted + (label.value,)
            steps += 1

    if mode != "all":
        raise ValueError(f"unknown mode {mode!r}")

    outcomes: set[Outcome] = set()
    seen: set[tuple[str, tuple[P.Value, ...]]] = set()
    stack: list[tuple[Configuration, tuple[P.Value, ...], int]] = [(initial, (), 0)]
    seen.add((initial.key, ()))
    while stack:
        cfg, emitted, steps = stack.pop()
        enabled = steps_of(cfg)
        if not enabled:
            outcomes.add(outcome(cfg, emitted, steps))
            continue
        if steps >= fuel:
            raise FuelExhausted(
                f"a schedule exceeded {fuel} steps", partial=outcome(cfg, emitted, steps)
            )
        for label, target in enabled:
            emitted2 = emitted + (label.value,) if isinstance(label, OutVal) else emitted
            state = (target.key, emitted2)
            if state in seen:
                continue
            if len(seen) >= cap:
                raise StateCapExceeded(f"more than {cap} configurations explored")
            seen.add(state)
            stack.append((target, emitted2, steps + 1))
    if not outcomes:
        raise FuelExhausted("execution diverges: every schedule cycles without quiescing")
    return tuple(sorted(outcomes, key=lambda o: (o.residual, str(o.emitted), str(o.store))))
