"""Processes of the session pi-calculus: AST, parser, printer, substitution.

Channels are endpoint pairs: `c` and its opposite endpoint `~c` share one
base name.  Communication in the semantics happens between the two
polarities of a restricted base, and `new` binds both.

The surface syntax cannot distinguish a received value from a received
channel (`c?(x).P` covers both), so the parser resolves binder and payload
kinds from usage: names that appear in subject position, in call channel
arguments, or dual-marked are channels; everything else is a value.  Free
names can be forced to channel kind via `known_channels`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sessions import SessionType, _TypeParser, format_session_type
from .terms import ParseError, ValueType, _Lexer, parse_value_type


@dataclass(frozen=True)
class Endpoint:
    name: str
    dual: bool = False

    def flip(self) -> "Endpoint":
        return Endpoint(self.name, not self.dual)

    def __str__(self) -> str:
        return ("~" if self.dual else "") + self.name


# ---------------------------------------------------------------- values

@dataclass(frozen=True)
class NatLit:
    n: int


@dataclass(frozen=True)
class UnitLit:
    pass


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class SucOf:
    arg: "Value"


@dataclass(frozen=True)
class Pair:
    fst: "Value"
    snd: "Value"


Value = NatLit | UnitLit | VarRef | SucOf | Pair
UNIT_VALUE = UnitLit()


def eval_value(v: Value) -> Value:
    """Collapse successor applications over closed naturals; symbolic
    values (free variables) stay symbolic."""
    if isinstance(v, SucOf):
        inner = eval_value(v.arg)
        if isinstance(inner, NatLit):
            return NatLit(inner.n + 1)
        return SucOf(inner)
    if isinstance(v, Pair):
        return Pair(eval_value(v.fst), eval_value(v.snd))
    return v


def value_var_names(v: Value) -> frozenset[str]:
    if isinstance(v, VarRef):
        return frozenset({v.name})
    if isinstance(v, SucOf):
        return value_var_names(v.arg)
    if isinstance(v, Pair):
        return value_var_names(v.fst) | value_var_names(v.snd)
    return frozenset()


def format_value(v: Value) -> str:
    if isinstance(v, NatLit):
        return str(v.n)
    if isinstance(v, UnitLit):
        return "unit"
    if isinstance(v, VarRef):
        return v.name
    if isinstance(v, SucOf):
        return f"suc {format_value(v.arg)}"
    if isinstance(v, Pair):
        return f"({format_value(v.fst)}, {format_value(v.snd)})"
    raise TypeError(f"not a value: {v!r}")


# -------------------------------------------------------------- processes

@dataclass(frozen=True)
class RecvVal:
    chan: Endpoint
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class SendVal:
    chan: Endpoint
    value: Value
    cont: "Process"


@dataclass(frozen=True)
class RecvChan:
    chan: Endpoint
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class SendChan:
    chan: Endpoint
    sent: Endpoint
    cont: "Process"


@dataclass(frozen=True)
class Branch:
    chan: Endpoint
    branches: tuple[tuple[str, "Process"], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate branch label in {labels}")
        if not labels:
            raise ValueError("branch must offer at least one label")

    def get(self, label: str) -> "Process | None":
        return dict(self.branches).get(label)


@dataclass(frozen=True)
class Select:
    chan: Endpoint
    label: str
    cont: "Process"


@dataclass(frozen=True)
class Def:
    name: str
    val_params: tuple[tuple[str, ValueType | None], ...]
    chan_params: tuple[tuple[str, SessionType | None], ...]
    body: "Process"
    scope: "Process"


@dataclass(frozen=True)
class Call:
    name: str
    val_args: tuple[Value, ...]
    chan_args: tuple[Endpoint, ...]


@dataclass(frozen=True)
class New:
    name: str
    annotation: SessionType | None
    body: "Process"


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Accept:
    shared: str
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class Request:
    shared: str
    binder: str
    cont: "Process"


Process = (
    RecvVal | SendVal | RecvChan | SendChan | Branch | Select
    | Def | Call | New | Par | Nil | Accept | Request
)
NIL = Nil()


def new(names, body: Process, annotation: SessionType | None = None) -> Process:
    """Nest restrictions: new(["a", "b"], p) == New a. New b. p."""
    if isinstance(names, str):
        names = [names]
    for name in reversed(list(names)):
        body = New(name, annotation, body)
        annotation = None
    return body


def par(*procs: Process) -> Process:
    procs = [p for p in procs if not isinstance(p, Nil)]
    if not procs:
        return NIL
    result = procs[-1]
    for p in reversed(procs[:-1]):
        result = Par(p, result)
    return result


def _subterms(p: Process) -> tuple[Process, ...]:
    if isinstance(p, (RecvVal, SendVal, RecvChan, SendChan, Select, Accept, Request)):
        return (p.cont,)
    if isinstance(p, Branch):
        return tuple(cont for _, cont in p.branches)
    if isinstance(p, Def):
        return (p.body, p.scope)
    if isinstance(p, New):
        return (p.body,)
    if isinstance(p, Par):
        return (p.left, p.right)
    return ()


def _free_walk(p: Process, on_endpoint, on_value, on_shared) -> None:
    """Single linear pass over free occurrences, tracking bound names.

    Binders shadow both the channel and the value namespace; shared names
    live in the same pool.
    """

    def values(v: Value, bound: frozenset[str]) -> None:
        if isinstance(v, VarRef):
            if v.name not in bound:
                on_value(v.name)
        elif isinstance(v, SucOf):
            values(v.arg, bound)
        elif isinstance(v, Pair):
            values(v.fst, bound)
            values(v.snd, bound)

    def go(q: Process, bound: frozenset[str]) -> None:
        if isinstance(q, (RecvVal, RecvChan)):
            if q.chan.name not in bound:
                on_endpoint(q.chan)
            go(q.cont, bound | {q.binder})
        elif isinstance(q, SendVal):
            if q.chan.name not in bound:
                on_endpoint(q.chan)
            values(q.value, bound)
            go(q.cont, bound)
        elif isinstance(q, SendChan):
            if q.chan.name not in bound:
                on_endpoint(q.chan)
            if q.sent.name not in bound:
                on_endpoint(q.sent)
            go(q.cont, bound)
        elif isinstance(q, Branch):
            if q.chan.name not in bound:
                on_endpoint(q.chan)
            for _, cont in q.branches:
                go(cont, bound)
        elif isinstance(q, Select):
            if q.chan.name not in bound:
                on_endpoint(q.chan)
            go(q.cont, bound)
        elif isinstance(q, Def):
            params = frozenset(n for n, _ in q.val_params) | frozenset(n for n, _ in q.chan_params)
            go(q.body, bound | params)
            go(q.scope, bound)
        elif isinstance(q, Call):
            for v in q.val_args:
                values(v, bound)
            for ep in q.chan_args:
                if ep.name not in bound:
                    on_endpoint(ep)
        elif isinstance(q, New):
            go(q.body, bound | {q.name})
        elif isinstance(q, Par):
            go(q.left, bound)
            go(q.right, bound)
        elif isinstance(q, (Accept, Request)):
            if q.shared not in bound:
                on_shared(q.shared)
            go(q.cont, bound | {q.binder})

    go(p, frozenset())


def free_endpoints(p: Process) -> frozenset[Endpoint]:
    """Endpoints (base name with polarity) occurring free in ``p``.

    The two polarities of one base are distinct linear resources; binders
    shadow both polarities of their name.
    """
    out: set[Endpoint] = set()
    _free_walk(p, out.add, lambda n: None, lambda n: None)
    return frozenset(out)


def free_endpoint_bases(p: Process) -> frozenset[str]:
    """Base names of channel endpoints occurring free in ``p``."""
    out: set[str] = set()
    _free_walk(p, lambda e: out.add(e.name), lambda n: None, lambda n: None)
    return frozenset(out)


def free_shared_names(p: Process) -> frozenset[str]:
    out: set[str] = set()
    _free_walk(p, lambda e: None, lambda n: None, out.add)
    return frozenset(out)


def free_value_names(p: Process) -> frozenset[str]:
    out: set[str] = set()
    _free_walk(p, lambda e: None, out.add, lambda n: None)
    return frozenset(out)


def all_process_names(p: Process) -> set[str]:
    """Every identifier in ``p``: endpoints, binders, value names, defs."""
    names: set[str] = set()

    def walk_value(v: Value) -> None:
        names.update(value_var_names(v))

    def walk(q: Process) -> None:
        if isinstance(q, (RecvVal, RecvChan)):
            names.add(q.chan.name)
            names.add(q.binder)
        elif isinstance(q, SendVal):
            names.add(q.chan.name)
            walk_value(q.value)
        elif isinstance(q, SendChan):
            names.update((q.chan.name, q.sent.name))
        elif isinstance(q, (Branch, Select)):
            names.add(q.chan.name)
        elif isinstance(q, Def):
            names.add(q.name)
            names.update(name for name, _ in q.val_params)
            names.update(name for name, _ in q.chan_params)
        elif isinstance(q, Call):
            names.add(q.name)
            for v in q.val_args:
                walk_value(v)
            names.update(ep.name for ep in q.chan_args)
        elif isinstance(q, New):
            names.add(q.name)
        elif isinstance(q, (Accept, Request)):
            names.update((q.shared, q.binder))
        for sub in _subterms(q):
            walk(sub)

    walk(p)
    return names


def fresh_name(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


# ------------------------------------------------------------ substitution

def _rename_any_binder(cont: Process, old: str, fresh: str) -> Process:
    """Rename a binder occurrence-wise in both namespaces; each pass only
    touches its own kind of occurrence, so applying both is safe."""
    cont = subst_endpoint(cont, old, Endpoint(fresh))
    return subst_value_name(cont, old, VarRef(fresh))


def subst_endpoint(p: Process, name: str, ep: Endpoint) -> Process:
    """Capture-avoiding substitution of a base name by an endpoint.

    Occurrences at the opposite polarity map to the opposite endpoint:
    with name -> ~d, a use of ~name becomes d.
    """

    def res(e: Endpoint) -> Endpoint:
        if e.name == name:
            return Endpoint(ep.name, ep.dual ^ e.dual)
        return e

    def binder_cont(binder: str, cont: Process) -> tuple[str, Process] | None:
        """None when the binder shadows the substituted name."""
        if binder == name:
            return None
        if binder == ep.name:
            fresh = fresh_name(binder, all_process_names(cont) | {name, ep.name})
            return fresh, subst_endpoint(_rename_any_binder(cont, binder, fresh), name, ep)
        return binder, subst_endpoint(cont, name, ep)

    if isinstance(p, (RecvVal, RecvChan)):
        cls = type(p)
        out = binder_cont(p.binder, p.cont)
        if out is None:
            return cls(res(p.chan), p.binder, p.cont)
        return cls(res(p.chan), out[0], out[1])
    if isinstance(p, SendVal):
        return SendVal(res(p.chan), p.value, subst_endpoint(p.cont, name, ep))
    if isinstance(p, SendChan):
        return SendChan(res(p.chan), res(p.sent), subst_endpoint(p.cont, name, ep))
    if isinstance(p, Branch):
        return Branch(res(p.chan), tuple((l, subst_endpoint(c, name, ep)) for l, c in p.branches))
    if isinstance(p, Select):
        return Select(res(p.chan), p.label, subst_endpoint(p.cont, name, ep))
    if isinstance(p, Def):
        params = {n for n, _ in p.val_params} | {n for n, _ in p.chan_params}
        body = p.body if name in params else subst_endpoint(p.body, name, ep)
        return Def(p.name, p.val_params, p.chan_params, body, subst_endpoint(p.scope, name, ep))
    if isinstance(p, Call):
        return Call(p.name, p.val_args, tuple(res(e) for e in p.chan_args))
    if isinstance(p, New):
        if p.name == name:
            return p
        if p.name == ep.name:
            fresh = fresh_name(p.name, all_process_names(p.body) | {name, ep.name})
            body = subst_endpoint(p.body, p.name, Endpoint(fresh))
            return New(fresh, p.annotation, subst_endpoint(body, name, ep))
        return New(p.name, p.annotation, subst_endpoint(p.body, name, ep))
    if isinstance(p, Par):
        return Par(subst_endpoint(p.left, name, ep), subst_endpoint(p.right, name, ep))
    if isinstance(p, Nil):
        return p
    if isinstance(p, (Accept, Request)):
        cls = type(p)
        out = binder_cont(p.binder, p.cont)
        if out is None:
            return cls(p.shared, p.binder, p.cont)
        return cls(p.shared, out[0], out[1])
    raise TypeError(f"not a process: {p!r}")


def _subst_in_value(v: Value, name: str, replacement: Value) -> Value:
    if isinstance(v, VarRef):
        return replacement if v.name == name else v
    if isinstance(v, SucOf):
        return SucOf(_subst_in_value(v.arg, name, replacement))
    if isinstance(v, Pair):
        return Pair(_subst_in_value(v.fst, name, replacement), _subst_in_value(v.snd, name, replacement))
    return v


def subst_value_name(p: Process, name: str, replacement: Value) -> Process:
    """Capture-avoiding substitution of a value variable."""
    avoid = value_var_names(replacement)

    def go(q: Process) -> Process:
        if isinstance(q, (RecvVal, RecvChan)):
            cls = type(q)
            if q.binder == name:
                return q
            if q.binder in avoid:
                fresh = fresh_name(q.binder, all_process_names(q) | set(avoid) | {name})
                cont = subst_value_name(q.cont, q.binder, VarRef(fresh))
                cont = subst_endpoint(cont, q.binder, Endpoint(fresh)) if q.binder in free_endpoint_bases(q.cont) else cont
                return cls(q.chan, fresh, go(cont))
            return cls(q.chan, q.binder, go(q.cont))
        if isinstance(q, SendVal):
            return SendVal(q.chan, _subst_in_value(q.value, name, replacement), go(q.cont))
        if isinstance(q, SendChan):
            return SendChan(q.chan, q.sent, go(q.cont))
        if isinstance(q, Branch):
            return Branch(q.chan, tuple((l, go(c)) for l, c in q.branches))
        if isinstance(q, Select):
            return Select(q.chan, q.label, go(q.cont))
        if isinstance(q, Def):
            params = {n for n, _ in q.val_params} | {n for n, _ in q.chan_params}
            body = q.body if name in params else go(q.body)
            return Def(q.name, q.val_params, q.chan_params, body, go(q.scope))
        if isinstance(q, Call):
            return Call(q.name, tuple(_subst_in_value(v, name, replacement) for v in q.val_args), q.chan_args)
        if isinstance(q, New):
            return New(q.name, q.annotation, go(q.body))
        if isinstance(q, Par):
            return Par(go(q.left), go(q.right))
        if isinstance(q, Nil):
            return q
        if isinstance(q, (Accept, Request)):
            cls = type(q)
            if q.binder == name:
                return q
            return cls(q.shared, q.binder, go(q.cont))
        raise TypeError(f"not a process: {q!r}")

    return go(p)


# ---------------------------------------------------------------- printer

def format_process(p: Process) -> str:
    def cont_str(cont: Process) -> str:
        if isinstance(cont, Nil):
            return ""
        return ". " + fmt(cont)

    def fmt(q: Process) -> str:
        if isinstance(q, Nil):
            return "0"
        if isinstance(q, (RecvVal, RecvChan)):
            return f"{q.chan}?({q.binder}){cont_str(q.cont)}"
        if isinstance(q, SendVal):
            return f"{q.chan}!<{format_value(q.value)}>{cont_str(q.cont)}"
        if isinstance(q, SendChan):
            return f"{q.chan}!<{q.sent}>{cont_str(q.cont)}"
        if isinstance(q, Branch):
            inner = ", ".join(f"{label}: {fmt(cont)}" for label, cont in q.branches)
            return f"{q.chan} >> {{{inner}}}"
        if isinstance(q, Select):
            return f"{q.chan} <+ {q.label}{cont_str(q.cont)}"
        if isinstance(q, Def):
            vals = ", ".join(n if t is None else f"{n}: {t}" for n, t in q.val_params)
            chans = ", ".join(n if t is None else f"{n}: {format_session_type(t)}" for n, t in q.chan_params)
            return f"def {q.name}({vals}; {chans}) = {fmt(q.body)} in {fmt(q.scope)}"
        if isinstance(q, Call):
            vals = ", ".join(format_value(v) for v in q.val_args)
            chans = ", ".join(str(ep) for ep in q.chan_args)
            return f"{q.name}<{vals}; {chans}>"
        if isinstance(q, New):
            annot = f": {format_session_type(q.annotation)}" if q.annotation is not None else ""
            return f"new {q.name}{annot}. {fmt(q.body)}"
        if isinstance(q, Par):
            parts: list[str] = []
            stack = [q]
            while stack:
                node = stack.pop()
                if isinstance(node, Par):
                    stack.append(node.right)
                    stack.append(node.left)
                else:
                    parts.append(fmt(node))
            return "(" + " | ".join(parts) + ")"
        if isinstance(q, Accept):
            return f"accept {q.shared}({q.binder}){cont_str(q.cont)}"
        if isinstance(q, Request):
            return f"request {q.shared}({q.binder}){cont_str(q.cont)}"
        raise TypeError(f"not a process: {q!r}")

    return fmt(p)


# ----------------------------------------------------------------- parser

_PROC_PUNCT = (
    "![", "?[", "+{", "&{", ">>", "<+",
    "?", "!", "<", ">", "(", ")", ".", ",", ":", ";", "|", "~", "{", "}", "=", "]",
)
_PROC_KEYWORDS = ("def", "in", "new", "accept", "request", "zero", "unit", "suc", "end", "mu")


class _Ambig(VarRef):
    """A bare identifier payload whose kind is resolved after parsing."""


class _ProcParser:
    def __init__(self, lex: _Lexer):
        self.lex = lex
        self.types = _TypeParser(lex)

    def endpoint(self) -> Endpoint:
        dual = False
        if self.lex.at_punct("~"):
            self.lex.next()
            dual = True
        tok = self.lex.next()
        if tok[0] != "word" or tok[1] in _PROC_KEYWORDS:
            raise ParseError(f"expected a channel name, found {tok[1]!r}", tok[2], tok[3])
        return Endpoint(tok[1], dual)

    def ident(self, what: str) -> str:
        tok = self.lex.next()
        if tok[0] != "word" or tok[1] in _PROC_KEYWORDS:
            raise ParseError(f"expected {what}, found {tok[1]!r}", tok[2], tok[3])
        return tok[1]

    def value(self) -> Value:
        tok = self.lex.peek()
        if tok is None:
            raise self.lex.error("expected a value")
        if tok[0] == "num":
            self.lex.next()
            return NatLit(int(tok[1]))
        if tok[0] == "punct" and tok[1] == "~":
            # dual endpoints are unambiguous channel payloads; the caller
            # turns them into channel sends
            raise ParseError("dual endpoint in value position", tok[2], tok[3])
        if tok[0] == "punct" and tok[1] == "(":
            self.lex.next()
            fst = self.value()
            self.lex.expect(",")
            snd = self.value()
            self.lex.expect(")")
            return Pair(fst, snd)
        if tok[0] == "word":
            self.lex.next()
            if tok[1] == "zero":
                return NatLit(0)
            if tok[1] == "unit":
                return UNIT_VALUE
            if tok[1] == "suc":
                return SucOf(self.value())
            if tok[1] in _PROC_KEYWORDS:
                raise ParseError(f"unexpected keyword {tok[1]!r} in value", tok[2], tok[3])
            return _Ambig(tok[1])
        raise ParseError(f"unexpected token {tok[1]!r} in value", tok[2], tok[3])

    def cont(self) -> Process:
        if self.lex.at_punct("."):
            self.lex.next()
            return self.proc()
        return NIL

    def proc(self) -> Process:
        tok = self.lex.peek()
        if tok is None:
            raise self.lex.error("expected a process")
        if tok[0] == "num" and tok[1] == "0":
            self.lex.next()
            return NIL
        if tok[0] == "punct" and tok[1] == "(":
            self.lex.next()
            parts = [self.proc()]
            while self.lex.at_punct("|"):
                self.lex.next()
                parts.append(self.proc())
            self.lex.expect(")")
            result = parts[-1]
            for part in reversed(parts[:-1]):
                result = Par(part, result)
            return result
        if tok[0] == "word" and tok[1] == "new":
            self.lex.next()
            names = [self.ident("a channel name")]
            while self.lex.at_punct(","):
                self.lex.next()
                names.append(self.ident("a channel name"))
            annotation = None
            if self.lex.at_punct(":"):
                self.lex.next()
                annotation = self.types.type()
            self.lex.expect(".")
            return new(names, self.proc(), annotation)
        if tok[0] == "word" and tok[1] == "def":
            return self.parse_def()
        if tok[0] == "word" and tok[1] in ("accept", "request"):
            self.lex.next()
            shared = self.ident("a shared channel name")
            self.lex.expect("(")
            binder = self.ident("a session binder")
            self.lex.expect(")")
            cls = Accept if tok[1] == "accept" else Request
            return cls(shared, binder, self.cont())
        # endpoint-led forms or a call
        if tok[0] == "punct" and tok[1] == "~":
            subject = self.endpoint()
            return self.prefixed(subject)
        if tok[0] == "word":
            name = self.ident("a process")
            nxt = self.lex.peek()
            if nxt is not None and nxt[0] == "punct" and nxt[1] == "<":
                return self.parse_call(name)
            return self.prefixed(Endpoint(name, False))
        raise ParseError(f"unexpected token {tok[1]!r}", tok[2], tok[3])

    def prefixed(self, subject: Endpoint) -> Process:
        tok = self.lex.next()
        if tok[1] == "?":
            self.lex.expect("(")
            binder = self.ident("a binder")
            self.lex.expect(")")
            return RecvVal(subject, binder, self.cont())
        if tok[1] == "!":
            self.lex.expect("<")
            if self.lex.at_punct("~"):
                self.lex.next()
                sent = Endpoint(self.ident("a channel name"), True)
                self.lex.expect(">")
                return SendChan(subject, sent, self.cont())
            value = self.value()
            self.lex.expect(">")
            return SendVal(subject, value, self.cont())
        if tok[1] == ">>":
            self.lex.expect("{")
            branches = []
            while True:
                label = self.ident("a label")
                self.lex.expect(":")
                branches.append((label, self.proc()))
                sep = self.lex.next()
                if sep[1] == "}":
                    break
                if sep[1] != ",":
                    raise ParseError(f"expected ',' or '}}', found {sep[1]!r}", sep[2], sep[3])
            try:
                return Branch(subject, tuple(branches))
            except ValueError as exc:
                raise ParseError(str(exc), tok[2], tok[3]) from None
        if tok[1] == "<+":
            label = self.ident("a label")
            return Select(subject, label, self.cont())
        raise ParseError(f"expected a prefix after {subject}, found {tok[1]!r}", tok[2], tok[3])

    def parse_call(self, name: str) -> Process:
        self.lex.expect("<")
        val_args: list[Value] = []
        chan_args: list[Endpoint] = []
        if not self.lex.at_punct(";") and not self.lex.at_punct(">"):
            val_args.append(self.value())
            while self.lex.at_punct(","):
                self.lex.next()
                val_args.append(self.value())
        if self.lex.at_punct(";"):
            self.lex.next()
            if not self.lex.at_punct(">"):
                chan_args.append(self.endpoint())
                while self.lex.at_punct(","):
                    self.lex.next()
                    chan_args.append(self.endpoint())
        self.lex.expect(">")
        return Call(name, tuple(val_args), tuple(chan_args))

    def parse_def(self) -> Process:
        self.lex.expect("def")
        name = self.ident("a definition name")
        self.lex.expect("(")
        val_params: list[tuple[str, ValueType | None]] = []
        chan_params: list[tuple[str, SessionType | None]] = []

        def param(target, is_chan: bool):
            pname = self.ident("a parameter")
            annot = None
            if self.lex.at_punct(":"):
                self.lex.next()
                if is_chan:
                    annot = self.types.type()
                else:
                    tok = self.lex.next()
                    annot = parse_value_type(tok[1])
            target.append((pname, annot))

        if not self.lex.at_punct(";") and not self.lex.at_punct(")"):
            param(val_params, False)
            while self.lex.at_punct(","):
                self.lex.next()
                param(val_params, False)
        if self.lex.at_punct(";"):
            self.lex.next()
            if not self.lex.at_punct(")"):
                param(chan_params, True)
                while self.lex.at_punct(","):
                    self.lex.next()
                    param(chan_params, True)
        self.lex.expect(")")
        self.lex.expect("=")
        body = self.proc()
        self.lex.expect("in")
        scope = self.proc()
        return Def(name, tuple(val_params), tuple(chan_params), body, scope)


def parse_process(text: str, known_channels=()) -> Process:
    lex = _Lexer(text, punct=_PROC_PUNCT)
    parser = _ProcParser(lex)
    p = parser.proc()
    tok = lex.peek()
    if tok is not None:
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    return resolve_kinds(p, known_channels=frozenset(known_channels))


# ------------------------------------------------------- kind resolution

def _used_as_channel(p: Process, name: str) -> bool:
    """Does ``name`` occur in an unambiguous channel position in ``p``,
    before being rebound?"""
    if isinstance(p, (RecvVal, RecvChan)):
        if p.chan.name == name:
            return True
        if p.binder == name:
            return False
        return _used_as_channel(p.cont, name)
    if isinstance(p, (SendVal, Select)):
        if p.chan.name == name:
            return True
        return _used_as_channel(p.cont, name)
    if isinstance(p, SendChan):
        if name in (p.chan.name, p.sent.name):
            return True
        return _used_as_channel(p.cont, name)
    if isinstance(p, Branch):
        if p.chan.name == name:
            return True
        return any(_used_as_channel(c, name) for _, c in p.branches)
    if isinstance(p, Call):
        return any(ep.name == name for ep in p.chan_args)
    if isinstance(p, Def):
        params = {n for n, _ in p.val_params} | {n for n, _ in p.chan_params}
        in_body = name not in params and _used_as_channel(p.body, name)
        return in_body or _used_as_channel(p.scope, name)
    if isinstance(p, New):
        if p.name == name:
            return False
        return _used_as_channel(p.body, name)
    if isinstance(p, Par):
        return _used_as_channel(p.left, name) or _used_as_channel(p.right, name)
    if isinstance(p, (Accept, Request)):
        if p.binder == name:
            return False
        return _used_as_channel(p.cont, name)
    return False


def _deambig_value(v: Value) -> Value:
    if isinstance(v, _Ambig):
        return VarRef(v.name)
    if isinstance(v, SucOf):
        return SucOf(_deambig_value(v.arg))
    if isinstance(v, Pair):
        return Pair(_deambig_value(v.fst), _deambig_value(v.snd))
    return v


def resolve_kinds(p: Process, known_channels: frozenset[str] = frozenset()) -> Process:
    """Canonicalize receive nodes and bare-identifier payloads.

    A receive binder becomes a channel binder exactly when it is used as a
    channel in its scope; a bare identifier payload is a channel send
    exactly when the name is channel-kind where it occurs.
    """

    def go(q: Process, chans: frozenset[str]) -> Process:
        if isinstance(q, (RecvVal, RecvChan)):
            if _used_as_channel(q.cont, q.binder):
                return RecvChan(q.chan, q.binder, go(q.cont, chans | {q.binder}))
            return RecvVal(q.chan, q.binder, go(q.cont, chans - {q.binder}))
        if isinstance(q, SendVal):
            if isinstance(q.value, VarRef) and q.value.name in chans:
                return SendChan(q.chan, Endpoint(q.value.name, False), go(q.cont, chans))
            return SendVal(q.chan, _deambig_value(q.value), go(q.cont, chans))
        if isinstance(q, SendChan):
            return SendChan(q.chan, q.sent, go(q.cont, chans))
        if isinstance(q, Branch):
            return Branch(q.chan, tuple((l, go(c, chans)) for l, c in q.branches))
        if isinstance(q, Select):
            return Select(q.chan, q.label, go(q.cont, chans))
        if isinstance(q, Def):
            body_chans = frozenset(n for n, _ in q.chan_params)
            return Def(q.name, q.val_params, q.chan_params, go(q.body, body_chans), go(q.scope, chans))
        if isinstance(q, Call):
            return Call(q.name, tuple(_deambig_value(v) for v in q.val_args), q.chan_args)
        if isinstance(q, New):
            return New(q.name, q.annotation, go(q.body, chans | {q.name}))
        if isinstance(q, Par):
            return Par(go(q.left, chans), go(q.right, chans))
        if isinstance(q, (Accept, Request)):
            cls = type(q)
            return cls(q.shared, q.binder, go(q.cont, chans | {q.binder}))
        return q

    return go(p, known_channels)
