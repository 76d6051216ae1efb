"""Binary session types: duality, equi-recursive equality, select-width subtyping.

Payloads are either value types or session types (channel delegation).
Recursive types use mu-binders compared equi-recursively: a `Mu` is
interchangeable with its unfolding, decided by memoized pair exploration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import ParseError, ValueType, _Lexer, parse_value_type

Payload = "ValueType | SessionType"


@dataclass(frozen=True)
class Send:
    payload: object
    cont: "SessionType"


@dataclass(frozen=True)
class Recv:
    payload: object
    cont: "SessionType"


def _norm_choices(choices) -> tuple[tuple[str, "SessionType"], ...]:
    pairs = tuple(choices.items()) if isinstance(choices, dict) else tuple(choices)
    if not pairs:
        raise ValueError("label map must be nonempty")
    labels = [label for label, _ in pairs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate labels in {labels}")
    return tuple(sorted(pairs))


@dataclass(frozen=True)
class Select:
    choices: tuple[tuple[str, "SessionType"], ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", _norm_choices(self.choices))

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.choices)

    def get(self, label: str) -> "SessionType | None":
        return dict(self.choices).get(label)


@dataclass(frozen=True)
class Branch:
    choices: tuple[tuple[str, "SessionType"], ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", _norm_choices(self.choices))

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.choices)

    def get(self, label: str) -> "SessionType | None":
        return dict(self.choices).get(label)


@dataclass(frozen=True)
class Mu:
    var: str
    body: "SessionType"


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class End:
    pass


SessionType = Send | Recv | Select | Branch | Mu | TVar | End
END = End()


def is_value_payload(payload) -> bool:
    return isinstance(payload, ValueType)


def assert_wellformed(s: SessionType, bound: frozenset[str] = frozenset()) -> None:
    """Closedness and contractivity: TVar under a binding Mu, Mu bodies
    not immediately a type variable."""
    if isinstance(s, TVar):
        if s.name not in bound:
            raise ValueError(f"unbound session variable {s.name!r}")
        return
    if isinstance(s, Mu):
        if isinstance(s.body, TVar):
            raise ValueError(f"non-contractive mu {s.var!r}")
        assert_wellformed(s.body, bound | {s.var})
        return
    if isinstance(s, (Send, Recv)):
        if not is_value_payload(s.payload):
            assert_wellformed(s.payload, bound)
        assert_wellformed(s.cont, bound)
        return
    if isinstance(s, (Select, Branch)):
        for _, cont in s.choices:
            assert_wellformed(cont, bound)
        return
    if isinstance(s, End):
        return
    raise TypeError(f"not a session type: {s!r}")


def dual(s: SessionType) -> SessionType:
    if isinstance(s, Send):
        return Recv(s.payload, dual(s.cont))
    if isinstance(s, Recv):
        return Send(s.payload, dual(s.cont))
    if isinstance(s, Select):
        return Branch(tuple((label, dual(cont)) for label, cont in s.choices))
    if isinstance(s, Branch):
        return Select(tuple((label, dual(cont)) for label, cont in s.choices))
    if isinstance(s, Mu):
        return Mu(s.var, dual(s.body))
    if isinstance(s, (TVar, End)):
        return s
    raise TypeError(f"not a session type: {s!r}")


def _subst_tvar(s: SessionType, name: str, replacement: SessionType) -> SessionType:
    if isinstance(s, TVar):
        return replacement if s.name == name else s
    if isinstance(s, Mu):
        if s.var == name:
            return s
        return Mu(s.var, _subst_tvar(s.body, name, replacement))
    if isinstance(s, Send):
        payload = s.payload if is_value_payload(s.payload) else _subst_tvar(s.payload, name, replacement)
        return Send(payload, _subst_tvar(s.cont, name, replacement))
    if isinstance(s, Recv):
        payload = s.payload if is_value_payload(s.payload) else _subst_tvar(s.payload, name, replacement)
        return Recv(payload, _subst_tvar(s.cont, name, replacement))
    if isinstance(s, Select):
        return Select(tuple((l, _subst_tvar(c, name, replacement)) for l, c in s.choices))
    if isinstance(s, Branch):
        return Branch(tuple((l, _subst_tvar(c, name, replacement)) for l, c in s.choices))
    return s


def unfold(s: SessionType) -> SessionType:
    """Unfold top-level mu-binders until the head is a proper constructor."""
    while isinstance(s, Mu):
        s = _subst_tvar(s.body, s.var, s)
    return s


def _payload_equal(p, q, go) -> bool:
    if is_value_payload(p) != is_value_payload(q):
        return False
    if is_value_payload(p):
        return p is q
    return go(p, q)


def type_equal(s: SessionType, t: SessionType) -> bool:
    """Equality up to alpha-renaming of mu-binders and finite unfolding."""
    assumed: set[tuple[SessionType, SessionType]] = set()

    def go(a: SessionType, b: SessionType) -> bool:
        key = (a, b)
        if key in assumed:
            return True
        assumed.add(key)
        a, b = unfold(a), unfold(b)
        if isinstance(a, End) and isinstance(b, End):
            return True
        if isinstance(a, Send) and isinstance(b, Send):
            return _payload_equal(a.payload, b.payload, go) and go(a.cont, b.cont)
        if isinstance(a, Recv) and isinstance(b, Recv):
            return _payload_equal(a.payload, b.payload, go) and go(a.cont, b.cont)
        if isinstance(a, Select) and isinstance(b, Select) or isinstance(a, Branch) and isinstance(b, Branch):
            if a.labels() != b.labels():
                return False
            return all(go(ca, cb) for (_, ca), (_, cb) in zip(a.choices, b.choices))
        return False

    return go(s, t)


def select_subtype(s: SessionType, t: SessionType) -> bool:
    """Width subtyping on selects only: ``s`` is ``t`` with select label
    sets narrowed, covariantly through continuations and up to unfolding.
    Branch labels and payloads must match exactly."""
    assumed: set[tuple[SessionType, SessionType]] = set()

    def go(a: SessionType, b: SessionType) -> bool:
        key = (a, b)
        if key in assumed:
            return True
        assumed.add(key)
        a, b = unfold(a), unfold(b)
        if isinstance(a, End) and isinstance(b, End):
            return True
        if isinstance(a, Send) and isinstance(b, Send) or isinstance(a, Recv) and isinstance(b, Recv):
            return _payload_equal(a.payload, b.payload, type_equal) and go(a.cont, b.cont)
        if isinstance(a, Select) and isinstance(b, Select):
            wide = dict(b.choices)
            return all(label in wide and go(cont, wide[label]) for label, cont in a.choices)
        if isinstance(a, Branch) and isinstance(b, Branch):
            if a.labels() != b.labels():
                return False
            return all(go(ca, cb) for (_, ca), (_, cb) in zip(a.choices, b.choices))
        return False

    return go(s, t)


def dual_compatible(s: SessionType, t: SessionType) -> bool:
    """Duality modulo select widening, the condition discharged at channel
    restriction: there is a widening ``s'`` of the select nodes such that
    ``s'`` equals ``dual(t)`` (applied symmetrically on either side)."""
    assumed: set[tuple[SessionType, SessionType]] = set()

    def go(a: SessionType, b: SessionType) -> bool:
        key = (a, b)
        if key in assumed:
            return True
        assumed.add(key)
        a, b = unfold(a), unfold(b)
        if isinstance(a, End) and isinstance(b, End):
            return True
        if isinstance(a, Send) and isinstance(b, Recv) or isinstance(a, Recv) and isinstance(b, Send):
            return _payload_equal(a.payload, b.payload, type_equal) and go(a.cont, b.cont)
        if isinstance(a, Select) and isinstance(b, Branch):
            offered = dict(b.choices)
            return all(label in offered and go(cont, offered[label]) for label, cont in a.choices)
        if isinstance(a, Branch) and isinstance(b, Select):
            offered = dict(a.choices)
            return all(label in offered and go(offered[label], cont) for label, cont in b.choices)
        return False

    return go(s, t)


def format_session_type(s: SessionType) -> str:
    if isinstance(s, End):
        return "end"
    if isinstance(s, TVar):
        return s.name
    if isinstance(s, Mu):
        return f"mu {s.var}. {format_session_type(s.body)}"
    if isinstance(s, (Send, Recv)):
        mark = "!" if isinstance(s, Send) else "?"
        payload = str(s.payload) if is_value_payload(s.payload) else format_session_type(s.payload)
        return f"{mark}[{payload}]. {format_session_type(s.cont)}"
    if isinstance(s, (Select, Branch)):
        mark = "+" if isinstance(s, Select) else "&"
        inner = ", ".join(f"{label}: {format_session_type(cont)}" for label, cont in s.choices)
        return f"{mark}{{{inner}}}"
    raise TypeError(f"not a session type: {s!r}")


_TYPE_PUNCT = ("![", "?[", "]", "+{", "&{", "}", ":", ",", ".", "(", ")")


class _TypeParser:
    def __init__(self, lex: _Lexer):
        self.lex = lex

    def type(self) -> SessionType:
        tok = self.lex.peek()
        if tok is None:
            raise self.lex.error("expected a session type")
        if tok[1] in ("![", "?["):
            self.lex.next()
            payload = self.payload()
            self.lex.expect("]")
            cont = self.optional_cont()
            return Send(payload, cont) if tok[1] == "![" else Recv(payload, cont)
        if tok[1] in ("+{", "&{"):
            self.lex.next()
            choices = []
            while True:
                label = self.lex.next()
                if label[0] != "word":
                    raise ParseError(f"expected a label, found {label[1]!r}", label[2], label[3])
                self.lex.expect(":")
                choices.append((label[1], self.type()))
                sep = self.lex.next()
                if sep[1] == "}":
                    break
                if sep[1] != ",":
                    raise ParseError(f"expected ',' or '}}', found {sep[1]!r}", sep[2], sep[3])
            cls = Select if tok[1] == "+{" else Branch
            try:
                return cls(tuple(choices))
            except ValueError as exc:
                raise ParseError(str(exc), tok[2], tok[3]) from None
        if tok[0] == "word":
            self.lex.next()
            if tok[1] == "end":
                return END
            if tok[1] == "mu":
                var = self.lex.next()
                self.lex.expect(".")
                return Mu(var[1], self.type())
            return TVar(tok[1])
        raise ParseError(f"unexpected token {tok[1]!r} in session type", tok[2], tok[3])

    def payload(self):
        tok = self.lex.peek()
        if tok is not None and tok[0] == "word" and tok[1] in ("nat", "unit"):
            self.lex.next()
            return parse_value_type(tok[1])
        return self.type()

    def optional_cont(self) -> SessionType:
        if self.lex.at_punct("."):
            self.lex.next()
            return self.type()
        return END


def parse_session_type(text: str) -> SessionType:
    lex = _Lexer(text, punct=_TYPE_PUNCT)
    parser = _TypeParser(lex)
    s = parser.type()
    tok = lex.peek()
    if tok is not None:
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    assert_wellformed(s)
    return s
