import random

import pytest

from effsess.sessions import (
    Branch,
    END,
    Mu,
    Recv,
    Select,
    Send,
    TVar,
    dual,
    dual_compatible,
    format_session_type,
    parse_session_type,
    select_subtype,
    type_equal,
    unfold,
)
from effsess.terms import ValueType

NAT, UNIT = ValueType.NAT, ValueType.UNIT

STORE = Mu("a", Branch((("get", Send(NAT, TVar("a"))), ("put", Recv(NAT, TVar("a"))), ("stop", END))))


def gen_type(rng: random.Random, depth: int, bound=()):
    choices = ["end"]
    if bound:
        choices.append("tvar")
    if depth > 0:
        choices += ["send", "recv", "select", "branch", "mu"]
    kind = rng.choice(choices)
    if kind == "end":
        return END
    if kind == "tvar":
        return TVar(rng.choice(bound))
    if kind in ("send", "recv"):
        payload = rng.choice([NAT, UNIT, gen_type(rng, depth - 1, bound)])
        cont = gen_type(rng, depth - 1, bound)
        return Send(payload, cont) if kind == "send" else Recv(payload, cont)
    if kind in ("select", "branch"):
        labels = rng.sample(["a", "b", "c", "d"], rng.randint(1, 3))
        choices_t = tuple((l, gen_type(rng, depth - 1, bound)) for l in labels)
        return Select(choices_t) if kind == "select" else Branch(choices_t)
    var = f"t{len(bound)}"
    body = gen_type(rng, depth - 1, bound + (var,))
    if isinstance(body, TVar):
        body = Send(NAT, body)  # keep contractive
    return Mu(var, body)


def test_dual_examples():
    assert dual(Send(NAT, END)) == Recv(NAT, END)
    assert dual(Select((("get", Recv(NAT, END)),))) == Branch((("get", Send(NAT, END)),))
    s = Mu("a", Branch((("get", Send(NAT, TVar("a"))),)))
    assert dual(dual(s)) == s


def test_dual_involution_generated():
    rng = random.Random(5)
    for _ in range(300):
        s = gen_type(rng, 5)
        assert dual(dual(s)) == s


def test_type_equal_unfolding():
    s = Mu("a", Send(NAT, TVar("a")))
    assert type_equal(s, unfold(s))
    assert type_equal(s, Send(NAT, s))
    assert not type_equal(END, Send(NAT, END))


def test_type_equal_alpha():
    s = Mu("a", Branch((("get", TVar("a")),)))
    t = Mu("b", Branch((("get", TVar("b")),)))
    assert type_equal(s, t)


def test_type_equal_is_equivalence_and_dual_respects_it():
    rng = random.Random(11)
    sample = [gen_type(rng, 4) for _ in range(40)]
    for s in sample:
        assert type_equal(s, s)
    for s in sample:
        for t in sample:
            if type_equal(s, t):
                assert type_equal(t, s)
                assert type_equal(dual(s), dual(t))


def test_select_subtype_width():
    narrow = Select((("get", Recv(NAT, END)),))
    wide = Select((("get", Recv(NAT, END)), ("put", Send(NAT, END))))
    assert select_subtype(narrow, wide)
    assert not select_subtype(wide, narrow)


def test_select_subtype_reflexive_transitive():
    rng = random.Random(3)
    sample = [gen_type(rng, 4) for _ in range(30)]
    for s in sample:
        assert select_subtype(s, s)
    trip = [
        (
            Select((("a", END),)),
            Select((("a", END), ("b", END))),
            Select((("a", END), ("b", END), ("c", END))),
        )
    ]
    for s, t, u in trip:
        assert select_subtype(s, t) and select_subtype(t, u) and select_subtype(s, u)


def test_branch_width_not_included():
    narrow = Branch((("get", END),))
    wide = Branch((("get", END), ("put", END)))
    assert not select_subtype(narrow, wide)


def test_select_subtype_through_mu():
    narrow = Select((("get", Recv(NAT, Select((("stop", END),)))),))
    wide = dual(STORE)
    assert select_subtype(narrow, wide)
    assert dual_compatible(narrow, STORE)


def test_dual_compatible_rejects_missing_label():
    sel = Select((("flush", END),))
    assert not dual_compatible(sel, STORE)


def test_parse_and_format_roundtrip():
    texts = [
        "end",
        "![nat]. end",
        "?[unit]. ![nat]. end",
        "+{get: ?[nat]. end, put: ![nat]. end}",
        "&{get: ![nat]. a, put: ?[nat]. a, stop: end}",
        "mu a. &{get: ![nat]. a, put: ?[nat]. a, stop: end}",
        "![?[nat]. end]. end",
    ]
    for text in texts[:4] + texts[5:]:
        s = parse_session_type(text)
        assert parse_session_type(format_session_type(s)) == s


def test_parse_rejects_unbound_tvar_and_duplicates():
    with pytest.raises(ValueError):
        parse_session_type("&{get: ![nat]. a, stop: end}")
    with pytest.raises(Exception):
        parse_session_type("+{get: end, get: end}")


def test_store_type_matches_display():
    assert format_session_type(STORE) == "mu a. &{get: ![nat]. a, put: ?[nat]. a, stop: end}"
