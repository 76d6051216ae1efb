import pytest

from effsess import embedding
from effsess.process import Endpoint, NatLit, NIL, SucOf, VarRef, par, parse_process
from effsess.semantics import (
    FuelExhausted,
    InVal,
    OutVal,
    RuntimeSafetyViolation,
    SelectL,
    Tau,
    find_store_value,
    format_label,
    make_configuration,
    run,
    transitions,
)
from effsess.terms import ValueType, parse_program

NAT = ValueType.NAT


def labels_of(p, observables=frozenset(), domain=(NatLit(0), NatLit(1))):
    cfg = make_configuration(p, observables=frozenset(observables))
    return transitions(cfg, domain)


def test_single_tau_communication():
    out = labels_of(parse_process("new c. (c!<zero>.0 | ~c?(y).0)"))
    assert len(out) == 1
    label, target = out[0]
    assert isinstance(label, Tau)
    assert target.components == ()


def test_visible_output_on_free_channel():
    out = labels_of(parse_process("r!<zero>"), {"r"})
    assert [format_label(l) for l, _ in out] == ["r!<0>"]


def test_select_on_free_channel_matches_get_shape():
    # first visible action of the get operation: select get on the store's
    # opposite endpoint
    p = embedding.get_op(Endpoint("eff").flip(), "x", NIL)
    out = labels_of(p, {"eff"})
    assert [l for l, _ in out] == [SelectL(Endpoint("eff"), "get")]


def test_free_input_enumerates_value_domain():
    out = labels_of(parse_process("c?(x). r!<x>"), {"c", "r"})
    assert [l for l, _ in out] == [InVal(Endpoint("c"), NatLit(0)), InVal(Endpoint("c"), NatLit(1))]


def test_offer_labels_per_branch():
    out = labels_of(parse_process("c >> {get: 0, put: 0}"), {"c"})
    assert sorted(format_label(l) for l, _ in out) == ["c>>get", "c>>put"]


def test_sync_shape_mismatch_raises():
    p = parse_process("new c. (c!<zero> | ~c >> {get: 0})")
    with pytest.raises(RuntimeSafetyViolation):
        labels_of(p)


def test_free_mismatch_is_not_an_error():
    # shape mismatch on a free channel: no sync, just the visible actions
    out = labels_of(parse_process("(c!<zero> | ~c >> {get: 0})"), {"c"})
    assert all(not isinstance(l, Tau) for l, _ in out)


def test_run_store_example():
    prog = parse_program("store nat init 0\nlet x = get in put (suc x)")
    result = embedding.embed_top(prog)
    system = embedding.compose_with_store(result, NatLit(0), NAT)
    outcomes = run(system, "all", store_reader=find_store_value)
    assert len(outcomes) == 1
    (outcome,) = outcomes
    assert outcome.emitted == (parse_process("r!<unit>").value,)
    assert outcome.store == NatLit(1)


def test_store_get_emits_initial_value():
    # composed with get(eff)(x).r!<x>: r emits the initial value
    client = embedding.get_op(Endpoint("eff"), "x", parse_process("r!<x>"))
    agent = embedding.store_agent(NatLit(7), Endpoint("eff"), NAT)
    system = parse_process("0")
    from effsess.process import New, Par

    system = New("eff", None, Par(agent, client))
    outcomes = run(system, "all", store_reader=find_store_value)
    assert len(outcomes) == 1
    assert outcomes[0].emitted == (NatLit(7),)
    assert outcomes[0].store == NatLit(7)


def test_store_put_then_get():
    from effsess.process import New, Par

    client = embedding.put_op(
        Endpoint("eff"),
        NatLit(5),
        embedding.get_op(Endpoint("eff"), "x", parse_process("r!<x>")),
    )
    agent = embedding.store_agent(NatLit(0), Endpoint("eff"), NAT)
    system = New("eff", None, Par(agent, client))
    outcomes = run(system, "all", store_reader=find_store_value)
    assert outcomes[0].emitted == (NatLit(5),)
    assert outcomes[0].store == NatLit(5)


def test_intro_race_outcomes():
    store = embedding.shared_store_agent(NatLit(0), "k", NAT)
    plus2 = embedding.shared_get("k", "x", embedding.shared_put("k", SucOf(SucOf(VarRef("x"))), NIL))
    plus1 = embedding.shared_get("k", "x", embedding.shared_put("k", SucOf(VarRef("x")), NIL))
    outcomes = run(par(store, plus2, plus1), "all", observables=frozenset(), store_reader=find_store_value)
    assert sorted(o.store.n for o in outcomes) == [1, 2, 3]


def test_infinite_call_loop_exhausts_fuel():
    p = parse_process("def X(; c: end) = X<; c> in X<; d>")
    with pytest.raises(FuelExhausted):
        run(p, "all", fuel=10, observables=frozenset())
    with pytest.raises(FuelExhausted):
        run(p, "one", fuel=10, observables=frozenset())


def test_one_schedule_deterministic():
    prog = parse_program("store nat init 0\nlet x = get in let y = get in put (suc x)")
    result = embedding.embed_top(prog)
    system = embedding.compose_with_store(result, NatLit(0), NAT)
    a = run(system, "one", seed=3, store_reader=find_store_value)
    b = run(system, "one", seed=3, store_reader=find_store_value)
    assert a == b


def test_sequential_determinacy_for_pure_terms():
    prog = parse_program("store nat init 0\nlet x = zero in suc (suc x)")
    result = embedding.embed_top(prog)
    system = embedding.compose_with_store(result, NatLit(0), NAT)
    outcomes = run(system, "all", store_reader=find_store_value)
    assert len(outcomes) == 1
    assert outcomes[0].emitted == (NatLit(2),)


def test_transitions_commute_with_normalization():
    p = parse_process("new c. (c!<zero>.r!<unit> | ~c?(y))")
    q = parse_process("new d. (~d?(z) | d!<zero>.r!<unit>)")
    ca = make_configuration(p, observables=frozenset({"r"}))
    cb = make_configuration(q, observables=frozenset({"r"}))
    assert ca.key == cb.key
    ta = transitions(ca)
    tb = transitions(cb)
    assert [(format_label(l), t.key) for l, t in ta] == [(format_label(l), t.key) for l, t in tb]
