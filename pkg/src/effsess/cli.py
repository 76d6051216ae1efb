"""Command line front end: check, translate, pi-check, run, equiv.

Exit codes: 0 success (or BISIMILAR), 1 negative analysis verdict, 2
usage or parse errors.  ``--json`` switches every subcommand to versioned
machine-readable records (schema 1).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import embedding, equivalence, semantics
from . import process as P
from . import sessions as S
from .infer import EffectTypeError, infer
from .effects import format_effect
from .session_check import ProcEnv, SessionTypeError, session_check
from .terms import ParseError, ValueType, parse_program, parse_value_type

SCHEMA = 1


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _json_value(v: P.Value):
    if isinstance(v, P.NatLit):
        return v.n
    if isinstance(v, P.UnitLit):
        return "unit"
    return P.format_value(v)


def cmd_check(args) -> int:
    prog = parse_program(_read(args.file))
    try:
        tau, eff = infer({}, prog.store_type, prog.root)
    except EffectTypeError as exc:
        if args.json:
            print(json.dumps({"schema": SCHEMA, "ok": False, "error": str(exc), "kind": exc.kind}))
        else:
            print(f"type error: {exc}")
        return 1
    if args.json:
        print(json.dumps({"schema": SCHEMA, "ok": True, "type": str(tau), "effect": format_effect(eff)}))
    else:
        print(f"{tau}, {format_effect(eff)}")
    return 0


def _translate(prog, optimize: bool, send_stop: bool = False) -> embedding.EmbeddingResult:
    return embedding.embed_top(prog, optimize=optimize, send_stop=send_stop)


def render_translation(result: embedding.EmbeddingResult) -> str:
    lines = []
    for name, tau in sorted(result.gamma.items()):
        lines.append(f"-- gamma {name} : {tau}")
    for ep, session in sorted(result.delta.items(), key=lambda kv: str(kv[0])):
        lines.append(f"-- delta {ep} : {S.format_session_type(session)}")
    lines.append(P.format_process(result.process))
    return "\n".join(lines) + "\n"


def cmd_translate(args) -> int:
    prog = parse_program(_read(args.file))
    try:
        result = _translate(prog, args.optimize)
    except EffectTypeError as exc:
        print(f"type error: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(
            json.dumps(
                {
                    "schema": SCHEMA,
                    "process": P.format_process(result.process),
                    "delta": {str(ep): S.format_session_type(s) for ep, s in result.delta.items()},
                    "gamma": {name: str(t) for name, t in result.gamma.items()},
                }
            )
        )
    else:
        sys.stdout.write(render_translation(result))
    return 0


def parse_translation(text: str) -> tuple[ProcEnv, dict[P.Endpoint, S.SessionType], P.Process]:
    """Read a translated file: `-- delta`/`-- gamma` directives plus the
    process text (the directives are ordinary comments to the parser)."""
    delta: dict[P.Endpoint, S.SessionType] = {}
    gamma: dict[str, ValueType] = {}
    for line in text.splitlines():
        stripped = line.strip()
        for directive in ("-- delta ", "-- gamma "):
            if stripped.startswith(directive):
                payload = stripped[len(directive):]
                name, _, type_text = payload.partition(":")
                name = name.strip()
                if directive == "-- delta ":
                    dualized = name.startswith("~")
                    ep = P.Endpoint(name.lstrip("~"), dualized)
                    delta[ep] = S.parse_session_type(type_text.strip())
                else:
                    gamma[name] = parse_value_type(type_text.strip())
    known = {ep.name for ep in delta}
    proc = P.parse_process(text, known_channels=known)
    env = ProcEnv(vars=gamma)
    return env, delta, proc


def cmd_pi_check(args) -> int:
    env, delta, proc = parse_translation(_read(args.file))
    try:
        session_check(env, delta, proc)
    except SessionTypeError as exc:
        if args.json:
            print(json.dumps({"schema": SCHEMA, "ok": False, "kind": exc.kind, "error": str(exc)}))
        else:
            print(f"session type error ({exc.kind}): {exc}")
        return 1
    if args.json:
        print(json.dumps({"schema": SCHEMA, "ok": True}))
    else:
        print("OK")
    return 0


def cmd_run(args) -> int:
    prog = parse_program(_read(args.file))
    try:
        result = _translate(prog, args.optimize, send_stop=args.send_stop)
    except EffectTypeError as exc:
        print(f"type error: {exc}", file=sys.stderr)
        return 1
    system = embedding.compose_with_store(
        result, embedding.initial_store_value(prog), prog.store_type
    )
    mode = "all" if args.all_schedules else "one"
    outcomes = semantics.run(
        system,
        mode,
        seed=args.seed,
        fuel=args.fuel,
        store_reader=semantics.find_store_value,
    )
    for outcome in outcomes:
        record = {
            "result_values": [_json_value(v) for v in outcome.emitted],
            "residual_hash": outcome.residual_hash(),
            "steps": outcome.steps,
        }
        if outcome.store is not None:
            record["store"] = _json_value(outcome.store)
        if args.json:
            print(json.dumps({"schema": SCHEMA, **record}))
        else:
            store = "" if outcome.store is None else f" store={_json_value(outcome.store)}"
            values = ", ".join(P.format_value(v) for v in outcome.emitted)
            print(f"result=[{values}]{store} steps={outcome.steps} residual={record['residual_hash']}")
    return 0


def cmd_equiv(args) -> int:
    progs = [parse_program(_read(path)) for path in (args.file1, args.file2)]
    domain = tuple(P.NatLit(int(v)) for v in args.values.split(","))
    observables = frozenset({embedding.RESERVED_RESULT, embedding.RESERVED_EFFECT})
    ltss = []
    for prog in progs:
        result = embedding.embed_top(prog)
        ltss.append(
            equivalence.build_lts(result.process, observables, domain, fuel=args.fuel)
        )
    verdict = equivalence.weak_bisimilar(ltss[0], ltss[1])
    if args.json:
        print(
            json.dumps(
                {
                    "schema": SCHEMA,
                    "bisimilar": verdict.equivalent,
                    "trace": verdict.formatted_trace() or None,
                }
            )
        )
    else:
        print("BISIMILAR" if verdict.equivalent else "NOT BISIMILAR")
        if not verdict.equivalent:
            for line in verdict.formatted_trace():
                print(f"  {line}")
    return 0 if verdict.equivalent else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="effsess",
        description="Effect-calculus to session-calculus compiler and verifier",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="type-and-effect check a program")
    p_check.add_argument("file")
    p_check.set_defaults(func=cmd_check)

    p_tr = sub.add_parser("translate", help="translate a program to the session calculus")
    p_tr.add_argument("file")
    p_tr.add_argument("--optimize", action="store_true", help="parallelize commuting lets")
    p_tr.set_defaults(func=cmd_translate)

    p_pc = sub.add_parser("pi-check", help="session-check a translated process")
    p_pc.add_argument("file")
    p_pc.set_defaults(func=cmd_pi_check)

    p_run = sub.add_parser("run", help="execute a program against the store agent")
    p_run.add_argument("file")
    p_run.add_argument("--all-schedules", action="store_true")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--fuel", type=int, default=10_000)
    p_run.add_argument("--optimize", action="store_true")
    p_run.add_argument("--send-stop", action="store_true", help="shut the store down cleanly")
    p_run.set_defaults(func=cmd_run)

    p_eq = sub.add_parser("equiv", help="weak bisimilarity of two translated programs")
    p_eq.add_argument("file1")
    p_eq.add_argument("file2")
    p_eq.add_argument("--values", default="0,1", help="finite input domain, e.g. 0,1")
    p_eq.add_argument("--fuel", type=int, default=10_000)
    p_eq.set_defaults(func=cmd_equiv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
