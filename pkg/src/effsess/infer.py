"""Type-and-effect inference for the effect calculus.

Syntax-directed rules: variables are pure, ``let`` composes effects left to
right, and operation/constant signatures come from a registry.  Operation
arguments must be pure (effect identity); ``put``'s argument additionally
must inhabit the declared store type.
"""

from __future__ import annotations

from typing import Callable

from .effects import EffectAnnotation, Get, IDENTITY, Put, STATE_ALGEBRA, format_effect
from .terms import Const, Let, OpApp, Term, ValueType, Var, format_term

TypeEnv = dict[str, ValueType]


class EffectTypeError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


# Signatures are indexed by the declared store type so that get/put stay
# monomorphic at it.  Each entry maps store_type -> (arg, result, effect)
# for operations and store_type -> (type, effect) for constants.  New
# symbols may be registered, but effectful ones also need an embedding
# clause before they can be translated (see `embedding`).
OpSignature = Callable[[ValueType], tuple[ValueType, ValueType, EffectAnnotation]]
ConstSignature = Callable[[ValueType], tuple[ValueType, EffectAnnotation]]

OPERATIONS: dict[str, OpSignature] = {
    "suc": lambda store: (ValueType.NAT, ValueType.NAT, IDENTITY),
    "put": lambda store: (store, ValueType.UNIT, (Put(store),)),
}

CONSTANTS: dict[str, ConstSignature] = {
    "zero": lambda store: (ValueType.NAT, IDENTITY),
    "unit": lambda store: (ValueType.UNIT, IDENTITY),
    "get": lambda store: (store, (Get(store),)),
}


def operation_is_pure(op: str, store_type: ValueType) -> bool:
    return OPERATIONS[op](store_type)[2] == IDENTITY


def constant_is_pure(const: str, store_type: ValueType) -> bool:
    return CONSTANTS[const](store_type)[1] == IDENTITY


def infer(env: TypeEnv, store_type: ValueType, t: Term) -> tuple[ValueType, EffectAnnotation]:
    if isinstance(t, Var):
        if t.name not in env:
            raise EffectTypeError("unbound", f"unbound variable {t.name!r}")
        return env[t.name], IDENTITY
    if isinstance(t, Const):
        if t.const not in CONSTANTS:
            raise EffectTypeError("unknown", f"unknown constant {t.const!r}")
        return CONSTANTS[t.const](store_type)
    if isinstance(t, OpApp):
        if t.op not in OPERATIONS:
            raise EffectTypeError("unknown", f"unknown operation {t.op!r}")
        arg_type, result_type, effect = OPERATIONS[t.op](store_type)
        actual, arg_effect = infer(env, store_type, t.arg)
        if arg_effect != IDENTITY:
            raise EffectTypeError(
                "impure-argument",
                f"argument of {t.op} must be pure, but {format_term(t.arg)} "
                f"has effect {format_effect(arg_effect)}",
            )
        if actual is not arg_type:
            raise EffectTypeError(
                "mismatch",
                f"{t.op} expects a {arg_type} argument, got {actual}",
            )
        return result_type, effect
    if isinstance(t, Let):
        bound_type, f = infer(env, store_type, t.bound)
        g_env = dict(env)
        g_env[t.name] = bound_type
        body_type, g = infer(g_env, store_type, t.body)
        return body_type, STATE_ALGEBRA.combine(f, g)
    raise TypeError(f"not a term: {t!r}")
