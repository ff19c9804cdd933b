"""Shared random generators for the property suites.

Generated models are always valid: deterministic bodies are built from
templates that stay total over the declared supports, and parameterized
probability rows sum to one for every admissible parameter value.
"""

from __future__ import annotations

from itertools import product
from pathlib import Path

import numpy as np

from vce import expr as ex
from vce.model import CPT, Deterministic, FiniteSupport, Model, Parameter, Root, Variable

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


def load_model_text(name: str) -> str:
    return (MODELS_DIR / name).read_text(encoding="utf-8")


def random_probs(rng: np.random.Generator, k: int, allow_zero: bool = False) -> list[float]:
    w = rng.random(k) + 0.05
    if allow_zero and k >= 2 and rng.random() < 0.4:
        dead = rng.choice(k, size=int(rng.integers(1, k)), replace=False)
        w[dead] = 0.0
    total = w.sum()
    return [float(v / total) for v in w]


def random_support(rng: np.random.Generator, size: int, lo: int = -3, hi: int = 12) -> FiniteSupport:
    values = rng.choice(np.arange(lo, hi), size=size, replace=False)
    return FiniteSupport(tuple(sorted(float(v) for v in values)))


def random_effect_model(
    rng: np.random.Generator,
    x_size: int | None = None,
    y_binary: bool = False,
    max_z: int = 2,
) -> tuple[Model, str, str]:
    """A model with conditioning roots Z*, a cause X (root or CPT over Z),
    and a deterministic outcome Y over (X, Z*).  Returns (model, "X", "Y")."""
    variables: list[Variable] = []
    mechanisms: dict[str, object] = {}
    z_names: list[str] = []
    for i in range(int(rng.integers(0, max_z + 1))):
        name = f"Z{i}"
        support = random_support(rng, int(rng.integers(2, 4)), lo=0, hi=8)
        variables.append(Variable(name, support))
        mechanisms[name] = Root(dict(zip(support.values, random_probs(rng, len(support)))))
        z_names.append(name)

    if x_size is None:
        x_size = int(rng.choice([2, 2, 3, 3, 4, 5, 6, 8, 10]))
    x_support = random_support(rng, x_size)
    variables.append(Variable("X", x_support))
    if z_names and rng.random() < 0.5:
        rows = {}
        for key in product(*(v.support.values for v in variables[: len(z_names)])):
            rows[key] = dict(zip(x_support.values, random_probs(rng, x_size, allow_zero=True)))
        mechanisms["X"] = CPT(tuple(z_names), rows)
    else:
        mechanisms["X"] = Root(
            dict(zip(x_support.values, random_probs(rng, x_size, allow_zero=True)))
        )

    if y_binary:
        y_support = FiniteSupport((0.0, 1.0))
    else:
        y_values = rng.choice(np.linspace(-3, 3, 13), size=int(rng.integers(2, 5)), replace=False)
        y_support = FiniteSupport(tuple(sorted(float(v) for v in y_values)))
    variables.append(Variable("Y", y_support))
    parents = ("X",) + tuple(z_names)
    spaces = [x_support.values] + [mechanisms_support(variables, z) for z in z_names]
    table = {
        key: float(rng.choice(y_support.values)) for key in product(*spaces)
    }
    mechanisms["Y"] = Deterministic(parents, table=table)
    return Model(tuple(variables), mechanisms), "X", "Y"


def mechanisms_support(variables: list[Variable], name: str) -> tuple[float, ...]:
    for v in variables:
        if v.name == name:
            return v.support.values
    raise KeyError(name)


# --- random DSL models (round-trip fuzz) -----------------------------------


def _random_condition(rng: np.random.Generator, parents: list[Variable], depth: int = 0) -> ex.Expr:
    if depth < 2 and rng.random() < 0.4:
        kind = rng.choice(["and", "or", "not", "xor"])
        a = _random_condition(rng, parents, depth + 1)
        if kind == "not":
            return ex.Unary("not", a)
        b = _random_condition(rng, parents, depth + 1)
        if kind == "xor":
            return ex.Call("xor", (a, b))
        return ex.Binary(str(kind), a, b)
    p = parents[int(rng.integers(0, len(parents)))]
    op = str(rng.choice(["==", "!=", "<", "<=", ">", ">="]))
    threshold = float(rng.choice(p.support.values))
    return ex.Binary(op, ex.Name(p.name), ex.Num(threshold))


def _random_body(rng: np.random.Generator, parents: list[Variable], support: FiniteSupport) -> ex.Expr:
    lo = ex.Num(float(support.values[0]))
    hi = ex.Num(float(support.values[-1]))
    if not parents or rng.random() < 0.2:
        return ex.Num(float(rng.choice(support.values)))
    return ex.IfElse(_random_condition(rng, parents), hi, lo)


def _random_prob_entries(
    rng: np.random.Generator, values: tuple[float, ...], params: list[Parameter]
) -> dict[float, object]:
    if not params or rng.random() < 0.6:
        return dict(zip(values, random_probs(rng, len(values))))
    p = ex.Name(params[int(rng.integers(0, len(params)))].name)
    scale = round(float(rng.uniform(0.1, 1.0)), 3)
    head = ex.Binary("*", ex.Num(scale), p)  # in [0, scale] for p in [0, 1]
    remainder = ex.Binary("-", ex.Num(1.0), head)
    entries: dict[float, object] = {values[0]: head}
    if len(values) == 2:
        entries[values[1]] = remainder
        return entries
    rest = random_probs(rng, len(values) - 1)
    for v, w in zip(values[1:], rest):
        entries[v] = ex.Binary("*", remainder, ex.Num(w))
    return entries


def random_dsl_model(rng: np.random.Generator) -> Model:
    params: list[Parameter] = []
    if rng.random() < 0.4:
        params.append(Parameter("p", 0.0, 1.0))
    n = int(rng.integers(1, 6))
    variables: list[Variable] = []
    mechanisms: dict[str, object] = {}
    for i in range(n):
        name = f"V{i}"
        support = random_support(rng, int(rng.integers(2, 5)), lo=-2, hi=9)
        kind = rng.choice(["root", "cpt", "def", "fun"]) if variables else "root"
        if kind == "root":
            mechanisms[name] = Root(_random_prob_entries(rng, support.values, params))
        elif kind == "cpt":
            k = int(rng.integers(1, min(2, len(variables)) + 1))
            idx = rng.choice(len(variables), size=k, replace=False)
            parents = tuple(variables[j].name for j in sorted(idx))
            rows = {}
            for key in product(*(variables[j].support.values for j in sorted(idx))):
                rows[key] = _random_prob_entries(rng, support.values, params)
            mechanisms[name] = CPT(parents, rows)
        elif kind == "def":
            k = int(rng.integers(1, min(2, len(variables)) + 1))
            idx = sorted(rng.choice(len(variables), size=k, replace=False))
            chosen = [variables[j] for j in idx]
            body = _random_body(rng, chosen, support)
            referenced = ex.free_names(body)
            parents = tuple(v.name for v in variables if v.name in referenced)
            mechanisms[name] = Deterministic(parents, body=body)
        else:
            k = int(rng.integers(1, min(2, len(variables)) + 1))
            idx = sorted(rng.choice(len(variables), size=k, replace=False))
            parents = tuple(variables[j].name for j in idx)
            table = {}
            for key in product(*(variables[j].support.values for j in idx)):
                table[key] = float(rng.choice(support.values))
            mechanisms[name] = Deterministic(parents, table=table)
        variables.append(Variable(name, support))
    return Model(tuple(variables), mechanisms, tuple(params))


# --- random expressions paired with an independent Python oracle ------------


def random_paired_expr(rng: np.random.Generator, names: list[str], depth: int = 0):
    """Build (ast, python_fn) pairs bottom-up; the closure never touches the
    package evaluator, so agreement is a real two-implementation check."""

    def num():
        v = round(float(rng.uniform(-4, 4)), 3)
        return ex.Num(v), (lambda env, v=v: v)

    def name():
        n = names[int(rng.integers(0, len(names)))]
        return ex.Name(n), (lambda env, n=n: env[n])

    def boolean(d):
        roll = rng.random()
        if d >= 3 or roll < 0.45:
            op = str(rng.choice(["==", "!=", "<", "<=", ">", ">="]))
            a, fa = numeric(d + 1)
            b, fb = numeric(d + 1)
            table = {
                "==": lambda x, y: float(x == y),
                "!=": lambda x, y: float(x != y),
                "<": lambda x, y: float(x < y),
                "<=": lambda x, y: float(x <= y),
                ">": lambda x, y: float(x > y),
                ">=": lambda x, y: float(x >= y),
            }
            fn = table[op]
            return ex.Binary(op, a, b), (lambda env, fa=fa, fb=fb, fn=fn: fn(fa(env), fb(env)))
        if roll < 0.6:
            a, fa = boolean(d + 1)
            return ex.Unary("not", a), (lambda env, fa=fa: 1.0 - fa(env))
        if roll < 0.8:
            op = str(rng.choice(["and", "or"]))
            a, fa = boolean(d + 1)
            b, fb = boolean(d + 1)
            if op == "and":
                return ex.Binary("and", a, b), (
                    lambda env, fa=fa, fb=fb: float(bool(fa(env)) and bool(fb(env)))
                )
            return ex.Binary("or", a, b), (
                lambda env, fa=fa, fb=fb: float(bool(fa(env)) or bool(fb(env)))
            )
        a, fa = boolean(d + 1)
        b, fb = boolean(d + 1)
        return ex.Call("xor", (a, b)), (
            lambda env, fa=fa, fb=fb: float(bool(fa(env)) != bool(fb(env)))
        )

    def numeric(d):
        roll = rng.random()
        if d >= 3 or roll < 0.3:
            return num() if rng.random() < 0.5 else name()
        if roll < 0.65:
            op = str(rng.choice(["+", "-", "*"]))
            a, fa = numeric(d + 1)
            b, fb = numeric(d + 1)
            table = {
                "+": lambda x, y: x + y,
                "-": lambda x, y: x - y,
                "*": lambda x, y: x * y,
            }
            fn = table[op]
            return ex.Binary(op, a, b), (lambda env, fa=fa, fb=fb, fn=fn: fn(fa(env), fb(env)))
        if roll < 0.75:
            a, fa = numeric(d + 1)
            return ex.Unary("-", a) if not isinstance(a, ex.Num) else ex.Num(-a.value), (
                lambda env, fa=fa: -fa(env)
            )
        if roll < 0.85:
            return boolean(d)
        c, fc = boolean(d + 1)
        a, fa = numeric(d + 1)
        b, fb = numeric(d + 1)
        return ex.IfElse(c, a, b), (
            lambda env, fc=fc, fa=fa, fb=fb: fa(env) if bool(fc(env)) else fb(env)
        )

    return numeric(depth)
