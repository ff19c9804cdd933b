"""Comparison measures: Neyman-Rubin/Pearl effects, post-cutting causal
strength, mutual-information strengths, and inverse probability weighting.
"""

from __future__ import annotations

import math
from itertools import product
from typing import Iterable, Mapping, Sequence

from .counterfactual import configurations, propagate
from .engine import (
    build_joint,
    conditional_mutual_information,
    expectation,
    expectation_under,
    intervene,
    local_distribution,
    marginal,
    mutual_information,
)
from .errors import PositivityError, QueryError
from .estimation import Dataset
from .model import CPT, Deterministic, Model
from .variational import cpt_to_noise

ArrowSet = frozenset[tuple[str, str]]


def ace(model: Model, cause: str, x0: float, x1: float, outcome: str) -> float:
    """Average causal effect E(Y|do(X=x1)) - E(Y|do(X=x0))."""
    return expectation_under(model, outcome, {cause: x1}) - expectation_under(
        model, outcome, {cause: x0}
    )


def cace(
    model: Model,
    cause: str,
    x0: float,
    x1: float,
    outcome: str,
    covariates: Mapping[str, float],
) -> float:
    """Conditional ACE: interventional means conditioned on a covariate event."""
    hi = expectation(build_joint(intervene(model, {cause: x1})), outcome, covariates)
    lo = expectation(build_joint(intervene(model, {cause: x0})), outcome, covariates)
    return hi - lo


def acde(
    model: Model,
    cause: str,
    x0: float,
    x1: float,
    outcome: str,
    controlled: Sequence[str],
) -> float:
    """Controlled direct effect, averaging the per-assignment contrast of
    do(X=x1, m) vs do(X=x0, m) over the controlled set's observational law."""
    overlap = set(controlled) & {cause, outcome}
    if overlap:
        raise QueryError(f"controlled set must exclude {sorted(overlap)}")
    if not controlled:
        return ace(model, cause, x0, x1, outcome)
    mdist = marginal(build_joint(model), list(controlled))
    total = 0.0
    for m_key, pm in mdist.items():
        if pm <= 0.0:
            continue
        do = dict(zip(controlled, m_key))
        do_hi = dict(do, **{cause: x1})
        do_lo = dict(do, **{cause: x0})
        total += pm * (
            expectation_under(model, outcome, do_hi)
            - expectation_under(model, outcome, do_lo)
        )
    return total


def _functionalize(model: Model, names: Iterable[str]) -> Model:
    """cpt_to_noise each named CPT node so potential outcomes propagate."""
    out = model
    for name in names:
        mech = out.mechanisms.get(name)
        if mech is None:
            raise QueryError(f"unknown variable '{name}'")
        if isinstance(mech, CPT):
            out = cpt_to_noise(out, name)
    return out


def ande(
    model: Model,
    cause: str,
    x0: float,
    x1: float,
    outcome: str,
    mediators: Sequence[str],
) -> float:
    """Natural direct effect E[Y(x1, M(x0)) - Y(x0, M(x0))].

    Needs functional propagation into the outcome and the mediators;
    binary CPT nodes among them are auto-rewritten as function plus noise.
    Remaining stochastic nodes act as latent context, enumerated exactly and
    held fixed across both potential worlds.
    """
    if cause in mediators or outcome in mediators:
        raise QueryError("mediators must exclude the cause and the outcome")
    model = _functionalize(model, [outcome, *mediators])
    if not isinstance(model.mechanisms[outcome], Deterministic):
        raise QueryError(f"outcome '{outcome}' is stochastic and not convertible")
    for m in mediators:
        if isinstance(model.mechanisms[m], CPT):
            raise QueryError(f"mediator '{m}' is stochastic and not convertible")
    total = 0.0
    for config, prior in configurations(model):
        baseline = propagate(model, config, {cause: x0})
        pinned = {m: baseline[m] for m in mediators}
        y1 = propagate(model, config, dict(pinned, **{cause: x1}))[outcome]
        y0 = propagate(model, config, dict(pinned, **{cause: x0}))[outcome]
        total += prior * (y1 - y0)
    return total


def janzing_strength(
    model: Model, arrows: Iterable[tuple[str, str]], base: float = 2.0
) -> float:
    """Post-cutting causal strength D_KL(P || P_S).

    Cut arrows feed their targets with the independent product of the
    sources' observational marginals; everything else stays intact.
    """
    arrow_set = frozenset((str(s), str(t)) for s, t in arrows)
    for src, tgt in arrow_set:
        if src not in model.parents(tgt):
            raise QueryError(f"({src} -> {tgt}) is not an edge of the model")
    joint = build_joint(model)
    targets = {tgt for _, tgt in arrow_set}
    cut_sources = {
        tgt: tuple(p for p in model.parents(tgt) if (p, tgt) in arrow_set) for tgt in targets
    }
    source_marginals = {src: marginal(joint, [src]) for src, _ in arrow_set}

    names = tuple(v.name for v in model.variables)
    post = {}
    for key, p in joint.entries.items():
        if p <= 0.0:
            continue
        assignment = dict(zip(names, key))
        q = 1.0
        for name in names:
            value = assignment[name]
            parents = model.parents(name)
            if name not in cut_sources:
                q *= local_distribution(model, name, assignment)[value]
                continue
            cut = cut_sources[name]
            mixed = 0.0
            for alpha in product(*(model.support(s).values for s in cut)):
                weight_alpha = 1.0
                for s, a in zip(cut, alpha):
                    weight_alpha *= source_marginals[s].probability((a,))
                if weight_alpha <= 0.0:
                    continue
                fed = dict(assignment)
                fed.update(zip(cut, alpha))
                mixed += local_distribution(model, name, fed)[value] * weight_alpha
            q *= mixed
        post[key] = q
    scale = math.log(2.0) / math.log(base) if base != 2.0 else 1.0
    total = 0.0
    for key, p in joint.entries.items():
        if p <= 0.0:
            continue
        total += p * math.log2(p / post[key])
    return total * scale


def mi_strength(model: Model, cause: str, outcome: str) -> float:
    """I(X;Y) in bits; X must be a parent of Y."""
    if cause not in model.parents(outcome):
        raise QueryError(f"'{cause}' is not a parent of '{outcome}'")
    return mutual_information(build_joint(model), cause, outcome)


def cmi_strength(model: Model, cause: str, outcome: str) -> float:
    """I(X;Y | other parents of Y) in bits."""
    if cause not in model.parents(outcome):
        raise QueryError(f"'{cause}' is not a parent of '{outcome}'")
    others = [p for p in model.parents(outcome) if p != cause]
    return conditional_mutual_information(build_joint(model), cause, outcome, others)


def ipwe(
    dataset: Dataset,
    treatment: str,
    s: float,
    outcome: str,
    covariates: Sequence[str],
) -> float:
    """Inverse probability weighting estimate of E(Y(s)).

    Propensities are empirical conditional frequencies over exact covariate
    strata; a zero propensity on a contributing record is a positivity error.
    """
    ti = dataset.column_index(treatment)
    yi = dataset.column_index(outcome)
    ci = [dataset.column_index(c) for c in covariates]
    stratum_n: dict[tuple[float, ...], int] = {}
    stratum_s: dict[tuple[float, ...], int] = {}
    for row in dataset.rows:
        key = tuple(row[i] for i in ci)
        stratum_n[key] = stratum_n.get(key, 0) + 1
        if row[ti] == s:
            stratum_s[key] = stratum_s.get(key, 0) + 1
    total = 0.0
    for row in dataset.rows:
        if row[ti] != s:
            continue
        key = tuple(row[i] for i in ci)
        propensity = stratum_s.get(key, 0) / stratum_n[key]
        if propensity <= 0.0:
            raise PositivityError(f"zero estimated propensity in stratum {key}")
        total += row[yi] / propensity
    return total / len(dataset)
