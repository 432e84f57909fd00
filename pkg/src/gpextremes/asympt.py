"""Asymptotic exceedance formulas and the per-case dispatcher.

All formulas share the skeleton  constant * weight(u) * tail(u), where
tail(u) is the standard normal upper tail.  Because tail(u) underflows
double precision near u ~ 38 while the acceptance checks go to u = 1e4,
every result carries both value (possibly 0.0 by underflow) and log_value
(always finite); ratios of results should be formed in log space.

Formula map (per side labels from the classifier):
  S-S                 constant * (L_plus + L_minus)(u^2) / q(u) * tail(u)
  one S side          same with only that side's transform
  T-T                 tail(u)
  P-P                 two-sided transition constant * tail(u)
  T-P / P-T           one-sided transition constant * tail(u)
  stationary          mes(E) * constant / q(u) * tail(u)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from . import rearrange, regvar
from .classify import CaseLabel, classify
from .errors import ConfigurationError, DomainError
from .pickands import ConstantEstimate
from .process import CorrelationProfile, ProcessSpec
from .regvar import SlowlyVarying

__all__ = [
    "gaussian_tail",
    "log_gaussian_tail",
    "AsymptoticResult",
    "ConstantsBundle",
    "stationary_asymptotic",
    "stationary_like_asymptotic",
    "regvar_closed_form",
    "talagrand_asymptotic",
    "transition_asymptotic",
    "evaluate",
]

_TWO_SIDED_CAUTION = ("two-sided probabilities are not the sum of one-sided "
                      "ones in the Talagrand and transition regimes")


def gaussian_tail(u: float) -> float:
    """Standard normal upper tail P(N(0,1) > u), relative accuracy ~1e-15.

    Underflows to 0.0 for u beyond ~38; use log_gaussian_tail there.
    """
    if not math.isfinite(u):
        raise DomainError("u must be finite")
    return float(special.ndtr(-u))


def log_gaussian_tail(u: float) -> float:
    """log of the standard normal upper tail, finite for every u.

    Computed as log(0.5 * erfcx(u/sqrt(2))) - u^2/2, which stays fully
    accurate far past the underflow point of the tail itself.
    """
    if not math.isfinite(u):
        raise DomainError("u must be finite")
    if u < 0:
        return math.log(special.ndtr(-u))
    return math.log(0.5 * special.erfcx(u / math.sqrt(2.0))) - 0.5 * u * u


@dataclass(frozen=True)
class AsymptoticResult:
    """Value of one asymptotic formula at level u, with its ingredients.

    ``ingredients`` maps names (q_u, psi_u, constant, L_plus, ...) to
    (value, provenance) pairs; provenance is closed-form, simulated,
    quadrature or table.
    """

    formula_id: str
    u: float
    value: float
    log_value: float
    ingredients: dict
    notes: tuple = ()

    def __post_init__(self):
        # every formula dominates the single-point tail bound
        if self.log_value < log_gaussian_tail(self.u) - 1e-9:
            raise ConfigurationError(
                f"{self.formula_id} value fell below the single-point lower bound")

    def to_dict(self) -> dict:
        return {"formula_id": self.formula_id, "u": self.u, "value": self.value,
                "log_value": self.log_value,
                "ingredients": {k: {"value": v, "provenance": p}
                                for k, (v, p) in self.ingredients.items()},
                "notes": list(self.notes)}


def _finish(formula_id, u, log_factor, ingredients, notes=()) -> AsymptoticResult:
    log_value = log_factor + log_gaussian_tail(u)
    value = math.exp(log_value) if log_value > -708 else 0.0
    ingredients = dict(ingredients)
    ingredients["psi_u"] = (gaussian_tail(u), "closed-form")
    return AsymptoticResult(formula_id=formula_id, u=u, value=value,
                            log_value=log_value, ingredients=ingredients,
                            notes=tuple(notes))


@dataclass(frozen=True)
class ConstantsBundle:
    """Limit-process constants required by the dispatcher.

    ``pickands`` feeds the stationary-like formulas; the transition
    constants feed the P cases, and must carry the drift coefficients the
    classifier found.
    """

    pickands: Optional[ConstantEstimate] = None
    transition_one_sided: Optional[ConstantEstimate] = None
    transition_two_sided: Optional[ConstantEstimate] = None

    def require_pickands(self, alpha: float) -> ConstantEstimate:
        if self.pickands is None:
            raise ConfigurationError("this case needs a Pickands-type constant")
        if abs(self.pickands.alpha - alpha) > 1e-9:
            raise ConfigurationError(
                f"constant simulated at alpha={self.pickands.alpha}, "
                f"spec declares alpha={alpha}")
        return self.pickands

    def require_transition(self, alpha: float, two_sided: bool,
                           b_plus=None, b_minus=None) -> ConstantEstimate:
        est = self.transition_two_sided if two_sided else self.transition_one_sided
        if est is None:
            raise ConfigurationError("this case needs a transition constant")
        if abs(est.alpha - alpha) > 1e-9:
            raise ConfigurationError("transition constant alpha mismatch")
        for want, got, name in ((b_plus, est.b_plus, "b_plus"),
                                (b_minus, est.b_minus, "b_minus")):
            if want is not None:
                if got is None or not math.isclose(want, got, rel_tol=1e-6):
                    raise ConfigurationError(
                        f"transition constant simulated at {name}={got}, "
                        f"classifier found {want}")
        return est


def stationary_asymptotic(corr: CorrelationProfile, mes_E: float, u: float,
                          constant: ConstantEstimate) -> AsymptoticResult:
    """Stationary exceedance: mes(E) * constant * tail(u) / q(u)."""
    if not (mes_E > 0):
        raise ConfigurationError("mes_E must be positive")
    if corr.form != "tabulated" and abs(constant.alpha - corr.alpha) > 1e-9:
        raise ConfigurationError("constant alpha does not match the correlation")
    q = regvar.correlation_scale(corr, u)
    log_factor = math.log(mes_E) + math.log(constant.value) - math.log(q)
    ing = {"q_u": (q, "closed-form" if corr.scale_at(u) is not None else "bisection"),
           "constant": (constant.value, constant.method),
           "mes_E": (mes_E, "closed-form")}
    return _finish("stationary", u, log_factor, ing)


_SIDE_MAP = {"right": ("plus",), "left": ("minus",), "both": ("plus", "minus")}


def stationary_like_asymptotic(spec: ProcessSpec, u: float,
                               constant: ConstantEstimate, sides: str = "both",
                               A: float = 4.0,
                               grid_size: int = 2 ** 14) -> AsymptoticResult:
    """Stationary-like exceedance through the occupation-measure transform.

    value = constant * sum_sides L_side(u^2) * tail(u) / q(u), with L the
    Laplace transform of the occupation CDF of the half variance drop,
    truncated at the informative level.  Requires every requested side to
    classify as S.
    """
    if sides not in _SIDE_MAP:
        raise ConfigurationError("sides must be 'left', 'right' or 'both'")
    label = classify(spec)
    for side in _SIDE_MAP[sides]:
        lab = label.right if side == "plus" else label.left
        if lab != "S":
            raise ConfigurationError(
                f"side {side} classifies as {lab}, not S; wrong formula")
    constant = ConstantsBundle(pickands=constant).require_pickands(
        spec.correlation.alpha)
    x_cut = rearrange.default_cut(u, A)
    q = regvar.correlation_scale(spec.correlation, u)
    lam = u * u
    ing = {"q_u": (q, "closed-form" if spec.correlation.scale_at(u) is not None
                   else "bisection"),
           "constant": (constant.value, constant.method)}
    total = 0.0
    for side in _SIDE_MAP[sides]:
        cdf = rearrange.occupation_cdf(spec, side, x_cut, grid_size)
        L = rearrange.laplace_transform(cdf, lam)
        ing[f"L_{side}"] = (L, cdf.kind)
        ing[f"L_{side}_tail_bound"] = (rearrange.truncation_tail_bound(cdf, lam),
                                       "closed-form")
        total += L
    log_factor = math.log(constant.value) + math.log(total) - math.log(q)
    fid = "SS" if sides == "both" else "S-one-side"
    return _finish(fid, u, log_factor, ing)


def regvar_closed_form(spec: ProcessSpec, u: float, constant: ConstantEstimate,
                       a_plus: float, a_minus: Optional[float] = None,
                       ell_plus: Optional[SlowlyVarying] = None,
                       ell_minus: Optional[SlowlyVarying] = None,
                       sides: str = "both") -> AsymptoticResult:
    """Closed form for regularly varying occupation CDFs F(x) ~ ell(x) x^a.

    value = constant * sum_sides Gamma(1+a) u^{-2a} ell(u^-2) * tail(u)/q(u):
    the Tauberian image of the occupation transform, used as the closed-form
    cross-check of the numeric stationary-like route.  Requires a <= 1/alpha.
    """
    if sides not in _SIDE_MAP:
        raise ConfigurationError("sides must be 'left', 'right' or 'both'")
    alpha = spec.correlation.alpha
    params = {"plus": (a_plus, ell_plus or SlowlyVarying()),
              "minus": (a_plus if a_minus is None else a_minus,
                        ell_minus or ell_plus or SlowlyVarying())}
    for side in _SIDE_MAP[sides]:
        a, _ = params[side]
        if a > 1.0 / alpha + 1e-12:
            raise ConfigurationError(
                f"occupation index a={a} exceeds 1/alpha={1/alpha}: "
                "regular-variation closed form does not apply")
    q = regvar.correlation_scale(spec.correlation, u)
    x = u ** -2
    total = 0.0
    ing = {"q_u": (q, "closed-form" if spec.correlation.scale_at(u) is not None
                   else "bisection"),
           "constant": (constant.value, constant.method)}
    for side in _SIDE_MAP[sides]:
        a, ell = params[side]
        term = math.gamma(1.0 + a) * x ** a * float(ell(x))
        ing[f"L_{side}"] = (term, "closed-form")
        total += term
    log_factor = math.log(constant.value) + math.log(total) - math.log(q)
    return _finish("rv-closed-form", u, log_factor, ing)


def talagrand_asymptotic(u: float) -> AsymptoticResult:
    """Talagrand regime: the exceedance collapses to the single-point tail.

    One-sided and two-sided agree exactly, and no domain length enters.
    """
    return _finish("TT", u, 0.0, {})


def transition_asymptotic(u: float, constant: ConstantEstimate,
                          sides: str = "both") -> AsymptoticResult:
    """Transition regime: constant * tail(u) with a transition constant."""
    want = "transition" if sides == "both" else "transition_one_sided"
    if constant.kind not in (want,):
        raise ConfigurationError(
            f"transition formula for sides={sides!r} needs a {want} constant, "
            f"got {constant.kind}")
    log_factor = math.log(constant.value)
    ing = {"constant": (constant.value, constant.method)}
    return _finish("PP" if sides == "both" else "P-one-side", u, log_factor, ing,
                   notes=(_TWO_SIDED_CAUTION,))


def evaluate(spec: ProcessSpec, u: float, constants: ConstantsBundle,
             A: float = 4.0, grid_size: int = 2 ** 14) -> AsymptoticResult:
    """Route a classified spec to its asymptotic formula.

    S-S takes the two-sided occupation form; any case with exactly one S
    side keeps only that side's contribution (the other side enters at lower
    order); T-T is the bare tail; P-P takes the two-sided transition
    constant; T-P and P-T take the one-sided transition constant of the P
    side.  A constant variance profile short-circuits to the stationary
    formula on [-S, S].
    """
    if spec.correlation.form == "tabulated":
        raise ConfigurationError(
            "tabulated correlations carry no declared index; "
            "asymptotic dispatch needs a closed-form correlation")
    alpha = spec.correlation.alpha
    if spec.variance.form == "constant":
        return stationary_asymptotic(spec.correlation, 2.0 * spec.S, u,
                                     constants.require_pickands(alpha))

    label = classify(spec)
    case = label.case
    if case == "S-S":
        return stationary_like_asymptotic(spec, u, constants.require_pickands(alpha),
                                          "both", A, grid_size)
    if "S" in case:
        side = "right" if label.right == "S" else "left"
        res = stationary_like_asymptotic(spec, u, constants.require_pickands(alpha),
                                         side, A, grid_size)
        ing = dict(res.ingredients)
        ing.pop("psi_u")
        return _finish(f"mixed-{case}", u,
                       res.log_value - log_gaussian_tail(u), ing,
                       notes=(f"non-S side ({'left' if side == 'right' else 'right'}) "
                              "contributes at lower order",))
    if case == "T-T":
        return talagrand_asymptotic(u)
    if case == "P-P":
        est = constants.require_transition(alpha, True, b_plus=label.b_plus,
                                           b_minus=label.b_minus)
        return transition_asymptotic(u, est, "both")
    # mixed T-P / P-T: one-sided constant of the P side
    b = label.b_plus if label.right == "P" else label.b_minus
    est = constants.require_transition(alpha, False, b_plus=b)
    res = transition_asymptotic(u, est, "right")
    return _finish(f"mixed-{case}", u, res.log_value - log_gaussian_tail(u),
                   {k: v for k, v in res.ingredients.items() if k != "psi_u"},
                   notes=res.notes)
