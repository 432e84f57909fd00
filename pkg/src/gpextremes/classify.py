"""Case classification: stationary-like (S), Talagrand (T), or transition (P).

Each side of the variance maximum is labelled by the limit of
u^2 * (1 - sigma^2(q(u) t)) as u grows, where q(u) is the correlation scale:
0 means the variance drop is negligible at the informative scale (S),
infinity means it dominates (T), and a finite positive limit b*|t|**alpha is
the transition regime (P), possible only when the drop and the correlation
deficit share their regular-variation index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import regvar
from .errors import ClassificationError, ConfigurationError, DomainError
from .process import ProcessSpec

__all__ = [
    "CaseLabel",
    "InformativeInterval",
    "variance_decay_limit",
    "classify",
    "informative_interval",
]

_NUMERIC_U_SCHEDULE = (1e2, 1e3, 1e4, 1e5)
_ZERO_BAND = 1e-3
_INF_BAND = 1e3
_FINITE_SPREAD = 0.05


@dataclass(frozen=True)
class CaseLabel:
    """Per-side regime labels plus transition coefficients where applicable."""

    left: str
    right: str
    b_minus: Optional[float] = None
    b_plus: Optional[float] = None

    def __post_init__(self):
        for side, lab, b in (("left", self.left, self.b_minus),
                             ("right", self.right, self.b_plus)):
            if lab not in ("S", "T", "P"):
                raise ConfigurationError(f"{side} label must be S, T or P")
            if lab == "P" and not (b is not None and 0 < b < math.inf):
                raise ConfigurationError(
                    f"{side} transition label needs a finite positive coefficient")

    @property
    def case(self) -> str:
        return f"{self.left}-{self.right}"

    def to_dict(self) -> dict:
        d = {"left": self.left, "right": self.right}
        if self.b_minus is not None:
            d["b_minus"] = self.b_minus
        if self.b_plus is not None:
            d["b_plus"] = self.b_plus
        return d


def _closed_form_limit(spec: ProcessSpec, side: str, t_ref: float) -> Optional[float]:
    v = spec.variance.rv_data(side)
    r = spec.correlation.rv_data()
    if v == "tabulated" or r == "tabulated":
        return None
    if v is None:  # constant variance: no drop at all
        return 0.0
    idx_v, c_v, sv_v = v
    alpha, c_r, sv_r = r
    if math.isinf(idx_v) or idx_v > alpha:
        return 0.0
    if idx_v < alpha:
        return math.inf
    # matching power indices: the slowly varying factors decide
    if sv_v.p > sv_r.p:
        return math.inf
    if sv_v.p < sv_r.p:
        return 0.0
    return (c_v / c_r) * abs(t_ref) ** alpha


def variance_decay_limit(spec: ProcessSpec, side: str, t_ref: float) -> float:
    """Limit of u^2 * (1 - sigma^2(q(u) * t_ref)); 0, finite, or math.inf.

    Closed-form profile pairs are decided symbolically by comparing
    regular-variation data.  Tabulated profiles are probed over the u-ladder
    {1e2, 1e3, 1e4, 1e5}; sequences that settle in none of the declared bands
    raise ClassificationError.
    """
    if side not in ("plus", "minus"):
        raise ConfigurationError("side must be 'plus' or 'minus'")
    if t_ref == 0 or (side == "plus") != (t_ref > 0):
        raise DomainError("t_ref must be nonzero with sign matching the side")

    closed = _closed_form_limit(spec, side, t_ref)
    if closed is not None:
        return closed

    vals = []
    for u in _NUMERIC_U_SCHEDULE:
        q = regvar.correlation_scale(spec.correlation, u)
        t = q * t_ref
        if abs(t) > spec.S:
            t = math.copysign(spec.S, t)
        vals.append(u ** 2 * float(spec.variance.one_minus(t)))
    arr = np.array(vals)
    if np.all(arr < _ZERO_BAND):
        return 0.0
    if np.all(arr > _INF_BAND):
        return math.inf
    mean = float(arr.mean())
    if mean > 0 and float(arr.max() - arr.min()) / mean < _FINITE_SPREAD:
        return mean
    raise ClassificationError(
        f"decay limit did not settle over the u-ladder: {vals}")


def _label(limit: float) -> str:
    if limit == 0.0:
        return "S"
    if math.isinf(limit):
        return "T"
    return "P"


def classify(spec: ProcessSpec) -> CaseLabel:
    """Classify both sides of the variance maximum.

    The verdict is evaluated at t_ref = +/-1 in correlation-scale
    coordinates; it is the same for every reference point of the same sign.
    """
    lim_r = variance_decay_limit(spec, "plus", 1.0)
    lim_l = variance_decay_limit(spec, "minus", -1.0)
    return CaseLabel(left=_label(lim_l), right=_label(lim_r),
                     b_minus=lim_l if _label(lim_l) == "P" else None,
                     b_plus=lim_r if _label(lim_r) == "P" else None)


@dataclass(frozen=True)
class InformativeInterval:
    """Interval [T_minus, T_plus] on which the variance drop stays informative."""

    T_minus: float
    T_plus: float
    u: float
    A: float
    clamped_minus: bool = False
    clamped_plus: bool = False

    def to_dict(self) -> dict:
        return {"T_minus": self.T_minus, "T_plus": self.T_plus, "u": self.u,
                "A": self.A, "clamped_minus": self.clamped_minus,
                "clamped_plus": self.clamped_plus}


def informative_interval(spec: ProcessSpec, u: float, A: float = 4.0) -> InformativeInterval:
    """Endpoints of {t : 1 - sigma^2(t) <= u**-2 * log(u)**A} around zero.

    Solved per side by the closed-form root when the profile has one, else by
    bisection on the monotone envelope of the drop.  A threshold exceeding
    the whole drop on a side clamps that endpoint to +/-S with a flag.
    """
    if u < 2:
        raise DomainError("informative interval requires u >= 2")
    if A <= 1:
        raise DomainError("A must exceed 1")
    thr = u ** -2 * math.log(u) ** A
    S = spec.S

    out = {}
    for side, sgn in (("plus", 1.0), ("minus", -1.0)):
        drop_at_edge = float(spec.variance.one_minus(sgn * S))
        if thr >= drop_at_edge:
            out[side] = (S, True)
            continue
        root = spec.variance.one_minus_inverse(thr, side)
        if root is None:
            root = regvar.generalized_inverse(
                lambda x: float(spec.variance.one_minus(sgn * x)), thr, (0.0, S))
        out[side] = (min(root, S), False)

    (tp, cp), (tm, cm) = out["plus"], out["minus"]
    return InformativeInterval(T_minus=-tm, T_plus=tp, u=u, A=A,
                               clamped_minus=cm, clamped_plus=cp)
