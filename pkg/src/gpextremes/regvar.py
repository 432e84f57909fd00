"""Regular-variation utilities.

Generalized (left-continuous) inverses of nondecreasing envelopes, the
correlation time scale at a given threshold level, numeric de Bruijn
conjugates of slowly varying factors, and a log-log index probe used as a
diagnostic against declared indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BracketError, ConfigurationError, DomainError

__all__ = [
    "SlowlyVarying",
    "RegVarFunction",
    "generalized_inverse",
    "correlation_scale",
    "debruijn_conjugate",
    "index_probe",
    "IndexProbe",
]


@dataclass(frozen=True)
class SlowlyVarying:
    """Named slowly varying factor ell(x) = c * log(1/x)**p on (0, 1).

    p = 0 gives the constant factor c; negative p covers inverse-log decay.
    The whole family is self-neglecting, so its de Bruijn conjugate is
    asymptotically 1/ell.
    """

    c: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        if not (self.c > 0):
            raise ConfigurationError("slowly varying coefficient must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("slowly varying factor defined on (0, 1)")
        if self.p == 0:
            out = np.full_like(x, self.c)
        else:
            if np.any(x >= 1):
                raise DomainError("log-power factor requires x < 1")
            out = self.c * np.log(1.0 / x) ** self.p
        return out if out.ndim else float(out)

    @property
    def is_constant(self) -> bool:
        return self.p == 0

    def conjugate(self, x: float) -> float:
        """Asymptotic de Bruijn conjugate 1/ell(x), exact for constants."""
        return 1.0 / self(x)

    def to_dict(self) -> dict:
        return {"c": self.c, "p": self.p}

    @classmethod
    def from_dict(cls, d: dict) -> "SlowlyVarying":
        return cls(c=float(d.get("c", 1.0)), p=float(d.get("p", 0.0)))


@dataclass(frozen=True)
class RegVarFunction:
    """A nonnegative function on (0, x_max] with declared regular-variation data.

    ``index`` is the declared power index at zero; ``slowly_varying`` the
    declared correction factor, or None when unknown.
    """

    fn: Callable[[float], float]
    index: float
    slowly_varying: Optional[SlowlyVarying] = None
    x_max: float = 1.0

    def __call__(self, x):
        return self.fn(x)


def _as_callable(g):
    return g.fn if isinstance(g, RegVarFunction) else g


def generalized_inverse(g, y: float, bracket: tuple[float, float],
                        rel_tol: float = 1e-12, scan: int = 2048,
                        assume_monotone: bool = False) -> float:
    """Left-continuous generalized inverse inf{x : g(x) >= y} on a bracket.

    The inverse is taken through the running-maximum envelope of g, so mildly
    non-monotone inputs (tabulated data, log-corrected power laws past their
    hump) are inverted where their envelope first reaches y.
    """
    fn = _as_callable(g)
    lo, hi = bracket
    if not (y > 0):
        raise BracketError("target level must be positive")
    if not (hi > lo >= 0):
        raise BracketError(f"invalid bracket {bracket}")

    lo_eff = lo
    if lo_eff == 0.0:
        # walk down geometrically until g < y, or give up at underflow scale
        lo_eff = hi
        for _ in range(300):
            lo_eff *= 0.125
            if lo_eff < 1e-300:
                return 0.0
            if fn(lo_eff) < y:
                break
        else:
            return 0.0
    elif fn(lo_eff) >= y:
        return lo_eff

    if assume_monotone:
        a, b = lo_eff, hi
        if fn(b) < y:
            raise BracketError("g does not reach the target level on the bracket")
    else:
        xs = np.geomspace(lo_eff, hi, scan)
        vals = np.array([fn(x) for x in xs])
        env = np.maximum.accumulate(vals)
        idx = np.searchsorted(env >= y, True)
        if idx >= len(xs):
            raise BracketError("g does not reach the target level on the bracket")
        if idx == 0:
            return xs[0]
        a, b = xs[idx - 1], xs[idx]

    # bisect the first-crossing cell
    for _ in range(200):
        if (b - a) <= rel_tol * max(abs(b), 1e-300):
            break
        m = 0.5 * (a + b)
        if fn(m) >= y:
            b = m
        else:
            a = m
    return b


def correlation_scale(corr, u: float) -> float:
    """Time lag at which the correlation deficit 1 - rho reaches 1/u**2.

    This is the generalized inverse of 1 - rho at level u**-2: the natural
    discretization scale for exceedance asymptotics.  Closed-form correlation
    profiles invert exactly; tabulated ones go through envelope bisection.
    ``corr`` must expose one_minus(lag), lag_max and (optionally) scale_at(u).
    """
    if u < 2:
        raise DomainError("correlation_scale requires u >= 2")
    y = u ** -2
    exact = corr.scale_at(u) if hasattr(corr, "scale_at") else None
    if exact is not None:
        return exact
    return generalized_inverse(corr.one_minus, y, (0.0, corr.lag_max))


def debruijn_conjugate(ell, x: float, check_tol: float = 1e-2) -> float:
    """de Bruijn conjugate ell#(x) of a slowly varying factor at small x.

    Named log-power factors are self-neglecting, so 1/ell(x) is returned for
    them directly.  For a bare callable the self-neglect ratio
    ell(x*ell(x))/ell(x) is probed at x; if it is within ``check_tol`` of 1
    the 1/ell route is used, otherwise the conjugate is computed implicitly
    as t*/x where t* solves t*ell(t) = x, which satisfies the defining
    relation ell#(x) * ell(x * ell#(x)) = 1 exactly.
    """
    if not (0 < x < 1):
        raise DomainError("conjugate evaluated for x in (0, 1)")
    if isinstance(ell, SlowlyVarying):
        return ell.conjugate(x)
    fn = _as_callable(ell)
    lx = fn(x)
    arg = x * lx
    if 0 < arg < 1:
        ratio = fn(arg) / lx
        if abs(ratio - 1.0) <= check_tol:
            return 1.0 / lx
    # implicit route: invert t * ell(t) = x
    t_guess = x / lx
    lo = max(t_guess * 1e-8, 1e-300)
    hi = min(1.0 - 1e-12, max(t_guess * 1e8, x))
    t_star = generalized_inverse(lambda t: t * fn(t), x, (lo, hi))
    return t_star / x


@dataclass(frozen=True)
class IndexProbe:
    """Result of a log-log regression index estimate over a scale ladder."""

    index: float
    local_slopes: tuple[float, ...]
    drift: float
    flag: Optional[str]


def index_probe(g, scales) -> IndexProbe:
    """Estimate the regular-variation index of g by log-log regression.

    ``scales`` must descend toward zero (at least 4 values).  The spread of
    the local slopes between consecutive scales is used to flag slowly
    varying contamination (mild drift) or absence of a finite index
    (exploding slopes).  Diagnostic only; declared indices stay authoritative.
    """
    fn = _as_callable(g)
    scales = np.asarray(list(scales), dtype=float)
    if len(scales) < 4:
        raise ConfigurationError("need at least 4 scales")
    if not np.all(np.diff(scales) < 0) or np.any(scales <= 0):
        raise ConfigurationError("scales must descend toward 0")
    vals = np.array([fn(s) for s in scales], dtype=float)
    if np.any(vals <= 0):
        raise DomainError("g must be positive at every probe scale")
    lx, ly = np.log(scales), np.log(vals)
    slope = np.polyfit(lx, ly, 1)[0]
    local = np.diff(ly) / np.diff(lx)
    drift = float(local.max() - local.min())
    if drift >= 5.0 or abs(slope) > 100.0:
        flag = "not-regularly-varying"
    elif drift >= 0.05:
        flag = "slowly-varying-contaminated"
    else:
        flag = None
    return IndexProbe(index=float(slope), local_slopes=tuple(local), drift=drift,
                      flag=flag)
