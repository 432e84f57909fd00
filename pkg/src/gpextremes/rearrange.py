"""Occupation measures, monotone rearrangements, and their Laplace transforms.

For the half variance drop f(t) = (1 - sigma^2(t))/2 on one side of the
maximum, the occupation distribution F(x) = mes{t : f(t) <= x} is the object
whose Laplace transform at lambda = u^2 drives the stationary-like tail
asymptotics.  Only values of F on [0, x_cut] matter: the exceedance
contribution beyond the cut is super-polynomially small, so F is frozen at
F(x_cut) there and the neglected tail is reported as an explicit bound.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError, SpecViolationError
from .process import ProcessSpec
from .regvar import SlowlyVarying

__all__ = [
    "OccupationCDF",
    "occupation_cdf",
    "monotone_rearrangement",
    "laplace_transform",
    "truncation_tail_bound",
    "informative_integral",
    "default_cut",
]

SIDES = ("plus", "minus")


def default_cut(u: float, A: float = 4.0) -> float:
    """Default truncation level 2 * u**-2 * log(u)**A for the occupation CDF."""
    return 2.0 * u ** -2 * math.log(u) ** A


@dataclass(frozen=True)
class OccupationCDF:
    """Distribution function of an occupation measure on [0, x_cut].

    Two representations are supported: an exact callable (closed forms,
    numeric inverses of monotone profiles) and a sorted piecewise-linear
    table.  ``atom0`` is the mass of the zero level set, nonzero only for a
    flat (stationary) profile.  Values at x >= x_cut are frozen at F(x_cut).
    """

    side: str
    x_cut: float
    side_length: float
    kind: str  # "closed-form" | "table"
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    xs: Optional[np.ndarray] = field(default=None, repr=False)
    Fs: Optional[np.ndarray] = field(default=None, repr=False)
    atom0: float = 0.0

    def __post_init__(self):
        if self.side not in SIDES:
            raise ConfigurationError(f"side must be one of {SIDES}")
        if not (self.x_cut > 0):
            raise ConfigurationError("x_cut must be positive")
        if self.kind == "table":
            if self.xs is None or self.Fs is None:
                raise ConfigurationError("table representation needs xs, Fs")
            if np.any(np.diff(self.Fs) < -1e-15):
                raise ConfigurationError("occupation CDF must be nondecreasing")

    def value(self, x):
        """F(x), frozen at F(x_cut) beyond the cut."""
        x = np.asarray(x, dtype=float)
        xc = np.minimum(x, self.x_cut)
        if self.kind == "closed-form":
            out = np.where(xc > 0, self.fn(np.maximum(xc, 1e-320)), 0.0) + self.atom0
        else:
            out = np.interp(xc, self.xs, self.Fs)
        out = np.where(x < 0, 0.0, out)
        return out if out.ndim else float(out)

    def quantile(self, p):
        """Left-continuous inverse F^{<-}(p): the monotone rearrangement."""
        p = np.asarray(p, dtype=float)
        if self.kind == "table":
            out = np.interp(p, self.Fs, self.xs)
            return out if out.ndim else float(out)
        # bisection against the callable representation
        scalar = p.ndim == 0
        p = np.atleast_1d(p)
        out = np.empty_like(p)
        for i, pi in enumerate(p):
            if pi <= self.atom0:
                out[i] = 0.0
                continue
            lo, hi = 0.0, self.x_cut
            for _ in range(80):
                m = 0.5 * (lo + hi)
                if self.value(m) >= pi:
                    hi = m
                else:
                    lo = m
            out[i] = hi
        return float(out[0]) if scalar else out

    @property
    def total_mass(self) -> float:
        return float(self.value(self.x_cut))

    @classmethod
    def from_function(cls, fn, x_cut: float, side_length: float,
                      side: str = "plus", atom0: float = 0.0) -> "OccupationCDF":
        """Closed-form CDF from an exact callable on (0, x_cut]."""
        return cls(side=side, x_cut=x_cut, side_length=side_length,
                   kind="closed-form", fn=fn, atom0=atom0)

    @classmethod
    def from_power_log(cls, a: float, ell: SlowlyVarying, x_cut: float,
                       side_length: float, side: str = "plus") -> "OccupationCDF":
        """Regularly varying CDF F(x) = x**a * ell(x)."""
        if a < 0:
            raise ConfigurationError("occupation index a must be >= 0")
        return cls.from_function(lambda x: x ** a * ell(x), x_cut, side_length, side)

    @classmethod
    def from_table(cls, xs, Fs, x_cut: float, side_length: float,
                   side: str = "plus", atom0: float = 0.0) -> "OccupationCDF":
        xs = np.asarray(xs, dtype=float)
        Fs = np.asarray(Fs, dtype=float)
        return cls(side=side, x_cut=x_cut, side_length=side_length,
                   kind="table", xs=xs, Fs=Fs, atom0=atom0)


def _monotone_inverse_cdf(spec: ProcessSpec, side: str, x_cut: float) -> OccupationCDF:
    """F = f^{<-} for a profile whose drop is monotone in |t| on the side."""
    var = spec.variance
    S = spec.S
    if var.form == "constant":
        return OccupationCDF.from_table([0.0, x_cut], [S, S], x_cut, S, side, atom0=S)

    cap = float(spec.half_variance_drop(S if side == "plus" else -S))

    def inverse(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        for i, yi in enumerate(y):
            if yi >= cap:
                out[i] = S
                continue
            closed = var.one_minus_inverse(2.0 * yi, side)
            if closed is not None:
                out[i] = min(closed, S)
                continue
            lo, hi = 0.0, S
            for _ in range(80):
                m = 0.5 * (lo + hi)
                if spec.half_variance_drop(m if side == "plus" else -m) >= yi:
                    hi = m
                else:
                    lo = m
            out[i] = hi
        return out

    return OccupationCDF.from_function(inverse, x_cut, S, side)


def occupation_cdf(spec: ProcessSpec, side: str, x_cut: float,
                   grid_size: int = 2 ** 14) -> OccupationCDF:
    """Occupation distribution F(x) = mes{t on side : f(t) <= x}, x in [0, x_cut].

    Locally monotone profiles return the exact inverse of the half drop;
    everything else is measured by level-set counting of midpoint samples on
    a uniform grid (exact for piecewise monotone drops up to O(S/grid_size)).
    A constant stretch of f at a positive level violates the unique-maximum
    structure and raises SpecViolationError.
    """
    if side not in SIDES:
        raise ConfigurationError(f"side must be one of {SIDES}")
    if not (x_cut > 0):
        raise ConfigurationError("x_cut must be positive")
    if grid_size < 256:
        raise ConfigurationError("grid_size must be at least 256")

    if spec.variance.is_locally_monotone(side) or spec.variance.form == "constant":
        return _monotone_inverse_cdf(spec, side, x_cut)

    S = spec.S
    dt = S / grid_size
    mids = (np.arange(grid_size) + 0.5) * dt
    if side == "minus":
        mids = -mids
    f = spec.half_variance_drop(mids)
    if np.any(f <= 0):
        raise SpecViolationError("half variance drop must be positive off zero")
    v = np.sort(f)
    # a long run of identical positive values means a plateau
    run = max(len(list(g)) for g in _runs(v)) if len(v) else 0
    if run > max(4, grid_size // 1024):
        raise SpecViolationError(
            "variance profile has a plateau off zero; occupation CDF undefined")
    kept = v[v <= x_cut]
    k = len(kept)
    xs = np.concatenate([[0.0], kept, [x_cut]])
    Fs = np.concatenate([[0.0], (np.arange(k) + 1) * dt, [k * dt]])
    uniq = np.unique(xs)
    last = np.searchsorted(xs, uniq, side="right") - 1
    return OccupationCDF.from_table(uniq, Fs[last], x_cut, S, side)


def _runs(sorted_vals):
    start = 0
    for i in range(1, len(sorted_vals) + 1):
        if i == len(sorted_vals) or sorted_vals[i] != sorted_vals[start]:
            yield sorted_vals[start:i]
            start = i


def monotone_rearrangement(samples: np.ndarray) -> np.ndarray:
    """Nondecreasing rearrangement of equally weighted samples of a profile.

    The returned array is equimeasurable with the input by construction, so
    sum(phi(samples)) == sum(phi(rearranged)) holds to machine precision for
    any phi: this is the discrete form of the rearrangement identity.
    """
    return np.sort(np.asarray(samples, dtype=float))


def laplace_transform(cdf: OccupationCDF, lam: float) -> float:
    """integral of exp(-lam*x) dF(x) over [0, x_cut].

    Table representations integrate exactly per linear piece (lambda = u^2 is
    huge; sampling would alias).  Closed forms integrate by parts,
    L = exp(-lam*c)*F(c) + int_0^{lam*c} exp(-s) F(s/lam) ds,
    with adaptive quadrature on the substituted integrand.
    """
    if not (lam > 0):
        raise DomainError("lambda must be positive")
    c = cdf.x_cut
    if cdf.kind == "table":
        xs, Fs = cdf.xs, cdf.Fs
        out = float(Fs[0])  # atom at zero, if any
        dx = np.diff(xs)
        dF = np.diff(Fs)
        pos = dx > 0
        slopes = np.zeros_like(dx)
        slopes[pos] = dF[pos] / dx[pos]
        with np.errstate(under="ignore"):
            seg = slopes * (np.exp(-lam * xs[:-1]) - np.exp(-lam * xs[1:])) / lam
        out += float(np.sum(seg))
        # vertical jumps inside the table (dx == 0 with dF > 0)
        jumps = (~pos) & (dF > 0)
        if np.any(jumps):
            out += float(np.sum(dF[jumps] * np.exp(-lam * xs[:-1][jumps])))
        return out

    s_hi = min(lam * c, 700.0)
    val, _ = integrate.quad(lambda s: math.exp(-s) * float(cdf.value(s / lam)),
                            0.0, s_hi, limit=200)
    if lam * c < 745:
        val += math.exp(-lam * c) * cdf.total_mass
    return float(val)


def truncation_tail_bound(cdf: OccupationCDF, lam: float) -> float:
    """Bound exp(-lam*x_cut)*side_length on the neglected mass beyond x_cut."""
    arg = lam * cdf.x_cut
    return 0.0 if arg > 745 else math.exp(-arg) * cdf.side_length


def informative_integral(spec: ProcessSpec, side: str, u: float, A: float) -> float:
    """Truncated exceedance integral int exp(-u^2 f(t)) dt over {f <= cut}.

    The cut is 2*u**-2*log(u)**A; the level set is located by scanning the
    side on a fine grid, refining interval endpoints by bisection, and each
    interval is integrated by adaptive quadrature.  An empty level set beyond
    the t = 0 mesh returns 0.0 with a warning.
    """
    if side not in SIDES:
        raise ConfigurationError(f"side must be one of {SIDES}")
    if u < 2:
        raise DomainError("informative integral requires u >= 2")
    if A <= 1:
        raise DomainError("A must exceed 1")
    thr = default_cut(u, A)
    S = spec.S
    sgn = 1.0 if side == "plus" else -1.0
    n = 2 ** 12
    ts = (np.arange(n) + 0.5) * (S / n)
    f = spec.half_variance_drop(sgn * ts)
    inside = f <= thr
    if not np.any(inside):
        warnings.warn("informative level set empty beyond the t=0 mesh point",
                      RuntimeWarning, stacklevel=2)
        return 0.0

    # coalesce runs of inside-cells into intervals, refine edges by bisection
    edges = np.flatnonzero(np.diff(inside.astype(np.int8)))
    starts = [0] if inside[0] else []
    stops = []
    for e in edges:
        if inside[e]:
            stops.append(e)
        else:
            starts.append(e + 1)
    if inside[-1]:
        stops.append(n - 1)

    def refine(a: float, b: float) -> float:
        # f(a) and f(b) straddle thr; return the crossing
        for _ in range(80):
            m = 0.5 * (a + b)
            if spec.half_variance_drop(sgn * m) <= thr:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    total = 0.0
    dt = S / n
    for i0, i1 in zip(starts, stops):
        lo = 0.0 if i0 == 0 else refine(ts[i0], ts[i0] - dt)
        hi = S if i1 == n - 1 else refine(ts[i1], ts[i1] + dt)
        if hi <= lo:
            continue
        val, _ = integrate.quad(
            lambda t: math.exp(-u ** 2 * float(spec.half_variance_drop(sgn * t))),
            lo, hi, limit=200)
        total += val
    return float(total)
