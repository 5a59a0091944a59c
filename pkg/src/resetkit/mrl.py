"""Mean-residual-life curves: computed from tails, and used to generate laws.

The central identity is the reconstruction formula
``tail(r) = (m0 / m(r)) * exp(-int_0^r dv / m(v))`` valid on [0, t0), which
makes a positive piecewise-linear m a complete description of a law. Laws
generated this way evaluate their tails, densities and partial means in
closed form per segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import distributions as dist
from ._integrate import gauss_legendre_cumulative

__all__ = [
    "MrlCurve",
    "FromMrl",
    "InvalidMrlError",
    "InfiniteMeanError",
    "mrl_from_tail",
    "tail_from_mrl",
    "law_from_mrl",
    "mrl_curve",
    "validate_generator",
]

_DERIV_SLACK = 1e-6


class InvalidMrlError(ValueError):
    """Curve is not usable as a mean-residual-life generator."""


class InfiniteMeanError(ValueError):
    """Residual means are undefined because the law has infinite mean."""


@dataclass(frozen=True)
class MrlCurve:
    """Mean-residual-life values on a grid, linearly interpolated.

    ``terminal`` describes the extension past the last grid point: constant,
    or linear with ``terminal_slope`` (inferred from the last segment when
    omitted). ``m0`` is the unconditional mean; it defaults to m(0), which
    corresponds to a tail starting at 1.
    """

    grid: tuple[float, ...]
    values: tuple[float, ...]
    m0: float | None = None
    terminal: str = "constant"
    terminal_slope: float | None = None
    fn: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.size < 1 or g[0] != 0.0:
            raise InvalidMrlError("curve grid must start at 0")
        if g.size != v.size:
            raise InvalidMrlError("need one value per grid point")
        if g.size > 1 and np.any(np.diff(g) <= 0.0):
            raise InvalidMrlError("curve grid must be strictly increasing")
        if np.any(~np.isfinite(v)) or np.any(v <= 0.0):
            raise InvalidMrlError("residual means must be positive and finite")
        if self.terminal not in ("constant", "linear"):
            raise InvalidMrlError(f"unknown terminal behaviour {self.terminal!r}")
        if self.m0 is not None and self.m0 > v[0] + 1e-12:
            raise InvalidMrlError("m0 cannot exceed m(0)")

    @property
    def mean(self) -> float:
        return float(self.values[0] if self.m0 is None else self.m0)

    @property
    def end_slope(self) -> float:
        if self.terminal == "constant":
            return 0.0
        if self.terminal_slope is not None:
            return float(self.terminal_slope)
        if len(self.grid) < 2:
            raise InvalidMrlError("linear terminal needs a slope or two grid points")
        return (self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2])

    @property
    def support_end(self) -> float:
        """Time where the extended curve hits zero (inf if never)."""
        s = self.end_slope
        if s < 0.0:
            return float(self.grid[-1] + self.values[-1] / (-s))
        return np.inf

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        inner = np.interp(t_arr, g, v)
        ext = v[-1] + self.end_slope * (t_arr - g[-1])
        out = np.where(t_arr <= g[-1], inner, np.clip(ext, 0.0, None))
        out = np.where(t_arr >= self.support_end, 0.0, out)
        return out if out.shape else float(out)


def validate_generator(curve: MrlCurve) -> MrlCurve:
    """Check the sufficient conditions for the curve to generate a law."""
    g = np.asarray(curve.grid, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    if g.size > 1:
        slopes = np.diff(v) / np.diff(g)
        if np.any(slopes < -1.0 - _DERIV_SLACK):
            i = int(np.argmin(slopes))
            raise InvalidMrlError(
                f"derivative {slopes[i]:g} below -1 near t={g[i]:g}")
    if curve.end_slope < -1.0 - _DERIV_SLACK:
        raise InvalidMrlError("terminal slope below -1")
    return curve


@dataclass(frozen=True)
class _CurveTables:
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray      # one per segment, then the terminal slope
    cum_inv: np.ndarray     # int_0^knot dv/m at each knot
    knot_tails: np.ndarray  # tail values at the knots
    m0: float
    support_end: float


@lru_cache(maxsize=128)
def _tables(curve: MrlCurve) -> _CurveTables:
    g = np.asarray(curve.grid, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    seg_slopes = np.diff(v) / np.diff(g) if g.size > 1 else np.empty(0)
    slopes = np.append(seg_slopes, curve.end_slope)
    cum = np.zeros(g.size)
    for i in range(g.size - 1):
        cum[i + 1] = cum[i] + _segment_inv_integral(v[i], seg_slopes[i],
                                                    g[i + 1] - g[i])
    m0 = curve.mean
    with np.errstate(divide="ignore"):
        knot_tails = (m0 / v) * np.exp(-cum)
    return _CurveTables(knots=g, values=v, slopes=slopes, cum_inv=cum,
                        knot_tails=knot_tails, m0=m0,
                        support_end=curve.support_end)


def _segment_inv_integral(v_start: float, slope: float, width: float) -> float:
    """Integral of 1/m over one linear segment of m."""
    if width <= 0.0:
        return 0.0
    if abs(slope) < 1e-14:
        return width / v_start
    return math.log((v_start + slope * width) / v_start) / slope


def tail_from_mrl(curve: MrlCurve, r):
    """Reconstruct the tail at r from the residual-mean curve."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if curve.fn is not None:
        out = _tail_from_callable(curve, r_arr)
    else:
        out = _tail_from_tables(curve, r_arr)
    return out if np.asarray(r).shape else float(out[0])


def _tail_from_tables(curve: MrlCurve, r_arr: np.ndarray) -> np.ndarray:
    tb = _tables(curve)
    g, v, slopes = tb.knots, tb.values, tb.slopes
    idx = np.clip(np.searchsorted(g, r_arr, side="right") - 1, 0, g.size - 1)
    base_v = v[idx]
    base_c = tb.cum_inv[idx]
    s = slopes[np.minimum(idx, slopes.size - 1)]
    dt = r_arr - g[idx]
    m_here = np.clip(base_v + s * dt, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        inc = np.where(np.abs(s) < 1e-14, dt / base_v,
                       np.log(np.maximum(m_here, 1e-300) / base_v) / np.where(s == 0.0, 1.0, s))
        out = (tb.m0 / np.maximum(m_here, 1e-300)) * np.exp(-(base_c + inc))
    out = np.where(r_arr >= tb.support_end, 0.0, out)
    out = np.where(m_here <= 0.0, 0.0, out)
    return out


def _tail_from_callable(curve: MrlCurve, r_arr: np.ndarray) -> np.ndarray:
    order = np.argsort(r_arr)
    sorted_r = r_arr[order]
    knots = np.unique(np.concatenate([[0.0], np.asarray(curve.grid, dtype=float),
                                      sorted_r[np.isfinite(sorted_r)]]))
    end = curve.support_end
    knots = knots[knots < end]

    def inv_m(t):
        return 1.0 / np.clip(np.asarray(curve.fn(t)), 1e-300, None)

    cum = gauss_legendre_cumulative(inv_m, knots)
    c_at = np.interp(sorted_r, knots, cum)
    m_at = np.clip(np.asarray(curve.fn(sorted_r)), 1e-300, None)
    vals = (curve.mean / m_at) * np.exp(-c_at)
    vals = np.where(sorted_r >= end, 0.0, vals)
    out = np.empty_like(vals)
    out[order] = vals
    return out


def mrl_from_tail(spec: dist.DistributionSpec, r):
    """Residual mean of a law at r; zero past the support, per convention."""
    m_total = dist.mean(spec)
    if not np.isfinite(m_total):
        raise InfiniteMeanError("residual means are undefined for infinite mean")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    rest = np.asarray(dist.mean_upper_rest(spec, r_arr))
    tl = np.asarray(spec.tail(r_arr))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(tl > 0.0, rest / np.maximum(tl, 1e-300), 0.0)
    out = np.where(r_arr >= spec.t0, 0.0, out)
    return out if np.asarray(r).shape else float(out[0])


def mrl_curve(spec: dist.DistributionSpec, grid=None) -> MrlCurve:
    """Tabulate a law's residual-mean curve, keeping exact evaluation attached."""
    if grid is None:
        grid = dist.working_grid(spec, n=1024)
    grid = np.asarray(grid, dtype=float)
    end = spec.t0
    grid = grid[grid < end]
    if grid.size == 0 or grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
    vals = np.atleast_1d(np.asarray(mrl_from_tail(spec, grid)))
    keep = vals > 0.0
    keep[0] = True
    m0 = dist.mean(spec)
    return MrlCurve(grid=tuple(grid[keep]), values=tuple(vals[keep]), m0=m0,
                    fn=lambda t: mrl_from_tail(spec, t))


def law_from_mrl(curve: MrlCurve, *, defect: float = 0.0) -> "FromMrl":
    """Turn a generator-valid curve into a distribution spec.

    The generated law follows the curve's piecewise-linear interpolation;
    any attached exact evaluator is dropped so the law is self-contained.
    """
    validate_generator(curve)
    if curve.fn is not None:
        curve = _strip_fn(curve)
    return FromMrl(curve=curve, defect=defect)


def _strip_fn(curve: MrlCurve) -> MrlCurve:
    return MrlCurve(grid=curve.grid, values=curve.values, m0=curve.m0,
                    terminal=curve.terminal, terminal_slope=curve.terminal_slope)


@dataclass(frozen=True, kw_only=True)
class FromMrl(dist.DistributionSpec):
    """Absolutely continuous law generated by a residual-mean curve."""

    curve: MrlCurve
    family: str = field(default="from_mrl", init=False, repr=False)

    def _validate_family(self):
        if not isinstance(self.curve, MrlCurve):
            raise dist.SpecValidationError("from_mrl spec needs an MrlCurve")
        validate_generator(self.curve)

    def _validate_standing(self):
        # hazard 1/m is positive and finite, so the tail is strictly
        # decreasing from m0/m(0) > 0; both assumptions hold structurally
        return None

    def _tail0(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = _tail_from_tables(self.curve, np.where(np.isinf(t_arr), 0.0, t_arr))
        out = np.where(np.isinf(t_arr), 0.0, out)
        return out if np.asarray(t).shape else out[0]

    def _isf0(self, u):
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty(u_arr.shape)
        for j in np.ndindex(u_arr.shape):
            out[j] = _isf_scalar(self.curve, float(u_arr[j]))
        return out if np.asarray(u).shape else out[0]

    def _tail_rest0(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        m_here = np.asarray(self.curve(t_arr))
        out = m_here * _tail_from_tables(self.curve, t_arr)
        return out if np.asarray(t).shape else out[0]

    def _power_moment0(self, p):
        if p == 1.0:
            return self.curve.mean
        return None

    def _moment_sup_order(self):
        s = self.curve.end_slope
        if s <= 0.0:
            return np.inf
        return 1.0 + 1.0 / s

    def _support_end(self):
        return self.curve.support_end

    def tail_breakpoints(self):
        return tuple(float(x) for x in self.curve.grid[1:])

    def _density0(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        tb = _tables(self.curve)
        idx = np.clip(np.searchsorted(tb.knots, t_arr, side="right") - 1, 0,
                      tb.knots.size - 1)
        s = tb.slopes[np.minimum(idx, tb.slopes.size - 1)]
        m_here = np.clip(np.asarray(self.curve(t_arr)), 1e-300, None)
        out = _tail_from_tables(self.curve, t_arr) * (1.0 + s) / m_here
        out = np.where(t_arr >= tb.support_end, 0.0, out)
        return out if np.asarray(t).shape else out[0]

    def _scalar_isf(self):
        curve = self.curve
        return lambda u: _isf_scalar(curve, u)

    @classmethod
    def from_params(cls, params: dict, **extra) -> "FromMrl":
        curve = MrlCurve(
            grid=tuple(float(x) for x in params["grid"]),
            values=tuple(float(x) for x in params["values"]),
            m0=float(params["m0"]) if params.get("m0") is not None else None,
            terminal=params.get("terminal", "constant"),
            terminal_slope=(float(params["terminal_slope"])
                            if params.get("terminal_slope") is not None else None),
        )
        return cls(curve=curve, **extra)

    def to_params(self) -> dict:
        out = {"grid": list(self.curve.grid), "values": list(self.curve.values)}
        if self.curve.m0 is not None:
            out["m0"] = self.curve.m0
        if self.curve.terminal != "constant":
            out["terminal"] = self.curve.terminal
            if self.curve.terminal_slope is not None:
                out["terminal_slope"] = self.curve.terminal_slope
        return out


def _isf_scalar(curve: MrlCurve, u: float) -> float:
    """Exact inverse survival via the per-segment closed forms."""
    tb = _tables(curve)
    tails = tb.knot_tails
    if u >= tails[0]:
        return 0.0
    j = int(np.searchsorted(-tails, -u, side="left"))
    if j >= tails.size:
        # terminal piece
        g0 = float(tb.knots[-1])
        v0 = float(tb.values[-1])
        c0 = float(tb.cum_inv[-1])
        s = float(tb.slopes[-1])
        top = tails[-1]
    else:
        g0 = float(tb.knots[j - 1])
        v0 = float(tb.values[j - 1])
        c0 = float(tb.cum_inv[j - 1])
        s = float(tb.slopes[j - 1])
        top = tails[j - 1]
    if u >= top:
        return g0
    if u <= 0.0:
        return tb.support_end
    if abs(s) < 1e-14:
        return g0 + v0 * math.log(top / u)
    q = 1.0 + 1.0 / s
    if abs(q) < 1e-14:
        # slope -1: flat tail on this piece, jump to its far end
        return g0
    amp = tb.m0 * math.exp(-c0) * v0 ** (1.0 / s)
    m_here = (u / amp) ** (-1.0 / q)
    return g0 + (m_here - v0) / s


dist.register_family("from_mrl", FromMrl)
