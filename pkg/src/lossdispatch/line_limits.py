"""Conversion of physical line limits into bounds on the angle difference.

Flow limits invert the (monotone) mid-line flow; current limits invert the
squared current on its increasing half-domain and mirror about the
symmetry point.  All inverses are closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .line_functions import HALF_PI, LineFunctionSet, Side


class LimitOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class AngleWindow:
    lower: float
    upper: float
    lower_source: str = "feasibility"
    upper_source: str = "feasibility"

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise LimitOutOfRange(f"empty angle window [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def intersect(self, other: "AngleWindow") -> "AngleWindow":
        if other.lower > self.lower:
            lo, lo_src = other.lower, other.lower_source
        else:
            lo, lo_src = self.lower, self.lower_source
        if other.upper < self.upper:
            hi, hi_src = other.upper, other.upper_source
        else:
            hi, hi_src = self.upper, self.upper_source
        if lo > hi:
            raise LimitOutOfRange(f"windows [{self.lower}, {self.upper}] and [{other.lower}, {other.upper}] are disjoint")
        return AngleWindow(lo, hi, lo_src, hi_src)


def feasibility_window(fs: LineFunctionSet) -> AngleWindow:
    """Intersection of the loss and from-side current property domains."""
    psi, phi = float(fs.psi), float(fs.phi)
    if abs(phi) >= HALF_PI:
        raise LimitOutOfRange(f"|phi| = {abs(phi)} >= pi/2")
    lo = max(-HALF_PI + psi, -HALF_PI - phi + psi)
    hi = min(HALF_PI + psi, HALF_PI - phi + psi)
    return AngleWindow(lo, hi, "feasibility", "feasibility")


def _flow_inverse(fs: LineFunctionSet, value: float) -> float:
    amp = float(fs.flow_amplitude)
    arg = (value - float(fs.flow_offset)) / amp
    u = math.asin(arg) if fs.exact else arg
    return float(fs.psi) + u


def flow_image(fs: LineFunctionSet) -> tuple[float, float]:
    """Range of the mid-line flow over the loss domain."""
    lo, hi = fs.domain().loss
    a, b = float(fs.midline_flow(lo)), float(fs.midline_flow(hi))
    return min(a, b), max(a, b)


def window_from_flow_limit(fs: LineFunctionSet, flow_limit: float, clip: bool = False) -> AngleWindow:
    """Window equivalent to ``-flow_limit <= midline_flow <= flow_limit``.

    With ``clip`` a limit extending beyond the flow image on the domain is
    truncated to the domain instead of raising.
    """
    if flow_limit < 0:
        raise LimitOutOfRange("flow limit must be non-negative")
    f_lo, f_hi = flow_image(fs)
    dom_lo, dom_hi = fs.domain().loss
    bounds = []
    for target in (-flow_limit, flow_limit):
        if f_lo <= target <= f_hi:
            bounds.append(_flow_inverse(fs, target))
        elif clip:
            increasing = float(fs.flow_amplitude) > 0
            above = target > f_hi
            bounds.append(dom_hi if above == increasing else dom_lo)
        else:
            raise LimitOutOfRange(f"flow limit {target} outside image [{f_lo}, {f_hi}]")
    lo, hi = sorted(bounds)
    return AngleWindow(lo, hi, "flow", "flow")


def current_half_width(fs: LineFunctionSet, current_sq_limit: float, side: Side = Side.FROM, clip: bool = False) -> float:
    """Distance from the symmetry point at which the squared current hits the limit."""
    scale, const, amp = fs._current_coeffs(side)
    scale, const, amp = float(scale), float(const), float(amp)
    i_min = scale * (const - amp)
    i_max = scale * (const - amp * (math.cos(HALF_PI) if fs.exact else 1.0 - 0.5 * HALF_PI**2))
    if current_sq_limit < i_min - 1e-15 * max(1.0, abs(i_min)):
        raise LimitOutOfRange(f"squared current limit {current_sq_limit} below minimum {i_min} (side {Side(side).value})")
    if current_sq_limit > i_max:
        if clip:
            return HALF_PI
        raise LimitOutOfRange(f"squared current limit {current_sq_limit} above image maximum {i_max}")
    if amp == 0.0:
        return HALF_PI
    # const - amp*c(w) = limit/scale
    c_val = (const - current_sq_limit / scale) / amp
    if fs.exact:
        return math.acos(min(1.0, max(-1.0, c_val)))
    return math.sqrt(max(0.0, 2.0 * (1.0 - c_val)))


def window_from_current_limit(
    fs: LineFunctionSet,
    current_sq_limit: float | tuple[float, float],
    clip: bool = False,
) -> AngleWindow:
    """Window enforcing the squared-current limit on both line ends.

    ``current_sq_limit`` is either one value for both ends or a
    ``(from_side, to_side)`` pair.
    """
    if isinstance(current_sq_limit, tuple):
        lim_ij, lim_ji = current_sq_limit
    else:
        lim_ij = lim_ji = current_sq_limit
    window = None
    for side, lim, tag in ((Side.FROM, lim_ij, "current_ij"), (Side.TO, lim_ji, "current_ji")):
        if lim is None:
            continue
        w = current_half_width(fs, lim, side, clip=clip)
        center = float(fs.current_center(side))
        part = AngleWindow(center - w, center + w, tag, tag)
        window = part if window is None else window.intersect(part)
    if window is None:
        raise ValueError("no current limit given")
    return window


def mva_rating_to_current_limit(rating: float | None, base_mva: float, v_side: float) -> float | None:
    """Squared current limit (p.u.) for an apparent-power rating at fixed voltage."""
    if rating is None:
        return None
    if rating <= 0 or v_side <= 0:
        raise ValueError("rating and side voltage must be positive")
    return (rating / base_mva) ** 2 / v_side**2


def explicit_window(lower: float | None, upper: float | None) -> AngleWindow:
    lo = -math.inf if lower is None else lower
    hi = math.inf if upper is None else upper
    return AngleWindow(lo, hi, "explicit", "explicit")


def line_window(
    fs: LineFunctionSet,
    *,
    current_sq_limit: tuple[float | None, float | None] | None = None,
    flow_limit: float | None = None,
    angle_bounds: tuple[float | None, float | None] | None = None,
    clip: bool = True,
) -> AngleWindow:
    """Intersection of the feasibility window with every supplied limit."""
    window = feasibility_window(fs)
    if current_sq_limit is not None and any(v is not None for v in current_sq_limit):
        window = window.intersect(window_from_current_limit(fs, tuple(current_sq_limit), clip=clip))
    if flow_limit is not None:
        window = window.intersect(window_from_flow_limit(fs, flow_limit, clip=clip))
    if angle_bounds is not None and any(v is not None for v in angle_bounds):
        window = window.intersect(explicit_window(*angle_bounds))
    return window


def window_arrays(windows: list[AngleWindow]) -> tuple[np.ndarray, np.ndarray]:
    return (np.array([w.lower for w in windows], dtype=float), np.array([w.upper for w in windows], dtype=float))
