"""Per-line loss, mid-line flow and squared current as functions of the
angle difference, at each approximation tier.

All evaluators are numpy-vectorized: a :class:`LineFunctionSet` holds one
entry per line (or a scalar for a single line) and broadcasts against the
angle-difference argument.

Every tier shares one algebraic skeleton.  With ``u = dtheta - psi``::

    loss(u)        = g (Vj^2 + Vi^2/tau^2) - 2 (g/tau) Vi Vj c(u)
    flow(u)        = g/2 (Vi^2/tau^2 - Vj^2) - (b/tau) Vi Vj s(u)
    current_ij(u)  = |y|^2/tau^2 (alpha^2 Vi^2/tau^2 + Vj^2 - 2 (alpha/tau) Vi Vj c(u + phi))
    current_ji(u)  = |y|^2 (Vi^2/tau^2 + alpha^2 Vj^2 - 2 (alpha/tau) Vi Vj c(u - phi))

where ``(c, s) = (cos, sin)`` for the exact tier and the truncated series
``(1 - u^2/2, u)`` otherwise.  The nominal tier fixes V = tau = 1, psi = 0,
alpha = 1, phi = 0; the DC tier additionally replaces (g, b, |y|^2) by
(r/x^2, -1/x, 1/x^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import Line, Network, derive_line_params

HALF_PI = 0.5 * math.pi


class ApproxTier(str, enum.Enum):
    EXACT = "exact"
    TAYLOR = "taylor"
    NOMINAL = "nominal"
    DC = "dc"

    @classmethod
    def parse(cls, value: "str | ApproxTier") -> "ApproxTier":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown tier {value!r}; expected one of {[t.value for t in cls]}") from None


class Side(str, enum.Enum):
    FROM = "ij"  # current entering at the from (transformer) end
    TO = "ji"


class TierUnsupported(ValueError):
    pass


@dataclass(frozen=True)
class AngleDomain:
    """Subdomains on which the general-function properties are guaranteed.

    ``loss``: convex/symmetric domain, ``loss_plus``: its increasing half,
    ``current``/``current_plus``: same for the from-side squared current.
    """

    loss: tuple[float, float]
    loss_plus: tuple[float, float]
    current: tuple[float, float]
    current_plus: tuple[float, float]

    @classmethod
    def from_params(cls, psi: float, phi: float) -> "AngleDomain":
        return cls(
            loss=(-HALF_PI + psi, HALF_PI + psi),
            loss_plus=(psi, HALF_PI + psi),
            current=(-HALF_PI - phi + psi, HALF_PI - phi + psi),
            current_plus=(-phi + psi, HALF_PI - phi + psi),
        )


@dataclass(frozen=True)
class LineFunctionSet:
    """Tier-effective line coefficients; fields are floats or 1-d arrays."""

    tier: ApproxTier
    g: np.ndarray
    b: np.ndarray
    y_mag_sq: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    tau: np.ndarray
    psi: np.ndarray
    v_from: np.ndarray
    v_to: np.ndarray
    r: np.ndarray
    x: np.ndarray

    @classmethod
    def from_lines(
        cls,
        lines: Sequence[Line],
        v_from: Sequence[float],
        v_to: Sequence[float],
        tier: "ApproxTier | str" = ApproxTier.EXACT,
    ) -> "LineFunctionSet":
        tier = ApproxTier.parse(tier)
        params = [derive_line_params(ln) for ln in lines]
        arr = lambda vals: np.array(list(vals), dtype=float)  # noqa: E731
        r = arr(ln.r for ln in lines)
        x = arr(ln.x for ln in lines)
        g = arr(p.g for p in params)
        b = arr(p.b for p in params)
        y2 = arr(p.y_mag_sq for p in params)
        alpha = arr(p.alpha for p in params)
        phi = arr(p.phi for p in params)
        tau = arr(ln.tap_ratio for ln in lines)
        psi = arr(ln.phase_shift for ln in lines)
        vi = arr(v_from)
        vj = arr(v_to)
        if tier in (ApproxTier.NOMINAL, ApproxTier.DC):
            ones, zeros = np.ones_like(r), np.zeros_like(r)
            alpha, phi, tau, psi, vi, vj = ones, zeros, ones, zeros, ones.copy(), ones.copy()
            if tier is ApproxTier.DC:
                g, b, y2 = r / x**2, -1.0 / x, 1.0 / x**2
        return cls(tier, g, b, y2, alpha, phi, tau, psi, vi, vj, r, x)

    @classmethod
    def for_line(
        cls, line: Line, v_from: float = 1.0, v_to: float = 1.0, tier: "ApproxTier | str" = ApproxTier.EXACT
    ) -> "LineFunctionSet":
        """Single-line set whose evaluators return scalars."""
        fs = cls.from_lines([line], [v_from], [v_to], tier)
        return cls(fs.tier, *(float(getattr(fs, k)[0]) for k in _ARRAY_FIELDS))

    @classmethod
    def for_network(cls, network: Network, tier: "ApproxTier | str" = ApproxTier.EXACT) -> "LineFunctionSet":
        V = network.voltages()
        f, t = network.line_endpoints()
        return cls.from_lines(network.lines, V[f], V[t], tier)

    def __len__(self) -> int:
        return int(np.size(self.g))

    def line(self, k: int) -> "LineFunctionSet":
        return LineFunctionSet(self.tier, *(float(np.asarray(getattr(self, f)).reshape(-1)[k]) for f in _ARRAY_FIELDS))

    @property
    def exact(self) -> bool:
        return self.tier is ApproxTier.EXACT

    def domain(self) -> AngleDomain:
        if np.ndim(self.psi):
            raise ValueError("domain() is defined per line; use .line(k)")
        return AngleDomain.from_params(float(self.psi), float(self.phi))

    # -- shared trig / series kernels ------------------------------------
    def _c(self, u):
        return np.cos(u) if self.exact else 1.0 - 0.5 * u * u

    def _c1(self, u):  # -d/du c(u)
        return np.sin(u) if self.exact else u

    def _c2(self, u):  # -d2/du2 c(u)
        return np.cos(u) if self.exact else np.ones_like(u) if isinstance(u, np.ndarray) else 1.0

    def _s(self, u):
        return np.sin(u) if self.exact else u

    def _s1(self, u):
        return np.cos(u) if self.exact else np.ones_like(u) if isinstance(u, np.ndarray) else 1.0

    def _s2(self, u):
        return -np.sin(u) if self.exact else 0.0 * u

    # -- coefficients ----------------------------------------------------
    @property
    def _vv(self):
        return self.v_from * self.v_to / self.tau

    @property
    def _vi_eff_sq(self):
        return (self.v_from / self.tau) ** 2

    @property
    def loss_constant(self):
        return self.g * (self.v_to**2 + self._vi_eff_sq)

    @property
    def loss_amplitude(self):
        return 2.0 * self.g * self._vv

    @property
    def flow_offset(self):
        return 0.5 * self.g * (self._vi_eff_sq - self.v_to**2)

    @property
    def flow_amplitude(self):
        return -self.b * self._vv

    def current_center(self, side: Side = Side.FROM):
        """Angle difference at which the squared current is minimal."""
        return self.psi - self.phi if Side(side) is Side.FROM else self.psi + self.phi

    def _current_coeffs(self, side: Side):
        amp = 2.0 * self.alpha * self._vv
        if Side(side) is Side.FROM:
            scale = self.y_mag_sq / self.tau**2
            const = self.alpha**2 * self._vi_eff_sq + self.v_to**2
        else:
            scale = self.y_mag_sq
            const = self._vi_eff_sq + self.alpha**2 * self.v_to**2
        return scale, const, amp

    # -- loss --------------------------------------------------------------
    def loss(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.loss_constant - self.loss_amplitude * self._c(u)

    def loss_d1(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.loss_amplitude * self._c1(u)

    def loss_d2(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.loss_amplitude * self._c2(u)

    # -- mid-line flow -----------------------------------------------------
    def midline_flow(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.flow_offset + self.flow_amplitude * self._s(u)

    def flow_d1(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.flow_amplitude * self._s1(u)

    def flow_d2(self, dtheta):
        u = np.asarray(dtheta, dtype=float) - self.psi
        return self.flow_amplitude * self._s2(u)

    def series_flow(self, dtheta, d):
        """Real power through the series element at fraction ``d`` from bus j.

        Defined for the exact tier only.
        """
        if not self.exact:
            raise TierUnsupported("series_flow at general d is only defined for the exact tier")
        d = np.asarray(d, dtype=float)
        if np.any((d < 0) | (d > 1)):
            raise ValueError("fractional distance d must lie in [0, 1]")
        u = np.asarray(dtheta, dtype=float) - self.psi
        return (
            self.g * (d * self._vi_eff_sq - (1.0 - d) * self.v_to**2)
            - self.b * self._vv * np.sin(u)
            - self.g * self._vv * (2.0 * d - 1.0) * np.cos(u)
        )

    # -- squared current ---------------------------------------------------
    def current_sq(self, dtheta, side: Side = Side.FROM):
        scale, const, amp = self._current_coeffs(side)
        u = np.asarray(dtheta, dtype=float) - self.current_center(side)
        return scale * (const - amp * self._c(u))

    def current_sq_d1(self, dtheta, side: Side = Side.FROM):
        scale, _, amp = self._current_coeffs(side)
        u = np.asarray(dtheta, dtype=float) - self.current_center(side)
        return scale * amp * self._c1(u)

    def current_sq_d2(self, dtheta, side: Side = Side.FROM):
        scale, _, amp = self._current_coeffs(side)
        u = np.asarray(dtheta, dtype=float) - self.current_center(side)
        return scale * amp * self._c2(u)

    def current_sq_min(self, side: Side = Side.FROM):
        """Value of the squared current at its symmetry point."""
        scale, const, amp = self._current_coeffs(side)
        return scale * (const - amp)


_ARRAY_FIELDS = ("g", "b", "y_mag_sq", "alpha", "phi", "tau", "psi", "v_from", "v_to", "r", "x")
