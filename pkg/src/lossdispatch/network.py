"""Network data model: buses, lines, generators and incidence matrices.

Everything is stored in per-unit on the system MVA base; angles in radians.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class NetworkError(ValueError):
    """Base class for invalid network data."""


class ZeroImpedance(NetworkError):
    pass


class UnknownBus(NetworkError):
    pass


class Disconnected(NetworkError):
    pass


class NonConvexCost(NetworkError):
    pass


@dataclass(frozen=True)
class QuadraticCost:
    """``c2*P**2 + c1*P + c0`` with P in p.u. and cost in $/h."""

    c2: float = 0.0
    c1: float = 0.0
    c0: float = 0.0

    def __post_init__(self) -> None:
        if self.c2 < 0:
            raise NonConvexCost(f"quadratic coefficient {self.c2} < 0")

    def value(self, p):
        return self.c2 * p * p + self.c1 * p + self.c0

    def d1(self, p):
        return 2.0 * self.c2 * p + self.c1

    def d2(self, p):
        return 2.0 * self.c2 + 0.0 * p


@dataclass(frozen=True)
class PiecewiseLinearCost:
    """Convex piecewise-linear cost through ``points`` = ((p, cost), ...).

    Outside the breakpoint range the first/last segment is extended.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(p), float(c)) for p, c in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise NonConvexCost("piecewise-linear cost needs at least two points")
        xs = [p for p, _ in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise NonConvexCost("breakpoints must be strictly increasing")
        slopes = self.slopes()
        if any(s2 < s1 - 1e-12 * max(1.0, abs(s1)) for s1, s2 in zip(slopes, slopes[1:])):
            raise NonConvexCost(f"segment slopes {slopes} are not nondecreasing")

    def slopes(self) -> list[float]:
        return [(c2 - c1) / (p2 - p1) for (p1, c1), (p2, c2) in zip(self.points, self.points[1:])]

    def segments(self) -> list[tuple[float, float]]:
        """(slope, intercept) of each segment; the cost is their pointwise max."""
        return [
            (s, c1 - s * p1)
            for s, (p1, c1) in zip(self.slopes(), self.points[:-1])
        ]

    def value(self, p):
        return max(s * p + k for s, k in self.segments())


Cost = QuadraticCost | PiecewiseLinearCost


@dataclass(frozen=True)
class Bus:
    id: int
    voltage: float = 1.0
    demand: float = 0.0

    def __post_init__(self) -> None:
        if not self.voltage > 0:
            raise NetworkError(f"bus {self.id}: voltage magnitude must be > 0, got {self.voltage}")


@dataclass(frozen=True)
class Generator:
    bus: int
    p_min: float
    p_max: float
    cost: Cost = field(default_factory=QuadraticCost)

    def __post_init__(self) -> None:
        if self.p_min > self.p_max:
            raise NetworkError(f"generator at bus {self.bus}: p_min > p_max")


@dataclass(frozen=True)
class Line:
    """Pi-model branch with an ideal transformer at the ``from_bus`` end.

    ``shunt_susceptance`` is the susceptance of *each* end shunt element
    (half of the total line charging).  ``rating`` is in MVA, ``None`` for
    an unlimited line.  ``angle_min``/``angle_max`` are optional explicit
    bounds on the angle difference in radians.
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    shunt_susceptance: float = 0.0
    tap_ratio: float = 1.0
    phase_shift: float = 0.0
    rating: float | None = None
    angle_min: float | None = None
    angle_max: float | None = None

    def __post_init__(self) -> None:
        if self.r < 0:
            raise NetworkError(f"line {self.from_bus}->{self.to_bus}: negative resistance")
        if self.x == 0:
            raise ZeroImpedance(f"line {self.from_bus}->{self.to_bus}: zero reactance")
        if not self.tap_ratio > 0:
            raise NetworkError(f"line {self.from_bus}->{self.to_bus}: tap ratio must be > 0")

    @property
    def lossless(self) -> bool:
        """True for r = 0; strict convexity of the loss is waived for such lines."""
        return self.r == 0


@dataclass(frozen=True)
class DerivedLineParams:
    g: float
    b: float
    y_mag_sq: float
    alpha: float
    phi: float


def derive_line_params(line: Line) -> DerivedLineParams:
    z = complex(line.r, line.x)
    if z == 0:
        raise ZeroImpedance("r = x = 0")
    y = 1.0 / z
    if line.shunt_susceptance == 0.0:
        alpha, phi = 1.0, 0.0
    else:
        alpha, phi = cmath.polar(z * (1j * line.shunt_susceptance + y))
    return DerivedLineParams(
        g=y.real, b=y.imag, y_mag_sq=y.real**2 + y.imag**2, alpha=alpha, phi=phi
    )


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    base_mva: float = 100.0
    slack_bus: int | None = None
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate bus ids")
        known = set(ids)
        for gen in self.generators:
            if gen.bus not in known:
                raise UnknownBus(f"generator references unknown bus {gen.bus}")
        for ln in self.lines:
            for bus in (ln.from_bus, ln.to_bus):
                if bus not in known:
                    raise UnknownBus(f"line references unknown bus {bus}")
            if ln.from_bus == ln.to_bus:
                raise NetworkError(f"line {ln.from_bus}->{ln.to_bus} is a self loop")
        if self.slack_bus is not None and self.slack_bus not in known:
            raise UnknownBus(f"slack bus {self.slack_bus} not in network")

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def m(self) -> int:
        return len(self.lines)

    def bus_index(self, bus_id: int) -> int:
        try:
            return self._index[bus_id]
        except KeyError:
            raise UnknownBus(f"unknown bus {bus_id}") from None

    @property
    def _index(self) -> dict[int, int]:
        # cached lazily; frozen dataclass so stash in __dict__
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {b.id: k for k, b in enumerate(self.buses)}
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def bus_ids(self) -> np.ndarray:
        return np.array([b.id for b in self.buses], dtype=int)

    def voltages(self) -> np.ndarray:
        return np.array([b.voltage for b in self.buses], dtype=float)

    def demand(self) -> np.ndarray:
        return np.array([b.demand for b in self.buses], dtype=float)

    def line_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        f = np.array([self.bus_index(ln.from_bus) for ln in self.lines], dtype=int)
        t = np.array([self.bus_index(ln.to_bus) for ln in self.lines], dtype=int)
        return f, t

    def with_demand(self, demand: Sequence[float]) -> "Network":
        """Copy of the network with the nodal demand vector replaced."""
        buses = tuple(
            Bus(id=b.id, voltage=b.voltage, demand=float(d))
            for b, d in zip(self.buses, demand, strict=True)
        )
        return Network(buses, self.lines, self.generators, self.base_mva, self.slack_bus, self.name)


@dataclass(frozen=True)
class IncidenceSet:
    A: sp.csr_matrix
    A_abs: sp.csr_matrix
    A_dot: sp.csr_matrix
    reference: int
    reference_index: int


def _adjacency(network: Network) -> sp.csr_matrix:
    f, t = network.line_endpoints()
    n = network.n
    data = np.ones(len(f))
    return sp.coo_matrix((data, (f, t)), shape=(n, n)).tocsr()


def check_connected(network: Network) -> bool:
    if network.n == 0:
        return False
    if network.n == 1:
        return True
    ncomp, _ = connected_components(_adjacency(network), directed=False)
    return ncomp == 1


def signed_incidence(network: Network) -> sp.csr_matrix:
    f, t = network.line_endpoints()
    m = network.m
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([f, t])
    data = np.concatenate([np.ones(m), -np.ones(m)])
    return sp.csr_matrix((data, (rows, cols)), shape=(m, network.n))


def build_incidence(network: Network, reference: int | None = None) -> IncidenceSet:
    """Incidence matrices with the column of ``reference`` removed in ``A_dot``.

    ``reference`` defaults to the network's slack bus, else the first bus.
    """
    if reference is None:
        reference = network.slack_bus if network.slack_bus is not None else network.buses[0].id
    ref_idx = network.bus_index(reference)
    if not check_connected(network):
        raise Disconnected("network graph has more than one connected component")
    A = signed_incidence(network)
    keep = np.array([k for k in range(network.n) if k != ref_idx], dtype=int)
    A_dot = A.tocsc()[:, keep].tocsr()
    return IncidenceSet(A=A, A_abs=abs(A).tocsr(), A_dot=A_dot, reference=reference, reference_index=ref_idx)


def expand_angles(theta_dot: np.ndarray, reference_index: int) -> np.ndarray:
    """Full angle vector with a zero inserted at the reference position."""
    return np.insert(np.asarray(theta_dot, dtype=float), reference_index, 0.0)


def reduce_angles(theta: np.ndarray, reference_index: int) -> np.ndarray:
    """Reduced angles for a new reference: shift so it is zero, then drop it."""
    theta = np.asarray(theta, dtype=float)
    return np.delete(theta - theta[reference_index], reference_index)


def pi_model_current(line: Line, v_from: complex, v_to: complex) -> tuple[complex, complex]:
    """Complex currents entering the branch at each end (circuit-level reference)."""
    y = 1.0 / complex(line.r, line.x)
    ys = 1j * line.shunt_susceptance
    a = line.tap_ratio * cmath.exp(1j * line.phase_shift)
    i_from = ((y + ys) * v_from / a - y * v_to) / a.conjugate()
    i_to = (y + ys) * v_to - y * v_from / a
    return i_from, i_to


def polar(mag: float, angle: float) -> complex:
    return mag * complex(math.cos(angle), math.sin(angle))
