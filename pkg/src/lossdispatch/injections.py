"""Nodal injection map ``T(dtheta) = K L(dtheta) + A^T F(dtheta)``.

``K`` is the loss allocation: ``|A|^T / 2`` (half of each line's loss to
each endpoint) or ``eta 1^T`` for loss distribution factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .line_functions import LineFunctionSet
from .network import IncidenceSet, Network


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HalfLine:
    """Half of every line's loss placed at each of its two buses."""


@dataclass(frozen=True)
class LDF:
    """Fixed fractions ``eta`` of the total loss allocated to each bus."""

    eta: np.ndarray

    def __post_init__(self) -> None:
        eta = np.asarray(self.eta, dtype=float)
        object.__setattr__(self, "eta", eta)
        if np.any(eta < 0):
            raise ValueError("loss distribution factors must be non-negative")
        if not np.isclose(eta.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"loss distribution factors sum to {eta.sum()}, not 1")

    @classmethod
    def at_bus(cls, network: Network, bus_id: int) -> "LDF":
        eta = np.zeros(network.n)
        eta[network.bus_index(bus_id)] = 1.0
        return cls(eta)


Allocation = HalfLine | LDF


@dataclass(frozen=True)
class InjectionModel:
    incidence: IncidenceSet
    functions: LineFunctionSet
    allocation: Allocation = HalfLine()

    def __post_init__(self) -> None:
        if isinstance(self.allocation, LDF) and self.allocation.eta.shape != (self.n,):
            raise DimensionMismatch("eta must have one entry per bus")

    @property
    def n(self) -> int:
        return self.incidence.A.shape[1]

    @property
    def m(self) -> int:
        return self.incidence.A.shape[0]

    def _check(self, dtheta, batch: bool = False) -> np.ndarray:
        dtheta = np.asarray(dtheta, dtype=float)
        ok = dtheta.shape[-1:] == (self.m,) and dtheta.ndim <= (2 if batch else 1)
        if not ok:
            raise DimensionMismatch(f"expected {self.m} angle differences, got shape {dtheta.shape}")
        return dtheta

    def allocate(self, per_line: np.ndarray) -> np.ndarray:
        """Map a per-line loss vector (or a batch of rows) to buses."""
        per_line = np.asarray(per_line, dtype=float)
        if isinstance(self.allocation, LDF):
            return np.multiply.outer(per_line.sum(axis=-1), self.allocation.eta)
        return 0.5 * (self.incidence.A_abs.T @ per_line.T).T

    def injections(self, dtheta) -> np.ndarray:
        """Bus injections for one angle-difference vector, or row-wise for a 2-d batch."""
        dtheta = self._check(dtheta, batch=True)
        fs = self.functions
        return self.allocate(fs.loss(dtheta)) + (self.incidence.A.T @ fs.midline_flow(dtheta).T).T

    def jacobian(self, dtheta) -> sp.csr_matrix:
        """n x m sensitivity of the injections to the angle differences."""
        dtheta = self._check(dtheta)
        fs = self.functions
        dl = fs.loss_d1(dtheta)
        df = fs.flow_d1(dtheta)
        flow_part = self.incidence.A.T @ sp.diags(df)
        if isinstance(self.allocation, LDF):
            nz = np.flatnonzero(self.allocation.eta)
            loss_part = sp.csr_matrix(
                (np.outer(self.allocation.eta[nz], dl).ravel(),
                 (np.repeat(nz, self.m), np.tile(np.arange(self.m), len(nz)))),
                shape=(self.n, self.m),
            )
        else:
            loss_part = 0.5 * (self.incidence.A_abs.T @ sp.diags(dl))
        return (flow_part + loss_part).tocsr()

    def jacobian_reduced(self, dtheta) -> sp.csr_matrix:
        """Sensitivity to the reduced angle vector (chain rule through A_dot)."""
        return (self.jacobian(dtheta) @ self.incidence.A_dot).tocsr()

    def weighted_curvature(self, dtheta, weights) -> np.ndarray:
        """Per-line second derivative of ``weights . T(dtheta)``.

        The Hessian of that weighted sum is diagonal in the angle
        differences, so it is returned as an m-vector.
        """
        dtheta = self._check(dtheta)
        w = np.asarray(weights, dtype=float)
        fs = self.functions
        A = self.incidence.A
        net_w = A @ w  # w_i - w_j per line
        if isinstance(self.allocation, LDF):
            loss_w = np.full(self.m, float(self.allocation.eta @ w))
        else:
            loss_w = 0.5 * (self.incidence.A_abs @ w)
        return loss_w * fs.loss_d2(dtheta) + net_w * fs.flow_d2(dtheta)

