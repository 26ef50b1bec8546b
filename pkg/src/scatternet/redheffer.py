"""Redheffer star product for two-port scatterers.

Composition law for a pair of adjoined two-ports, with the cavity between
them resummed by the (1 - rho*r1)^{-1} factors. Serves as an independent
oracle for the assembly pipeline on 1-D chain graphs.

A two-port is stored as the matrix ``[[r, tau], [t, rho]]``: diagonal
entries reflect, off-diagonal entries transmit (left-to-right ``t``,
right-to-left ``tau``).
"""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import ResonanceError
from .graph_model import unitarity_defect, UNITARITY_TOL

RESONANCE_TOL = 1e-14


@dataclass(frozen=True)
class TwoPortScatterer:
    r: complex  # left reflection
    t: complex  # left -> right transmission
    rho: complex  # right reflection
    tau: complex  # right -> left transmission
    lossy: bool = False

    def __post_init__(self):
        if not self.lossy:
            defect = unitarity_defect(self.as_matrix())
            if defect >= UNITARITY_TOL:
                raise ValueError(
                    f"two-port is not unitary (defect {defect:.3e}); "
                    "pass lossy=True to allow this"
                )

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.r, self.tau], [self.t, self.rho]], dtype=complex)

    @classmethod
    def from_matrix(cls, m: np.ndarray, lossy: bool = False) -> "TwoPortScatterer":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got {m.shape}")
        return cls(r=m[0, 0], tau=m[0, 1], t=m[1, 0], rho=m[1, 1], lossy=lossy)


def star(s: TwoPortScatterer, s1: TwoPortScatterer) -> TwoPortScatterer:
    """Compose two adjoined two-ports (s on the left, s1 on the right)."""
    denom = 1.0 - s.rho * s1.r
    if abs(denom) <= RESONANCE_TOL:
        raise ResonanceError(denom)
    inv = 1.0 / denom  # scalar case: (1 - rho r1)^{-1} = (1 - r1 rho)^{-1}
    return TwoPortScatterer(
        r=s.r + s.tau * s1.r * inv * s.t,
        t=s1.t * inv * s.t,
        rho=s1.rho + s1.t * s.rho * inv * s1.tau,
        tau=s.tau * inv * s1.tau,
        lossy=s.lossy or s1.lossy,
    )


def chain(scatterers: Sequence[TwoPortScatterer]) -> TwoPortScatterer:
    """Left fold of :func:`star` over a nonempty sequence."""
    if not scatterers:
        raise ValueError("chain of zero scatterers")
    acc = scatterers[0]
    for i, s in enumerate(scatterers[1:], start=1):
        try:
            acc = star(acc, s)
        except ResonanceError as exc:
            raise ResonanceError(exc.denominator, index=i) from None
    return acc
