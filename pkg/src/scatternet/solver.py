"""Steady-state solution of the assembled walk by block matrix inversion.

After reordering edges open-first, the evolution operator has the exact
block form ``[[I, A2], [0, A1]]``: the identity block holds the frozen
open-port sinks, ``A1`` circulates amplitudes inside the graph and ``A2``
drains them into the open ports. The long-time output amplitudes are

    X_S = X_F + A2 (I - A1)^{-1} X_B

which resums every internal round trip without diagonalizing anything.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import zgecon

from .errors import (
    BlockStructureError,
    ConvergenceError,
    NetworkValidationError,
    SingularSystemError,
)
from .assembly import AssembledSystem, assemble, propagate_activations
from .graph_model import NetworkGraph, build_incidence

CONDITION_LIMIT = 1e14


@dataclass(frozen=True)
class BlockDecomposition:
    """Open-first permutation of an assembled system."""

    permutation: tuple[int, ...]  # 0-based edge indices, open first
    A1: np.ndarray  # internal -> internal
    A2: np.ndarray  # internal -> open
    XF: np.ndarray  # initial open-port amplitudes
    XB: np.ndarray  # initial internal amplitudes


@dataclass(frozen=True)
class ScatteringSolution:
    """Steady-state open-port amplitudes plus conditioning diagnostics."""

    amplitudes: dict[int, complex]  # open edge id -> amplitude
    residual: float
    condition_estimate: float
    spectral_radius: float | None = None
    iterations: int | None = None

    def vector(self) -> np.ndarray:
        """Amplitudes ordered by ascending open edge id."""
        return np.array([self.amplitudes[e] for e in sorted(self.amplitudes)])

    @property
    def probabilities(self) -> dict[int, float]:
        return {e: abs(a) ** 2 for e, a in self.amplitudes.items()}


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenvalues of the internal circulation operator (diagnostic only)."""

    eigenvalues: tuple[complex, ...]


def block_decompose(system: AssembledSystem) -> BlockDecomposition:
    """Extract the open/internal blocks, verifying the exact pattern.

    The open x open block must be exactly the identity and the internal x
    open block exactly zero; anything else signals a boundary-condition bug
    upstream and raises :class:`BlockStructureError`.
    """
    perm = tuple(e - 1 for e in system.open_edges) + tuple(
        e - 1 for e in system.internal_edges
    )
    p = len(system.open_edges)
    ap = system.A[np.ix_(perm, perm)]
    eye = np.eye(p, dtype=complex)
    bad = np.argwhere(ap[:p, :p] != eye)
    if bad.size:
        i, j = bad[0]
        raise BlockStructureError(
            f"block structure violated: open block entry ({i}, {j}) is "
            f"{ap[i, j]} (edges {perm[i] + 1}, {perm[j] + 1})"
        )
    bad = np.argwhere(ap[p:, :p] != 0)
    if bad.size:
        i, j = bad[0]
        raise BlockStructureError(
            f"block structure violated: internal x open entry ({i}, {j}) is "
            f"{ap[p + i, j]} (edges {perm[p + i] + 1}, {perm[j] + 1})"
        )
    x0 = system.X0[list(perm)]
    return BlockDecomposition(perm, ap[p:, p:], ap[:p, p:], x0[:p], x0[p:])


class _SteadyStateFactorization:
    """LU factorization of I - A1, reusable across input ports."""

    def __init__(self, a1: np.ndarray):
        self.a1 = a1
        q = a1.shape[0]
        m = np.eye(q, dtype=complex) - a1
        self.m = m
        if q == 0:
            self.condition = 1.0
            return
        anorm = float(np.linalg.norm(m, 1))
        try:
            with warnings.catch_warnings():
                # Exactly singular systems are reported via zgecon below.
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self.lu, self.piv = sla.lu_factor(m)
        except np.linalg.LinAlgError as exc:  # exactly singular
            raise SingularSystemError(float("inf"), str(exc)) from None
        rcond, info = zgecon(self.lu, anorm, norm="1")
        if info != 0 or not np.isfinite(rcond) or rcond == 0.0:
            raise SingularSystemError(float("inf"))
        self.condition = 1.0 / float(rcond)
        if self.condition > CONDITION_LIMIT:
            raise SingularSystemError(self.condition)

    def solve(self, xb: np.ndarray) -> tuple[np.ndarray, float]:
        y = sla.lu_solve((self.lu, self.piv), xb)
        residual = float(np.max(np.abs(self.m @ y - xb), initial=0.0))
        return y, residual


def solve_steady_state(
    system: AssembledSystem,
    factorization: _SteadyStateFactorization | None = None,
) -> ScatteringSolution:
    """Closed-form steady state X_S = X_F + A2 (I - A1)^{-1} X_B."""
    blocks = block_decompose(system)
    q = blocks.A1.shape[0]
    if q == 0:
        amplitudes = dict(zip(system.open_edges, blocks.XF))
        return ScatteringSolution(amplitudes, 0.0, 1.0, spectral_radius=0.0)
    fact = factorization or _SteadyStateFactorization(blocks.A1)
    y, residual = fact.solve(blocks.XB)
    xs = blocks.XF + blocks.A2 @ y
    amplitudes = {e: complex(a) for e, a in zip(system.open_edges, xs)}
    rho = float(np.max(np.abs(np.linalg.eigvals(blocks.A1))))
    return ScatteringSolution(amplitudes, residual, fact.condition, spectral_radius=rho)


def solve_by_iteration(
    system: AssembledSystem, tol: float = 1e-12, max_steps: int = 100_000
) -> ScatteringSolution:
    """Fixed-point cross-check: apply A repeatedly until the open-port
    amplitudes change by less than ``tol`` in max-norm."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    open_idx = [e - 1 for e in system.open_edges]
    x = system.X0.copy()
    prev = x[open_idx].copy()
    # Outputs can change only every other application of A (the internal
    # round trip has period 2), so demand two consecutive quiet steps.
    delta_prev = float("inf")
    for step in range(1, max_steps + 1):
        x = system.A @ x
        cur = x[open_idx]
        delta = float(np.max(np.abs(cur - prev), initial=0.0))
        if max(delta, delta_prev) < tol:
            amplitudes = {e: complex(a) for e, a in zip(system.open_edges, cur)}
            return ScatteringSolution(
                amplitudes, delta, float("nan"), iterations=step
            )
        prev = cur.copy()
        delta_prev = delta
    raise ConvergenceError(max_steps, delta)


def internal_modes(system: AssembledSystem) -> ModeSpectrum:
    """Eigenvalues of A1: the coupled-cavity normal modes of the network."""
    if not system.internal_edges:
        raise NetworkValidationError("no internal edges: the mode spectrum is empty")
    blocks = block_decompose(system)
    return ModeSpectrum(tuple(np.linalg.eigvals(blocks.A1)))


def full_scattering_matrix(graph: NetworkGraph) -> np.ndarray:
    """Aggregate S-matrix found by probing every open port.

    Column k is the steady-state output for injection at the k-th open edge
    (ascending edge id). The (I - A1) factorization is cached and reused
    across ports that share the same internal block.
    """
    inc = build_incidence(graph)
    open_edges = inc.open_edges
    activation_cache: dict[int, object] = {}
    fact_cache: dict[bytes, _SteadyStateFactorization] = {}
    columns = []
    for e in open_edges:
        node = inc.owner_of_open_edge(e)
        act = activation_cache.get(node)
        if act is None:
            act = propagate_activations(graph, node, inc)
            activation_cache[node] = act
        system = assemble(graph, e, inc, act)
        blocks = block_decompose(system)
        key = blocks.A1.tobytes()
        fact = fact_cache.get(key)
        if fact is None:
            try:
                fact = _SteadyStateFactorization(blocks.A1)
            except SingularSystemError as exc:
                raise SingularSystemError(
                    exc.condition_estimate, f"while probing open edge {e}"
                ) from None
            fact_cache[key] = fact
        solution = solve_steady_state(system, fact)
        columns.append(solution.vector())
    return np.column_stack(columns)
