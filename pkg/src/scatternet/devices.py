"""Standard scatterer constructors and the Grover-Michelson reference device.

The analytic Grover-Michelson coefficients serve as ground truth for
validating the assembly and solver pipeline: the interferometer contains an
infinite family of internal photon paths yet has a closed-form transmission.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .graph_model import PASS_THROUGH, LocalScatterer, NetworkGraph


def grover_coin(nports: int) -> np.ndarray:
    """The n-port equal-splitting reflection operator (2/n)J - I.

    An involution: G @ G = I, G = G.T = G.conj().T.
    """
    if nports < 2:
        raise ValueError(f"grover coin needs at least 2 ports, got {nports}")
    return (2.0 / nports) * np.ones((nports, nports)) - np.eye(nports, dtype=complex)


def beamsplitter_5050() -> np.ndarray:
    """4-port 50:50 beam splitter; ports (1, 2) couple to ports (3, 4)."""
    return np.array(
        [
            [0, 0, 1, 1],
            [0, 0, 1, -1],
            [1, 1, 0, 0],
            [1, -1, 0, 0],
        ],
        dtype=complex,
    ) / np.sqrt(2.0)


def phase_node(phi: float) -> np.ndarray:
    """Transmissive phase element: off-diagonal exp(i*phi/2), zero diagonal.

    The half angle makes a mirror-terminated round trip through the element
    accumulate exp(i*phi).
    """
    t = np.exp(0.5j * phi)
    return np.array([[0.0, t], [t, 0.0]], dtype=complex)


def mirror() -> np.ndarray:
    """Perfect single-port reflector, scalar -1."""
    return np.array([[-1.0]], dtype=complex)


_DEVICES = {
    "mirror": (mirror, 0),
    "bs5050": (beamsplitter_5050, 0),
    "passthrough": (lambda: PASS_THROUGH.copy(), 0),
    "grover": (lambda n: grover_coin(int(n)), 1),
    "phase": (phase_node, 1),
}


def device_matrix(
    spec: str, params: Mapping[str, float] | None = None
) -> np.ndarray:
    """Resolve a device spec like ``grover:4`` or ``phase:$phi1`` to a matrix."""
    name, _, arg = spec.partition(":")
    if name not in _DEVICES:
        raise KeyError(f"unknown device '{name}'")
    ctor, nargs = _DEVICES[name]
    if nargs == 0:
        if arg:
            raise KeyError(f"device '{name}' takes no argument")
        return ctor()
    if not arg:
        raise KeyError(f"device '{name}' requires an argument")
    if arg.startswith("$"):
        pname = arg[1:]
        if params is None or pname not in params:
            raise KeyError(f"unbound parameter '${pname}' in device '{spec}'")
        value = params[pname]
    else:
        value = float(arg)
    return ctor(value)


@dataclass(frozen=True)
class AnalyticGMCoefficients:
    """Closed-form Grover-Michelson amplitudes at arm phases (phi1, phi2)."""

    B: complex  # (e^{i phi1} + e^{i phi2}) / 2
    C: complex  # (e^{i phi1} - e^{i phi2}) / 2
    t: complex  # transmission amplitude
    r: complex  # reflection amplitude


def gm_analytic(phi1: float, phi2: float) -> AnalyticGMCoefficients:
    """Analytic Grover-Michelson scattering coefficients.

    Singular when both arm phases are 0 mod 2*pi, where the interferometer
    traps light indefinitely and no steady state exists.
    """
    b = 0.5 * (np.exp(1j * phi1) + np.exp(1j * phi2))
    c = 0.5 * (np.exp(1j * phi1) - np.exp(1j * phi2))
    if abs(b - 1.0) < 1e-12:
        raise SingularSystemError(
            float("inf"),
            f"Grover-Michelson is singular at phi1 = phi2 = 0 (mod 2pi); "
            f"got ({phi1}, {phi2})",
        )
    common = c * c / (2.0 * b - 2.0) - 0.5 * b
    return AnalyticGMCoefficients(
        B=complex(b), C=complex(c), t=complex(common + 0.5), r=complex(common - 0.5)
    )


def build_grover_michelson(phi1: float, phi2: float) -> NetworkGraph:
    """Grover-Michelson interferometer graph.

    Node 1 is the four-port Grover coin with open ports on edges 1 and 2;
    nodes 2 and 3 are the arm phase elements; nodes 4 and 5 are end mirrors.
    All propagation phases are 1 (arm phases live in the phase nodes).
    """
    scatterers = (
        LocalScatterer(1, grover_coin(4), (1, 2, 3, 4), name="g"),
        LocalScatterer(2, phase_node(phi1), (3, 5), name="p1"),
        LocalScatterer(3, phase_node(phi2), (4, 6), name="p2"),
        LocalScatterer(4, mirror(), (5,), name="m1"),
        LocalScatterer(5, mirror(), (6,), name="m2"),
    )
    return NetworkGraph(5, 6, scatterers, np.ones(6, dtype=complex))
