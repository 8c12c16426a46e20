"""Particle, wave and entangled states of the quantum-controlled interferometer.

The global state is built by running the logical circuit

    |0>_s (x) (cos a |0> + sin a |1>)_a  ->  H_s  ->  phase(phi)_s  ->  CH

where the ancilla controls the second (Hadamard) beam-splitter. The closed form
``cos a |psi_p>|0> + sin a (H|psi_p>)|1>`` is kept as a separate route so the
two can be compared cell by cell.

Note on phases: ``H|psi_p>`` equals the textbook wave state
``cos(phi/2)|0> - i sin(phi/2)|1>`` only up to the factor ``e^{i phi/2}``. Inside
the superposition that factor is a *relative* phase between the two ancilla
branches, so the closed form carries it explicitly. It is a local phase on the
ancilla and changes neither intensities nor entanglement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qstate as qs

ALPHA_RANGE = (0.0, np.pi / 2)
PHI_RANGE = (-np.pi / 2, 3 * np.pi / 2)
# 64 intervals per axis puts (pi/4, pi/2) exactly on the grid.
DEFAULT_STEPS = 65


class RouteMismatch(RuntimeError):
    """The circuit route and the closed form disagree beyond tolerance."""

    def __init__(self, message: str, cell: tuple[int, int] | None = None):
        super().__init__(message)
        self.cell = cell


@dataclass(frozen=True)
class ExperimentParams:
    alpha: float
    phi: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.phi)):
            raise ValueError("alpha and phi must be finite")
        object.__setattr__(self, "alpha", float(np.clip(self.alpha, *ALPHA_RANGE)))
        object.__setattr__(self, "phi", float(self.phi))


class IntensityPair(NamedTuple):
    i0: float
    i1: float


def particle_state(phi: float) -> np.ndarray:
    """Open interferometer: (|0> + e^{i phi}|1>)/sqrt(2)."""
    return qs.qubit(1 / np.sqrt(2), np.exp(1j * phi) / np.sqrt(2))


def wave_state(phi: float) -> np.ndarray:
    """Closed interferometer: cos(phi/2)|0> - i sin(phi/2)|1>."""
    return qs.qubit(np.cos(phi / 2), -1j * np.sin(phi / 2))


def ancilla_state(alpha: float) -> np.ndarray:
    return qs.qubit(np.cos(alpha), np.sin(alpha))


_H_ON_SYSTEM = qs.on_system(qs.H)


def _params(params_or_alpha, phi=None) -> ExperimentParams:
    if isinstance(params_or_alpha, ExperimentParams):
        return params_or_alpha
    return ExperimentParams(params_or_alpha, phi)


def global_state(params: ExperimentParams) -> np.ndarray:
    """Entangled system-ancilla state produced by the logical circuit."""
    p = _params(params)
    psi = qs.product_state(qs.KET0, ancilla_state(p.alpha))
    psi = qs.apply_gate(psi, _H_ON_SYSTEM)
    psi = qs.apply_gate(psi, np.kron(np.diag([1.0, np.exp(1j * p.phi)]), qs.I2))
    return qs.apply_gate(psi, qs.CH)


def global_state_closed_form(params: ExperimentParams) -> np.ndarray:
    """cos a |psi_p>|0> + sin a e^{i phi/2} |psi_w>|1>."""
    p = _params(params)
    wave_branch = np.exp(1j * p.phi / 2) * wave_state(p.phi)
    psi = np.cos(p.alpha) * np.kron(particle_state(p.phi), qs.KET0) + np.sin(
        p.alpha
    ) * np.kron(wave_branch, qs.KET1)
    return qs.state_vector(psi)


def intensity_closed_form(alpha, phi):
    """I0 = cos^2(a)/2 + cos^2(phi/2) sin^2(a); broadcasts over arrays."""
    alpha = np.asarray(alpha, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return 0.5 * np.cos(alpha) ** 2 + np.cos(phi / 2) ** 2 * np.sin(alpha) ** 2


def system_intensities(state) -> IntensityPair:
    """Detector probabilities for the system photon, ancilla outcomes summed."""
    probs = np.abs(np.asarray(state).reshape(2, 2)) ** 2
    i0, i1 = probs.sum(axis=1)
    return IntensityPair(float(i0), float(i1))


def intensity(params: ExperimentParams) -> IntensityPair:
    return system_intensities(global_state(params))


def scan_grid(alpha_steps: int = DEFAULT_STEPS, phi_steps: int = DEFAULT_STEPS):
    """Evenly spaced (alpha, phi) axes over the scanned window, endpoints included."""
    if alpha_steps < 2 or phi_steps < 2:
        raise ValueError("grids need at least two points per axis")
    return np.linspace(*ALPHA_RANGE, alpha_steps), np.linspace(*PHI_RANGE, phi_steps)


@dataclass(frozen=True)
class IntensitySurface:
    alpha: np.ndarray
    phi: np.ndarray
    i0: np.ndarray  # shape (len(alpha), len(phi))
    i0_closed_form: np.ndarray

    @property
    def i1(self) -> np.ndarray:
        return 1.0 - self.i0

    @property
    def max_route_error(self) -> float:
        return float(np.max(np.abs(self.i0 - self.i0_closed_form)))


def intensity_surface(alpha_grid, phi_grid, tol: float = qs.ALGEBRAIC_TOL) -> IntensitySurface:
    """I0 on every (alpha, phi) cell, circuit route checked against the closed form.

    Raises RouteMismatch naming the first offending cell.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if alpha_grid.size == 0 or phi_grid.size == 0:
        raise ValueError("grids must be nonempty")

    circuit = np.empty((alpha_grid.size, phi_grid.size))
    for i, a in enumerate(alpha_grid):
        for j, f in enumerate(phi_grid):
            circuit[i, j] = intensity(ExperimentParams(a, f)).i0
    closed = intensity_closed_form(
        np.clip(alpha_grid, *ALPHA_RANGE)[:, None], phi_grid[None, :]
    )

    bad = np.argwhere(np.abs(circuit - closed) > tol)
    if bad.size:
        i, j = (int(k) for k in bad[0])
        raise RouteMismatch(
            f"I0 routes disagree at alpha={alpha_grid[i]!r}, phi={phi_grid[j]!r}: "
            f"circuit {circuit[i, j]!r} vs closed form {closed[i, j]!r}",
            cell=(i, j),
        )
    return IntensitySurface(alpha_grid, phi_grid, circuit, closed)


def fringe_visibility(alpha: float, phi_grid) -> float:
    """max_phi I0 - min_phi I0 at fixed alpha."""
    i0 = [intensity(ExperimentParams(alpha, f)).i0 for f in phi_grid]
    return float(max(i0) - min(i0))


def particle_wave_overlap(phi: float) -> float:
    """|<psi_p|psi_w>|; zero exactly when the two behaviours are orthogonal."""
    return abs(qs.overlap(particle_state(phi), wave_state(phi)))
