"""CHSH test of the system-ancilla state and the classical models it rules out.

Alice holds the system photon, Bob the ancilla. The CHSH combination is

    S = <a0 b0> + <a0 b1> + <a1 b0> - <a1 b1>

Measurement frames
------------------
The published optimal settings are written as Pauli combinations

    A1 = -Z,  A2 = (-X - Y)/sqrt(2),  B1 = (X - Z)/sqrt(2),  B2 = (-X - Z)/sqrt(2)

but the frame of those Paulis is not the logical frame in which the global state
is written: read literally on the logical state, these settings never exceed S = sqrt(2)
(see :func:`bare_frame_settings`); no relabelling of the four settings gets
past 1 + sqrt(2). We read them in a fixed measurement
frame per party, ``O -> F^dag O F``, with

    F_alice = H S^dag   (Alice's axes relabelled X->Z, Y->X, Z->Y)
    F_bob   = Z         (Bob's X and Y axes reversed)

With A1->a0, A2->a1, B1->b0, B2->b1 this gives S = 2 sqrt(2) at alpha = pi/4,
phi = pi/2. A fixed local frame is a local unitary, so it changes neither
the local bound nor the quantum bound. The photonic chip realises both frames
with fixed heaters placed ahead of the setting interferometers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qstate as qs
from .delayed_choice import ExperimentParams, global_state, particle_state, wave_state

TSIRELSON = 2 * np.sqrt(2)
LOCAL_BOUND = 2.0
SIGNS = np.array([[1, 1], [1, -1]])

A1 = qs.observable(-qs.Z)
A2 = qs.observable((-qs.X - qs.Y) / np.sqrt(2))
B1 = qs.observable((qs.X - qs.Z) / np.sqrt(2))
B2 = qs.observable((-qs.X - qs.Z) / np.sqrt(2))

ALICE_FRAME = qs.unitary(qs.H @ qs.S.conj().T)
BOB_FRAME = qs.unitary(qs.Z)


def in_frame(o, frame) -> np.ndarray:
    frame = np.asarray(frame)
    return qs.observable(frame.conj().T @ o @ frame)


@dataclass(frozen=True)
class MeasurementSettings:
    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            object.__setattr__(self, name, qs.observable(getattr(self, name)))

    @property
    def alice(self):
        return (self.a0, self.a1)

    @property
    def bob(self):
        return (self.b0, self.b1)


def chsh_settings() -> MeasurementSettings:
    """Published optimal settings, each read in its party's measurement frame."""
    return MeasurementSettings(
        a0=in_frame(A1, ALICE_FRAME),
        a1=in_frame(A2, ALICE_FRAME),
        b0=in_frame(B1, BOB_FRAME),
        b1=in_frame(B2, BOB_FRAME),
    )


def bare_frame_settings() -> MeasurementSettings:
    """The same Pauli combinations taken in the logical frame (not optimal)."""
    return MeasurementSettings(A1, A2, B1, B2)


def random_settings(rng: np.random.Generator) -> MeasurementSettings:
    return MeasurementSettings(*(qs.random_observable(rng) for _ in range(4)))


def correlators(state, settings: MeasurementSettings) -> np.ndarray:
    """2x2 array E[x, y] = <a_x (x) b_y>."""
    return np.array(
        [[qs.expectation(state, a, b) for b in settings.bob] for a in settings.alice]
    )


def chsh_from_correlators(e) -> float:
    return float(np.sum(SIGNS * np.asarray(e)))


def chsh_value(state, settings: MeasurementSettings | None = None) -> float:
    settings = settings or chsh_settings()
    return chsh_from_correlators(correlators(state, settings))


def max_chsh(state) -> float:
    """Largest S over all dichotomic settings (Horodecki criterion).

    Independent of any particular settings; used as an oracle for the
    Tsirelson ceiling and for checking that the chosen settings are optimal.
    """
    paulis = (qs.X, qs.Y, qs.Z)
    t = np.array([[qs.expectation(state, a, b) for b in paulis] for a in paulis])
    sv = np.linalg.svd(t, compute_uv=False)
    return float(2 * np.sqrt(sv[0] ** 2 + sv[1] ** 2))


@dataclass(frozen=True)
class ChshSurface:
    alpha: np.ndarray
    phi: np.ndarray
    s: np.ndarray  # shape (len(alpha), len(phi))

    def argmax(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(int(np.argmax(self.s)), self.s.shape)
        return float(self.alpha[i]), float(self.phi[j]), float(self.s[i, j])

    def violation_mask(self) -> np.ndarray:
        return self.s > LOCAL_BOUND


def chsh_surface(alpha_grid, phi_grid, settings: MeasurementSettings | None = None) -> ChshSurface:
    settings = settings or chsh_settings()
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if alpha_grid.size == 0 or phi_grid.size == 0:
        raise ValueError("grids must be nonempty")
    s = np.array(
        [
            [chsh_value(global_state(ExperimentParams(a, f)), settings) for f in phi_grid]
            for a in alpha_grid
        ]
    )
    return ChshSurface(alpha_grid, phi_grid, s)


class DeterministicStrategy(NamedTuple):
    """Predetermined outcomes: Alice answers outputs_a[x], Bob outputs_b[y]."""

    outputs_a: tuple[int, int]
    outputs_b: tuple[int, int]

    def correlators(self) -> np.ndarray:
        return np.outer(self.outputs_a, self.outputs_b)

    def chsh(self) -> int:
        return int(np.sum(SIGNS * self.correlators()))


def deterministic_strategies() -> list[DeterministicStrategy]:
    """All 16 local deterministic assignments of +-1 outcomes."""
    out = []
    for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4):
        out.append(DeterministicStrategy((a0, a1), (b0, b1)))
    return out


class LhvResult(NamedTuple):
    value: float
    maximizers: list[DeterministicStrategy]


def lhv_maximum(settings: MeasurementSettings | None = None) -> LhvResult:
    """Best CHSH value of any local hidden-variable model, by enumeration.

    A deterministic model fixes every outcome in advance, so the observables
    in ``settings`` only label the four questions; they are validated but do
    not enter the value. Mixtures of strategies cannot beat the best vertex.
    """
    if settings is not None and not isinstance(settings, MeasurementSettings):
        raise TypeError("settings must be MeasurementSettings")
    values = {strat: strat.chsh() for strat in deterministic_strategies()}
    best = max(values.values())
    return LhvResult(float(best), [s for s, v in values.items() if v == best])


def lhv_mixture_chsh(weights) -> float:
    """S of a convex mixture of the 16 deterministic strategies."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (16,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector of length 16")
    return float(sum(wi * s.chsh() for wi, s in zip(w, deterministic_strategies())))


# --- classical-mixture loophole -------------------------------------------


def density_expectation(rho, a, b) -> float:
    value = np.trace(np.asarray(rho) @ np.kron(a, b))
    if abs(value.imag) > qs.SPECTRAL_TOL:
        raise qs.StateError("density expectation has an imaginary residue")
    return float(value.real)


def chsh_value_density(rho, settings: MeasurementSettings | None = None) -> float:
    settings = settings or chsh_settings()
    e = [[density_expectation(rho, a, b) for b in settings.bob] for a in settings.alice]
    return chsh_from_correlators(e)


def classical_mixture_state(params: ExperimentParams) -> np.ndarray:
    """Separable mixture: particle setup w.p. cos^2 a, wave setup w.p. sin^2 a."""
    particle = np.kron(particle_state(params.phi), qs.KET0)
    wave = np.kron(wave_state(params.phi), qs.KET1)
    return np.cos(params.alpha) ** 2 * qs.density(particle) + np.sin(
        params.alpha
    ) ** 2 * qs.density(wave)


def classical_mixture_s(params: ExperimentParams, settings: MeasurementSettings | None = None) -> float:
    return chsh_value_density(classical_mixture_state(params), settings)


def mixture_intensity(params: ExperimentParams) -> float:
    """Probability that the system photon exits at D0, for the mixture."""
    rho = classical_mixture_state(params)
    return float(np.trace(rho @ np.kron(qs.P0, qs.I2)).real)
