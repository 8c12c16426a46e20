"""Two-photon linear-optics model of the integrated delayed-choice chip.

Conventions
-----------
* A directional coupler of reflectivity ``eta`` acts on its two modes as
  ``[[sqrt(eta), i sqrt(1-eta)], [i sqrt(1-eta), sqrt(eta)]]``; ``eta`` is the
  probability of staying in the same waveguide.
* A phase shifter multiplies its mode by ``e^{i theta}``.
* Mode layout (6 modes): ancilla rails 0/1, system rails 2/3, CZ auxiliaries
  4/5. Rail 0 of a pair encodes logical |0>, and a detector click on it
  counts as outcome +1.

Two-photon states live on unordered occupied-mode pairs ``(i, j), i <= j``.
Amplitudes evolve through 2x2 permanents of the transfer matrix; the
symmetric-tensor route in :func:`evolve_two_photon_tensor` is an independent
cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

from . import qstate as qs
from .delayed_choice import ExperimentParams

FORMAT_NAME = "qdelay.mode-network"
FORMAT_VERSION = 1

W_PHASE_4 = 5 * np.pi / 4
W_PHASE_7 = 3 * np.pi / 4
ALICE_HEATERS = {"A1": (-np.pi / 2, 0.0), "A2": (np.pi / 4, np.pi / 2)}
BOB_HEATERS = {"B1": np.pi / 4, "B2": -np.pi / 4}

MIN_KEPT_MASS = 1e-14


class NetworkError(ValueError):
    pass


class PostSelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Coupler:
    mode_a: int
    mode_b: int
    reflectivity: float
    label: str | None = None

    def block(self) -> np.ndarray:
        r = np.sqrt(self.reflectivity)
        t = 1j * np.sqrt(1.0 - self.reflectivity)
        return np.array([[r, t], [t, r]])


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    theta: float
    label: str | None = None


Element = Union[Coupler, PhaseShifter]


@dataclass(frozen=True)
class ModeNetwork:
    n_modes: int
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.n_modes < 1:
            raise NetworkError("a network needs at least one mode")
        for el in self.elements:
            if isinstance(el, Coupler):
                modes = (el.mode_a, el.mode_b)
                if el.mode_a == el.mode_b:
                    raise NetworkError(f"coupler {el.label or ''} joins mode {el.mode_a} to itself")
                if not 0.0 <= el.reflectivity <= 1.0:
                    raise NetworkError(f"reflectivity {el.reflectivity} outside [0, 1]")
            elif isinstance(el, PhaseShifter):
                modes = (el.mode,)
                if not np.isfinite(el.theta):
                    raise NetworkError("phase must be finite")
            else:
                raise NetworkError(f"unknown element {el!r}")
            for m in modes:
                if not 0 <= m < self.n_modes:
                    raise NetworkError(f"mode index {m} out of range for {self.n_modes} modes")

    def then(self, *elements: Element) -> "ModeNetwork":
        return ModeNetwork(self.n_modes, self.elements + tuple(elements))

    def find(self, label: str) -> Element:
        for el in self.elements:
            if el.label == label:
                return el
        raise KeyError(label)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        items = []
        for el in self.elements:
            if isinstance(el, Coupler):
                d = {"type": "coupler", "modes": [el.mode_a, el.mode_b],
                     "reflectivity": el.reflectivity}
            else:
                d = {"type": "phase", "mode": el.mode, "theta": el.theta}
            if el.label is not None:
                d["label"] = el.label
            items.append(d)
        return {"format": FORMAT_NAME, "version": FORMAT_VERSION,
                "n_modes": self.n_modes, "elements": items}

    @classmethod
    def from_dict(cls, d: dict) -> "ModeNetwork":
        if d.get("format", FORMAT_NAME) != FORMAT_NAME:
            raise NetworkError(f"unsupported format {d.get('format')!r}")
        if d.get("version", FORMAT_VERSION) != FORMAT_VERSION:
            raise NetworkError(f"unsupported format version {d.get('version')!r}")
        try:
            elements = []
            for item in d["elements"]:
                kind = item["type"]
                if kind == "coupler":
                    a, b = item["modes"]
                    elements.append(Coupler(int(a), int(b), float(item["reflectivity"]),
                                            item.get("label")))
                elif kind == "phase":
                    elements.append(PhaseShifter(int(item["mode"]), float(item["theta"]),
                                                 item.get("label")))
                else:
                    raise NetworkError(f"unknown element type {kind!r}")
            return cls(int(d["n_modes"]), tuple(elements))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"malformed network document: {exc}") from exc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ModeNetwork":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ModeNetwork":
        return cls.from_json(Path(path).read_text())


def transfer_matrix(network: ModeNetwork) -> np.ndarray:
    """Single-photon unitary of the network, later elements to the left."""
    u = np.eye(network.n_modes, dtype=complex)
    for el in network.elements:
        if isinstance(el, Coupler):
            rows = [el.mode_a, el.mode_b]
            u[rows, :] = el.block() @ u[rows, :]
        else:
            u[el.mode, :] *= np.exp(1j * el.theta)
    return u


# --- two-photon Fock space ------------------------------------------------


@lru_cache(maxsize=None)
def basis_pairs(n_modes: int) -> tuple:
    return tuple((i, j) for i in range(n_modes) for j in range(i, n_modes))


@lru_cache(maxsize=None)
def _pair_lookup(n_modes: int) -> dict:
    return {p: k for k, p in enumerate(basis_pairs(n_modes))}


def pair_index(n_modes: int, i: int, j: int) -> int:
    return _pair_lookup(n_modes)[(min(i, j), max(i, j))]


@dataclass(frozen=True)
class TwoPhotonState:
    n_modes: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex)
        if a.shape != (len(basis_pairs(self.n_modes)),):
            raise qs.StateError("amplitude vector does not match the two-photon basis")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @classmethod
    def occupied(cls, n_modes: int, i: int, j: int) -> "TwoPhotonState":
        a = np.zeros(len(basis_pairs(n_modes)), dtype=complex)
        a[pair_index(n_modes, i, j)] = 1.0
        return cls(n_modes, a)

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> dict:
        return {p: abs(a) ** 2 for p, a in zip(basis_pairs(self.n_modes), self.amps)}

    def amplitude(self, i: int, j: int) -> complex:
        return complex(self.amps[pair_index(self.n_modes, i, j)])


def _pair_norm(i: int, j: int) -> float:
    return np.sqrt(2.0) if i == j else 1.0


def evolve_two_photon(state: TwoPhotonState, u) -> TwoPhotonState:
    """Propagate a two-photon state through transfer matrix ``u`` (permanents)."""
    u = np.asarray(u, dtype=complex)
    n = state.n_modes
    if u.shape != (n, n):
        raise NetworkError(f"transfer matrix shape {u.shape} does not match {n} modes")
    pairs = basis_pairs(n)
    ks = np.array([p[0] for p in pairs])
    ls = np.array([p[1] for p in pairs])
    out_norm = np.where(ks == ls, np.sqrt(2.0), 1.0)
    out = np.zeros(len(pairs), dtype=complex)
    for amp, (i, j) in zip(state.amps, pairs):
        if amp == 0:
            continue
        perm = u[ks, i] * u[ls, j] + u[ks, j] * u[ls, i]
        out += amp * perm / (out_norm * _pair_norm(i, j))
    return TwoPhotonState(n, out)


def _symmetric_embedding(n_modes: int) -> np.ndarray:
    """Isometry from the Fock pair basis into the n^2 tensor space."""
    pairs = basis_pairs(n_modes)
    e = np.zeros((n_modes * n_modes, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        if i == j:
            e[i * n_modes + i, k] = 1.0
        else:
            e[i * n_modes + j, k] = e[j * n_modes + i, k] = 1 / np.sqrt(2)
    return e


def evolve_two_photon_tensor(state: TwoPhotonState, u) -> TwoPhotonState:
    """Same evolution as U (x) U on the symmetric subspace of two labelled photons."""
    e = _symmetric_embedding(state.n_modes)
    u2 = np.kron(np.asarray(u, dtype=complex), np.asarray(u, dtype=complex))
    return TwoPhotonState(state.n_modes, e.T @ (u2 @ (e @ state.amps)))


# --- dual-rail encoding ---------------------------------------------------


@dataclass(frozen=True)
class DualRailMap:
    system: tuple = (2, 3)
    ancilla: tuple = (0, 1)
    auxiliary: tuple = (4, 5)

    def __post_init__(self):
        modes = list(self.system) + list(self.ancilla) + list(self.auxiliary)
        if len(self.system) != 2 or len(self.ancilla) != 2:
            raise NetworkError("each qubit needs exactly two rails")
        if len(set(modes)) != len(modes):
            raise NetworkError("dual-rail modes must be distinct")

    @property
    def n_modes(self) -> int:
        return max(self.system + self.ancilla + self.auxiliary) + 1

    def logical_pairs(self):
        """Mode pair for each logical index 2*s + a."""
        return [(self.system[s], self.ancilla[a]) for s in (0, 1) for a in (0, 1)]


CHIP_MAP = DualRailMap()


def encode(two_qubit_state, rails: DualRailMap = CHIP_MAP, n_modes: int | None = None) -> TwoPhotonState:
    n = n_modes or rails.n_modes
    amps = np.zeros(len(basis_pairs(n)), dtype=complex)
    for c, (ms, ma) in zip(np.asarray(two_qubit_state), rails.logical_pairs()):
        amps[pair_index(n, ms, ma)] = c
    return TwoPhotonState(n, amps)


def coincidence_amplitudes(state: TwoPhotonState, rails: DualRailMap = CHIP_MAP) -> np.ndarray:
    """Unnormalised amplitudes of the four one-photon-per-qubit events."""
    return np.array([state.amplitude(ms, ma) for ms, ma in rails.logical_pairs()])


def post_select(state: TwoPhotonState, rails: DualRailMap = CHIP_MAP):
    """Keep coincidence events; return (logical state, success probability)."""
    kept = coincidence_amplitudes(state, rails)
    mass = float(np.vdot(kept, kept).real)
    if mass < MIN_KEPT_MASS:
        raise PostSelectionError(f"post-selected mass {mass:.3e} is negligible; check wiring")
    return qs.state_vector(kept / np.sqrt(mass)), mass


def post_selected_map(network: ModeNetwork, rails: DualRailMap = CHIP_MAP) -> np.ndarray:
    """4x4 (sub-unitary) logical action of the network on coincidence events."""
    u = transfer_matrix(network)
    cols = []
    for ms, ma in rails.logical_pairs():
        out = evolve_two_photon(TwoPhotonState.occupied(network.n_modes, ms, ma), u)
        cols.append(coincidence_amplitudes(out, rails))
    return np.array(cols).T


# --- the chip -------------------------------------------------------------


def mzi(mode_a: int, mode_b: int, theta: float, heater_mode: int, labels=("", "", "")):
    """Balanced MZI: coupler, heater on ``heater_mode``, coupler."""
    la, lp, lb = labels
    return (
        Coupler(mode_a, mode_b, 0.5, la or None),
        PhaseShifter(heater_mode, theta, lp or None),
        Coupler(mode_a, mode_b, 0.5, lb or None),
    )


def cz_elements(rails: DualRailMap = CHIP_MAP):
    """Post-selected CZ: three 1/3 couplers, success probability 1/9."""
    s0, s1 = rails.system
    a0, a1 = rails.ancilla
    x0, x1 = rails.auxiliary
    return (
        Coupler(a1, s1, 1 / 3, "dc6"),
        Coupler(a0, x0, 1 / 3, "dc7"),
        Coupler(s0, x1, 1 / 3, "dc8"),
    )


def ch_block_elements(w_phase_error: float = 0.0, rails: DualRailMap = CHIP_MAP):
    """W-MZI, CZ, W-MZI on the system rails: a controlled-Hadamard.

    The two W interferometers carry their heaters on opposite rails; with the
    coupler convention above that makes 5pi/4 and 3pi/4 both realise W.
    """
    s0, s1 = rails.system
    return (
        *mzi(s0, s1, W_PHASE_4 + w_phase_error, s1, ("dc4", "ps4", "dc5")),
        *cz_elements(rails),
        *mzi(s0, s1, W_PHASE_7 + w_phase_error, s0, ("dc9", "ps7", "dc10")),
    )


def build_ch_block(w_phase_error: float = 0.0) -> ModeNetwork:
    return ModeNetwork(6, ch_block_elements(w_phase_error))


def preparation_elements(params: ExperimentParams, rails: DualRailMap = CHIP_MAP):
    s0, s1 = rails.system
    a0, a1 = rails.ancilla
    return (
        # 50/50 coupler plus a fixed -pi/2 trim is an exact Hadamard on |0>.
        Coupler(s0, s1, 0.5, "dc1"),
        PhaseShifter(s1, -np.pi / 2, "ps9"),
        PhaseShifter(s1, params.phi, "ps_phi"),
        # MZI heater pi - 2 alpha leaves the ancilla in cos a|0> + sin a|1>.
        *mzi(a0, a1, np.pi - 2 * params.alpha, a0, ("dc2", "ps_alpha", "dc3")),
    )


def alice_elements(setting: str, rails: DualRailMap = CHIP_MAP):
    if setting not in ALICE_HEATERS:
        raise ValueError(f"unknown Alice setting {setting!r}; expected one of {sorted(ALICE_HEATERS)}")
    phi5, phi6 = ALICE_HEATERS[setting]
    s0, s1 = rails.system
    return (
        # measurement frame H S^dag
        PhaseShifter(s1, np.pi, "ps10"),
        Coupler(s0, s1, 0.5, "dc11"),
        PhaseShifter(s1, -np.pi / 2, "ps11"),
        PhaseShifter(s0, phi5, "ps5"),
        Coupler(s0, s1, 0.5, "dc12"),
        PhaseShifter(s1, phi6, "ps6"),
        Coupler(s0, s1, 0.5, "dc13"),
    )


def bob_elements(setting: str, rails: DualRailMap = CHIP_MAP):
    if setting not in BOB_HEATERS:
        raise ValueError(f"unknown Bob setting {setting!r}; expected one of {sorted(BOB_HEATERS)}")
    a0, a1 = rails.ancilla
    return (
        PhaseShifter(a1, np.pi, "ps12"),  # measurement frame Z
        *mzi(a0, a1, BOB_HEATERS[setting], a0, ("dc14", "ps8", "dc15")),
    )


def build_chip(
    params: ExperimentParams,
    alice: str | None = None,
    bob: str | None = None,
    w_phase_error: float = 0.0,
) -> ModeNetwork:
    """Full six-mode chip; ``None`` settings leave that photon unrotated."""
    elements = preparation_elements(params) + ch_block_elements(w_phase_error)
    if alice is not None:
        elements += alice_elements(alice)
    if bob is not None:
        elements += bob_elements(bob)
    return ModeNetwork(6, elements)


CHIP_INPUT = (CHIP_MAP.system[0], CHIP_MAP.ancilla[0])


def run_chip(network: ModeNetwork, rails: DualRailMap = CHIP_MAP):
    """Inject one photon in each |0> rail; return (post-selected state, success)."""
    src = TwoPhotonState.occupied(network.n_modes, *CHIP_INPUT)
    return post_select(evolve_two_photon(src, transfer_matrix(network)), rails)


def photonic_global_state(params: ExperimentParams):
    return run_chip(build_chip(params))


def photonic_intensity(params: ExperimentParams) -> float:
    psi, _ = photonic_global_state(params)
    return float(np.sum(np.abs(psi.reshape(2, 2)[0]) ** 2))


_OUTCOME_SIGNS = np.array([1, -1, -1, 1])


def photonic_correlators(params: ExperimentParams, w_phase_error: float = 0.0) -> np.ndarray:
    e = np.empty((2, 2))
    for x, a in enumerate(("A1", "A2")):
        for y, b in enumerate(("B1", "B2")):
            psi, _ = run_chip(build_chip(params, a, b, w_phase_error))
            e[x, y] = float(np.sum(_OUTCOME_SIGNS * np.abs(psi) ** 2))
    return e


def photonic_chsh(params: ExperimentParams, w_phase_error: float = 0.0) -> float:
    from .bell import chsh_from_correlators

    return chsh_from_correlators(photonic_correlators(params, w_phase_error))


def photonic_chsh_surface(alpha_grid, phi_grid) -> np.ndarray:
    return np.array(
        [[photonic_chsh(ExperimentParams(a, f)) for f in phi_grid] for a in alpha_grid]
    )


def ch_block_report(w_phase_error: float = 0.0):
    """(fidelity with logical CH, per-input success probabilities)."""
    m = post_selected_map(build_ch_block(w_phase_error))
    success = np.sum(np.abs(m) ** 2, axis=0)
    fidelity = abs(np.trace(qs.CH.conj().T @ m)) ** 2 / (4 * np.sum(success))
    return float(fidelity), success
