"""Dense linear algebra for one- and two-qubit pure states.

States and operators are plain complex NumPy arrays. The constructors in this
module validate them once (normalisation, unitarity, dichotomic spectrum) and
hand back read-only copies, so everything downstream can treat them as values.

Two-qubit vectors are ordered ``|system, ancilla>``: index ``2 * s + a``.
"""

from __future__ import annotations

import numpy as np

ALGEBRAIC_TOL = 1e-12
SPECTRAL_TOL = 1e-10


class StateError(ValueError):
    """Raised when a vector or matrix violates a construction-time invariant."""


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise StateError(f"{what} contains NaN or Inf entries")


def qubit(amp0: complex, amp1: complex) -> np.ndarray:
    """Return the validated single-qubit state ``amp0|0> + amp1|1>``."""
    return state_vector([amp0, amp1])


def state_vector(amps) -> np.ndarray:
    """Validate a 2- or 4-component normalised state vector."""
    v = np.asarray(amps, dtype=complex).reshape(-1)
    if v.shape not in ((2,), (4,)):
        raise StateError(f"expected 2 or 4 amplitudes, got {v.shape[0]}")
    _check_finite(v, "state")
    norm = np.vdot(v, v).real
    if abs(norm - 1.0) > ALGEBRAIC_TOL:
        raise StateError(f"state not normalised: <psi|psi> = {norm!r}")
    return _frozen(v)


def unitary(m) -> np.ndarray:
    """Validate a 2x2 or 4x4 unitary matrix."""
    u = np.asarray(m, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] not in (2, 4):
        raise StateError(f"expected a 2x2 or 4x4 matrix, got shape {u.shape}")
    _check_finite(u, "unitary")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > ALGEBRAIC_TOL:
        raise StateError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
    return _frozen(u)


def observable(m) -> np.ndarray:
    """Validate a 2x2 Hermitian operator with spectrum {+1, -1}."""
    o = np.asarray(m, dtype=complex)
    if o.shape != (2, 2):
        raise StateError(f"observable must be 2x2, got {o.shape}")
    _check_finite(o, "observable")
    if np.max(np.abs(o - o.conj().T)) > ALGEBRAIC_TOL:
        raise StateError("observable is not Hermitian")
    evals = np.linalg.eigvalsh(o)
    if np.max(np.abs(evals - np.array([-1.0, 1.0]))) > SPECTRAL_TOL:
        raise StateError(f"observable spectrum {evals} is not {{-1, +1}}")
    return _frozen(o)


I2 = _frozen(np.eye(2))
X = observable([[0, 1], [1, 0]])
Y = observable([[0, -1j], [1j, 0]])
Z = observable([[1, 0], [0, -1]])

KET0 = qubit(1, 0)
KET1 = qubit(0, 1)

H = unitary(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
S = unitary([[1, 0], [0, 1j]])

# Reflection about the axis pi/8 away from Z towards X; W Z W = H.
_C8, _S8 = np.cos(np.pi / 8), np.sin(np.pi / 8)
W = unitary([[_C8, _S8], [_S8, -_C8]])

CZ = unitary(np.diag([1, 1, 1, -1]))

P0 = _frozen(np.diag([1, 0]))
P1 = _frozen(np.diag([0, 1]))


def phase_gate(phi: float) -> np.ndarray:
    """diag(1, e^{i phi})."""
    return unitary(np.diag([1.0, np.exp(1j * phi)]))


def controlled(u, control_is_ancilla: bool = True) -> np.ndarray:
    """4x4 matrix applying ``u`` to the target when the control is |1>."""
    u = unitary(u)
    if control_is_ancilla:
        return unitary(np.kron(I2, P0) + np.kron(u, P1))
    return unitary(np.kron(P0, I2) + np.kron(P1, u))


CH = controlled(H)


def product_state(system, ancilla) -> np.ndarray:
    return state_vector(np.kron(system, ancilla))


def apply_gate(state, u) -> np.ndarray:
    """Return ``u @ state`` for a 1-qubit or 2-qubit state."""
    state = np.asarray(state, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if u.shape != (state.size, state.size):
        raise StateError(f"gate of shape {u.shape} cannot act on {state.size} amplitudes")
    return state_vector(u @ state)


def on_system(u) -> np.ndarray:
    return np.kron(u, I2)


def on_ancilla(u) -> np.ndarray:
    return np.kron(I2, u)


def apply_controlled(state, u, control_is_ancilla: bool = True) -> np.ndarray:
    """Apply ``u`` to the target qubit in the control's |1> subspace.

    With the default ``control_is_ancilla=True`` the ancilla controls and
    ``u`` rotates the system photon, as in the quantum-controlled beam-splitter.
    """
    return apply_gate(state, controlled(u, control_is_ancilla))


def expectation(state, a, b) -> float:
    """<state| a (x) b |state> for a normalised two-qubit state."""
    psi = np.asarray(state, dtype=complex)
    value = np.vdot(psi, np.kron(a, b) @ psi)
    if abs(value.imag) > SPECTRAL_TOL:
        raise StateError(
            f"expectation has imaginary residue {value.imag:.3e}; operator not Hermitian?"
        )
    return float(value.real)


def density(state) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    return np.outer(psi, psi.conj())


def reduced_system(state) -> np.ndarray:
    """Partial trace over the ancilla of a pure two-qubit state."""
    m = np.asarray(state, dtype=complex).reshape(2, 2)
    return m @ m.conj().T


def reduced_ancilla(state) -> np.ndarray:
    m = np.asarray(state, dtype=complex).reshape(2, 2)
    return m.T @ m.conj()


def concurrence(state) -> float:
    """Concurrence of a pure two-qubit state from the reduced-state purity."""
    rho = reduced_system(state)
    purity = np.trace(rho @ rho).real
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - purity))))


def overlap(a, b) -> complex:
    return complex(np.vdot(a, b))


def same_ray(a, b, tol: float = ALGEBRAIC_TOL) -> bool:
    """True when two normalised vectors differ only by a global phase."""
    return abs(abs(overlap(a, b)) - 1.0) <= tol


def align_global_phase(u, v) -> np.ndarray:
    """Return ``u`` multiplied by the phase that best matches it to ``v``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    inner = np.vdot(u.reshape(-1), v.reshape(-1))
    if abs(inner) == 0:
        return u
    return u * (inner / abs(inner))


def gate_fidelity(u, v) -> float:
    """|Tr(u^dag v)| / d, equal to 1 iff u and v agree up to a global phase."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])


def random_state(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return state_vector(v / np.linalg.norm(v))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return unitary(q)


def bloch_observable(n) -> np.ndarray:
    """n . (X, Y, Z) for a unit 3-vector ``n``."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    return observable(n[0] * X + n[1] * Y + n[2] * Z)


def random_observable(rng: np.random.Generator) -> np.ndarray:
    return bloch_observable(rng.normal(size=3))
