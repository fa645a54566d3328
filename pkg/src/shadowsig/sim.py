"""Dense statevector simulation, measurement sampling, and noisy-lab emulation.

Qubit 0 maps to the most significant bit of the amplitude index, so
``amps[int(bits, 2)]`` is the amplitude of the outcome string ``bits``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit
from .errors import ResourceError
from .tableau import CliffordOp, random_clifford_op

STATE_CAP = 14      # dense statevector qubit budget (config knob)
SPECTRAL_CAP = 10   # dense operator / spectral-work qubit budget (config knob)
CLIFFORD_DENSE_CAP = 6


@dataclass(frozen=True)
class StateVector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.amps, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)
        if a.shape != (2**self.n,):
            raise ValueError(f"amplitude count {a.shape} does not match n={self.n}")
        if abs(np.vdot(a, a).real - 1.0) > 1e-9:
            raise ValueError("state is not normalized to 1e-9")


class MaximallyMixedToken:
    """Depolarized branch marker: measurement code emits uniform bits."""

    def __repr__(self):
        return "<maximally-mixed>"


MIXED = MaximallyMixedToken()


@dataclass(frozen=True)
class LabState:
    """Pure target state subject to optional global depolarizing noise."""
    base: StateVector
    eps_hon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eps_hon <= 1.0:
            raise ValueError("eps_hon must be a probability")

    @property
    def n(self) -> int:
        return self.base.n


def zero_state(n: int) -> StateVector:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def plus_state(n: int) -> StateVector:
    return StateVector(n, np.full(2**n, 2 ** (-n / 2), dtype=complex))


def apply_unitary(amps: np.ndarray, u: np.ndarray, support, n: int) -> np.ndarray:
    """Apply a gate on the given qubits to a 2^n amplitude vector."""
    w = len(support)
    t = amps.reshape([2] * n)
    t = np.tensordot(u.reshape([2] * (2 * w)), t, axes=(list(range(w, 2 * w)), list(support)))
    t = np.moveaxis(t, range(w), support)
    return np.ascontiguousarray(t).reshape(-1)


def apply(c: Circuit, state: StateVector) -> StateVector:
    """Run the circuit on the state; preserves norm to 1e-9."""
    if c.n != state.n:
        raise ValueError(f"circuit has n={c.n}, state has n={state.n}")
    if c.n > STATE_CAP:
        raise ResourceError(f"n={c.n} exceeds dense statevector cap {STATE_CAP}")
    amps = state.amps
    for g in c.gates():
        amps = apply_unitary(amps, g.unitary, g.support, c.n)
    return StateVector(c.n, amps)


def run(c: Circuit) -> StateVector:
    """Shorthand for applying the circuit to |0...0>."""
    return apply(c, zero_state(c.n))


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense total unitary of a circuit (small n only)."""
    if c.n > SPECTRAL_CAP:
        raise ResourceError(f"n={c.n} exceeds dense operator cap {SPECTRAL_CAP}")
    dim = 2**c.n
    out = np.eye(dim, dtype=complex)
    for k in range(dim):
        col = out[:, k].copy()
        for g in c.gates():
            col = apply_unitary(col, g.unitary, g.support, c.n)
        out[:, k] = col
    return out


def amplitude(s: StateVector, x: str) -> complex:
    """Stored amplitude of the computational outcome ``x`` (qubit 0 leftmost)."""
    if len(x) != s.n:
        raise ValueError(f"bitstring length {len(x)} != n={s.n}")
    return complex(s.amps[int(x, 2)])


def born_probabilities(s: StateVector) -> np.ndarray:
    p = np.abs(s.amps) ** 2
    return p / p.sum()


def sample_z(s: StateVector, rng: np.random.Generator) -> str:
    """One all-qubit Z-basis sample drawn from the Born distribution."""
    idx = int(rng.choice(2**s.n, p=born_probabilities(s)))
    return format(idx, f"0{s.n}b")


def sample_lab(lab: LabState, rng: np.random.Generator):
    """Pure base state w.p. 1 - eps_hon, else the maximally mixed token.

    The token instructs measurement code to emit uniform bits on every
    measured qubit, which reproduces I/2^n exactly for any measurement
    basis (the maximally mixed state is unitary invariant).
    """
    if lab.eps_hon > 0.0 and rng.random() < lab.eps_hon:
        return MIXED
    return lab.base


def random_clifford(m: int, rng: np.random.Generator) -> CliffordOp:
    """Exactly uniform m-qubit Clifford; dense form available for m <= 6."""
    return random_clifford_op(m, rng)


def reduced_density(s: StateVector, qubits) -> np.ndarray:
    """Partial trace onto the given qubits (Hermitian, trace one, PSD)."""
    qubits = list(qubits)
    w = len(qubits)
    rest = [q for q in range(s.n) if q not in qubits]
    t = s.amps.reshape([2] * s.n).transpose(qubits + rest).reshape(2**w, -1)
    rho = t @ t.conj().T
    return 0.5 * (rho + rho.conj().T)


def fidelity(a: StateVector, b: StateVector) -> float:
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)
