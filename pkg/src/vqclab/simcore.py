"""Dense statevector simulator: rotations, entanglers, expectations.

Conventions (fixed once, everything downstream depends on them):

* Qubit 0 is the least-significant bit of the amplitude index, so the
  basis state with only qubit q excited sits at index ``1 << q``.
* Rotations use the half-angle convention R_P(theta) = exp(-i*(theta/2)*P),
  which makes the parameter-shift rule with shift pi/2 exact.
* Amplitudes are complex128; gates update them in place with stride-based
  bit indexing.  Dense matrices appear only in test oracles.

The register is capped at 16 qubits: a dense complex128 state doubles per
qubit, and the lab's experiments never need more.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "GateOp",
    "ObservableSpec",
    "new_zero_state",
    "apply_rotation",
    "apply_entangler",
    "apply_gate",
    "expectation",
]

MAX_QUBITS = 16

ROTATION_KINDS = ("RX", "RY", "RZ")
ENTANGLER_KINDS = ("CNOT", "CZ")


@dataclass
class StateVector:
    """Dense N-qubit state: 2^N complex amplitudes, unit norm."""

    n_qubits: int
    amps: np.ndarray

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amps, self.amps)))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


@dataclass(frozen=True)
class GateOp:
    """One gate in a program.

    Rotations carry exactly one qubit and exactly one of ``param_slot``
    (index into the flattened parameter tensor) or ``fixed_angle``
    (radians, used for data-encoding gates).  Entanglers carry two
    distinct qubits and neither angle field.
    """

    kind: str
    qubits: tuple[int, ...]
    param_slot: int | None = None
    fixed_angle: float | None = None

    def __post_init__(self):
        if self.kind in ROTATION_KINDS:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} takes one qubit, got {self.qubits}")
            if (self.param_slot is None) == (self.fixed_angle is None):
                raise ValueError(
                    f"{self.kind} needs exactly one of param_slot/fixed_angle"
                )
        elif self.kind in ENTANGLER_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} takes two distinct qubits, got {self.qubits}")
            if self.param_slot is not None or self.fixed_angle is not None:
                raise ValueError(f"{self.kind} takes no angle")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")


@dataclass(frozen=True)
class ObservableSpec:
    """Hermitian observable as a real-weighted sum of Pauli strings.

    Each term is (coefficient, string); character i of the string is the
    Pauli acting on qubit i, drawn from I/X/Y/Z.  All strings must share
    one length, which must equal the target state's qubit count.
    """

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("observable needs at least one term")
        length = len(self.terms[0][1])
        for coeff, paulis in self.terms:
            if not np.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff}")
            if len(paulis) != length:
                raise ValueError("all pauli strings must have equal length")
            bad = set(paulis) - set("IXYZ")
            if bad:
                raise ValueError(f"invalid pauli symbols {bad}")
        object.__setattr__(self, "terms", tuple((float(c), str(p)) for c, p in self.terms))

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0][1])

    def coeff_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))


def new_zero_state(n_qubits: int) -> StateVector:
    """Allocate |0...0> on ``n_qubits`` qubits.

    Rejects counts outside [1, 16]: the dense register above the cap would
    silently eat gigabytes.
    """
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(
            f"n_qubits must be in [1, {MAX_QUBITS}] (dense statevector resource guard), "
            f"got {n_qubits}"
        )
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of exp(-i*(angle/2)*P) for P in {X, Y, Z}."""
    h = 0.5 * angle
    c, s = np.cos(h), np.sin(h)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "Z":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=np.complex128)
    raise ValueError(f"unknown rotation axis {axis!r}")


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def apply_rotation(state: StateVector, axis: str, qubit: int, angle: float) -> StateVector:
    """Apply R_axis(angle) to one qubit, in place.  Returns the state."""
    _check_qubit(state, qubit)
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    u = rotation_matrix(axis, float(angle))
    # View as (high bits, target qubit, low bits); the 2x2 acts on axis 1.
    v = state.amps.reshape(-1, 2, 1 << qubit)
    lo = v[:, 0, :].copy()
    hi = v[:, 1, :]
    v[:, 0, :] = u[0, 0] * lo + u[0, 1] * hi
    v[:, 1, :] = u[1, 0] * lo + u[1, 1] * hi
    return state


def apply_entangler(state: StateVector, kind: str, control: int, target: int) -> StateVector:
    """Apply CNOT or CZ with the given control/target, in place."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    if kind not in ENTANGLER_KINDS:
        raise ValueError(f"unknown entangler kind {kind!r}")
    idx = np.arange(state.amps.size)
    both = ((idx >> control) & 1).astype(bool)
    if kind == "CZ":
        both &= ((idx >> target) & 1).astype(bool)
        state.amps[both] *= -1.0
    else:
        src = idx[both & (((idx >> target) & 1) == 0)]
        dst = src | (1 << target)
        tmp = state.amps[src].copy()
        state.amps[src] = state.amps[dst]
        state.amps[dst] = tmp
    return state


def apply_gate(state: StateVector, op: GateOp, flat_params: np.ndarray | None = None) -> StateVector:
    """Apply one GateOp; parameterized rotations read ``flat_params``."""
    if op.kind in ROTATION_KINDS:
        if op.param_slot is not None:
            if flat_params is None:
                raise ValueError("parameterized gate needs flat_params")
            angle = float(flat_params[op.param_slot])
        else:
            angle = float(op.fixed_angle)
        return apply_rotation(state, op.kind[1], op.qubits[0], angle)
    return apply_entangler(state, op.kind, op.qubits[0], op.qubits[1])


def _pauli_action(paulis: str, dim: int) -> tuple[int, np.ndarray]:
    """Decompose a Pauli string into (XOR mask, per-basis phase vector).

    P|b> = phase[b] * |b ^ mask>: Z contributes (-1)^bit, X flips, and
    Y flips with phase i*(-1)^bit.
    """
    idx = np.arange(dim)
    mask = 0
    phase = np.ones(dim, dtype=np.complex128)
    for q, p in enumerate(paulis):
        if p == "I":
            continue
        bit = (idx >> q) & 1
        if p == "Z":
            phase *= 1.0 - 2.0 * bit
        elif p == "X":
            mask |= 1 << q
        elif p == "Y":
            mask |= 1 << q
            phase *= 1j * (1.0 - 2.0 * bit)
    return mask, phase


def compile_observable(obs: ObservableSpec, n_qubits: int):
    """Split an observable into a merged diagonal and off-diagonal terms.

    All I/Z-only terms collapse into a single real weight vector (one pass
    per expectation regardless of term count); X/Y terms stay individual
    as (mask, coeff*phase) pairs.  Returns (diag or None, [(mask, phase)]).
    """
    if obs.n_qubits != n_qubits:
        raise ValueError(
            f"observable is over {obs.n_qubits} qubits, state has {n_qubits}"
        )
    dim = 1 << n_qubits
    diag = None
    offdiag = []
    for coeff, paulis in obs.terms:
        mask, phase = _pauli_action(paulis, dim)
        if mask == 0:
            if diag is None:
                diag = np.zeros(dim, dtype=np.float64)
            diag += coeff * phase.real
        else:
            offdiag.append((mask, coeff * phase))
    return diag, offdiag


def expectation_from_compiled(amps: np.ndarray, diag, offdiag) -> np.ndarray:
    """<psi|H|psi> for compiled H over amplitude rows (..., dim)."""
    amps2 = np.atleast_2d(amps)
    out = np.zeros(amps2.shape[0], dtype=np.float64)
    if diag is not None:
        prob = amps2.real**2 + amps2.imag**2
        out += prob @ diag
    idx = np.arange(amps2.shape[1])
    for mask, phase in offdiag:
        partner = idx ^ mask
        # <psi|P|psi> = sum_b conj(psi[b]) * phase[b^mask] * psi[b^mask];
        # imaginary residue is numerical noise for Hermitian sums.
        vals = np.einsum("rb,rb->r", np.conj(amps2), phase[partner] * amps2[:, partner])
        out += vals.real
    return out


def expectation(state: StateVector, obs: ObservableSpec) -> float:
    """Return sum_terms coeff * <psi|P|psi> (real part; residue discarded)."""
    diag, offdiag = compile_observable(obs, state.n_qubits)
    return float(expectation_from_compiled(state.amps, diag, offdiag)[0])
