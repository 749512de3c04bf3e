"""Layered hardware-efficient circuit: construction, evaluation, gradients.

The circuit family is fixed: an RY angle-encoding layer (data enters once,
no re-uploading), then L identical blocks of R parameterized rotations per
qubit followed by a ring of entanglers (q -> q+1 mod N, omitted for N=1).
Parameters live in a (layers, qubits, rotations) tensor, flattened
layer-major as l*N*R + n*R + r, so theta has exactly N*R*L entries.

Gradients use the parameter-shift identity dE/dk = (E(k + pi/2) -
E(k - pi/2)) / 2, exact under the half-angle rotation convention.  A full
gradient therefore costs 2*N*R*L circuit evaluations; the batched engine
below amortizes them by caching per-layer prefix states, fusing each
qubit's rotation chain into one 2x2 matrix, and running all shifted
variants of a layer as rows of a single amplitude matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .simcore import (
    MAX_QUBITS,
    GateOp,
    ObservableSpec,
    apply_gate,
    compile_observable,
    expectation,
    expectation_from_compiled,
    new_zero_state,
)

__all__ = [
    "CircuitSpec",
    "EncodedSample",
    "build_circuit",
    "gate_program",
    "evaluate",
    "gradient",
    "first_layer_gradient",
    "batch_expectations",
    "gradient_batch",
    "single_z",
    "zero_projector",
    "pad_angles",
]

_AXES_CYCLE = ("X", "Y", "Z")

# Test instrumentation: when set to a one-element list, the engine adds the
# number of shifted-circuit expectations it computes.
EVAL_COUNTER: list[int] | None = None


@dataclass(frozen=True)
class CircuitSpec:
    """Immutable description of one circuit instance."""

    n_qubits: int
    n_rot: int
    n_layers: int
    rot_axes: tuple[str, ...]
    entangler: str = "CNOT"

    @property
    def param_count(self) -> int:
        return self.n_qubits * self.n_rot * self.n_layers

    @property
    def param_shape(self) -> tuple[int, int, int]:
        return (self.n_layers, self.n_qubits, self.n_rot)

    def flat_slot(self, layer: int, qubit: int, rot: int) -> int:
        return (layer * self.n_qubits + qubit) * self.n_rot + rot


@dataclass(frozen=True)
class EncodedSample:
    """One data point: per-qubit rotation angles in [0, pi] plus a binary label."""

    angles: np.ndarray
    label: int

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 1:
            raise ValueError("sample angles must be a 1-d array")
        if angles.size and (angles.min() < -1e-9 or angles.max() > np.pi + 1e-9):
            raise ValueError("encoded angles must lie in [0, pi]")
        object.__setattr__(self, "angles", angles)
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


def pad_angles(features: np.ndarray, n_qubits: int) -> np.ndarray:
    """Zero-pad encoded feature rows out to ``n_qubits`` columns.

    Encoders emit min(original_dim, N) angles; unused qubits get RY(0),
    the identity.
    """
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if feats.shape[1] > n_qubits:
        raise ValueError(f"{feats.shape[1]} encoded dims exceed {n_qubits} qubits")
    if feats.shape[1] == n_qubits:
        return feats
    out = np.zeros((feats.shape[0], n_qubits), dtype=np.float64)
    out[:, : feats.shape[1]] = feats
    return out


def build_circuit(
    n_qubits: int,
    n_rot: int = 3,
    n_layers: int = 1,
    rot_axes: tuple[str, ...] | None = None,
    entangler: str = "CNOT",
) -> CircuitSpec:
    """Build the layered circuit spec; parameter count is N*R*L.

    Default rotation axes cycle X, Y, Z; the single-rotation circuit
    defaults to RY alone so the minimal ansatz steers <Z> directly.
    """
    if n_qubits < 1 or n_rot < 1 or n_layers < 1:
        raise ValueError(
            f"n_qubits, n_rot, n_layers must all be >= 1, got "
            f"({n_qubits}, {n_rot}, {n_layers})"
        )
    if rot_axes is None:
        if n_rot == 1:
            rot_axes = ("Y",)
        else:
            rot_axes = tuple(itertools.islice(itertools.cycle(_AXES_CYCLE), n_rot))
    rot_axes = tuple(str(a).upper() for a in rot_axes)
    if len(rot_axes) != n_rot:
        raise ValueError(f"rot_axes length {len(rot_axes)} != n_rot {n_rot}")
    if set(rot_axes) - {"X", "Y", "Z"}:
        raise ValueError(f"rot_axes must be drawn from X/Y/Z, got {rot_axes}")
    if entangler not in ("CNOT", "CZ"):
        raise ValueError(f"entangler must be CNOT or CZ, got {entangler!r}")
    return CircuitSpec(n_qubits, n_rot, n_layers, rot_axes, entangler)


def gate_program(circuit: CircuitSpec, sample: EncodedSample) -> list[GateOp]:
    """Materialize the full gate list for one encoded sample.

    Encoding angles become fixed-angle RY ops; trainable rotations carry
    their flat parameter slot; each layer ends with the entangler ring.
    """
    n = circuit.n_qubits
    angles = pad_angles(sample.angles, n)[0]
    ops = [GateOp("RY", (q,), fixed_angle=float(angles[q])) for q in range(n)]
    for layer in range(circuit.n_layers):
        for qubit in range(n):
            for rot in range(circuit.n_rot):
                ops.append(
                    GateOp(
                        "R" + circuit.rot_axes[rot],
                        (qubit,),
                        param_slot=circuit.flat_slot(layer, qubit, rot),
                    )
                )
        if n > 1:
            for qubit in range(n):
                ops.append(GateOp(circuit.entangler, (qubit, (qubit + 1) % n)))
    return ops


def check_params(circuit: CircuitSpec, params: np.ndarray) -> np.ndarray:
    if circuit.n_qubits > MAX_QUBITS:
        raise ValueError(
            f"n_qubits must be in [1, {MAX_QUBITS}] (dense statevector resource "
            f"guard), got {circuit.n_qubits}"
        )
    params = np.asarray(params, dtype=np.float64)
    if params.shape != circuit.param_shape:
        raise ValueError(
            f"params shape {params.shape} != expected {circuit.param_shape}"
        )
    if not np.all(np.isfinite(params)):
        raise ValueError("params must be finite")
    return params


def evaluate(
    circuit: CircuitSpec,
    params: np.ndarray,
    sample: EncodedSample,
    obs: ObservableSpec,
) -> float:
    """Run the program on |0...0> gate by gate and return <H>.

    This is the reference path (plain simcore ops); the batched engine is
    the performance path and is tested against it.
    """
    params = check_params(circuit, params)
    state = new_zero_state(circuit.n_qubits)
    flat = params.reshape(-1)
    for op in gate_program(circuit, sample):
        apply_gate(state, op, flat)
    return expectation(state, obs)


def gradient(
    circuit: CircuitSpec,
    params: np.ndarray,
    sample: EncodedSample,
    obs: ObservableSpec,
) -> np.ndarray:
    """Parameter-shift gradient of <H>, shaped like params (L, N, R)."""
    params = check_params(circuit, params)
    angles = pad_angles(sample.angles, circuit.n_qubits)
    grads = gradient_batch(circuit, params, angles, obs)
    return grads[0].reshape(circuit.param_shape)


def first_layer_gradient(
    circuit: CircuitSpec,
    params: np.ndarray,
    sample: EncodedSample,
    obs: ObservableSpec,
) -> np.ndarray:
    """The layer-0 slice of the gradient, length N*R."""
    params = check_params(circuit, params)
    angles = pad_angles(sample.angles, circuit.n_qubits)
    grads = gradient_batch(circuit, params, angles, obs, first_layer_only=True)
    return grads[0]


def single_z(n_qubits: int, qubit: int = 0) -> ObservableSpec:
    """Z on one qubit: the binary-readout default."""
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    paulis = "".join("Z" if q == qubit else "I" for q in range(n_qubits))
    return ObservableSpec(((1.0, paulis),))


def zero_projector(n_qubits: int) -> ObservableSpec:
    """Projector onto |0...0| as a Pauli sum: 2^-N * sum over {I,Z}^N.

    A global observable with unit trace-square, so its gradient variance
    decays as 4^-N on random circuits (the scaling-law target), where a
    single-qubit Z decays only as 2^-N.  The expansion has 2^N terms;
    intended for scaling studies at moderate qubit counts.
    """
    coeff = 0.5**n_qubits
    terms = tuple(
        (coeff, "".join(chars))
        for chars in itertools.product("IZ", repeat=n_qubits)
    )
    return ObservableSpec(terms)


# --- batched engine -------------------------------------------------------
#
# Row layout everywhere: amps is (rows, 2**N) complex128, C-contiguous.
# A "layer pass" applies one fused 2x2 per qubit (the R-rotation chain
# collapsed by matrix product) and then the entangler ring, which for CNOTs
# is a pure column permutation and for CZs a diagonal sign flip.


def _rot_mats_rows(axis: str, angles: np.ndarray) -> np.ndarray:
    h = 0.5 * np.asarray(angles, dtype=np.float64)
    c, s = np.cos(h), np.sin(h)
    m = np.empty((h.size, 2, 2), dtype=np.complex128)
    if axis == "X":
        m[:, 0, 0] = c
        m[:, 0, 1] = -1j * s
        m[:, 1, 0] = -1j * s
        m[:, 1, 1] = c
    elif axis == "Y":
        m[:, 0, 0] = c
        m[:, 0, 1] = -s
        m[:, 1, 0] = s
        m[:, 1, 1] = c
    else:
        m[:, 0, 0] = c - 1j * s
        m[:, 0, 1] = 0.0
        m[:, 1, 0] = 0.0
        m[:, 1, 1] = c + 1j * s
    return m


def _fused_chain_mats(axes: tuple[str, ...], angles: np.ndarray) -> np.ndarray:
    """Collapse each row's R-rotation chain into one 2x2 (later gates left)."""
    mats = _rot_mats_rows(axes[0], angles[:, 0])
    for r in range(1, len(axes)):
        mats = _rot_mats_rows(axes[r], angles[:, r]) @ mats
    return mats


def _ring_action(circuit: CircuitSpec):
    """Precompute the entangler ring as (gather indices, diagonal signs).

    The sequential CNOT ring is a basis permutation: compose the images,
    then invert so new_amps = amps[:, gather].  The CZ ring is diagonal.
    """
    n = circuit.n_qubits
    if n == 1:
        return None, None
    dim = 1 << n
    idx = np.arange(dim)
    if circuit.entangler == "CZ":
        signs = np.ones(dim, dtype=np.float64)
        for q in range(n):
            c, t = q, (q + 1) % n
            signs *= 1.0 - 2.0 * (((idx >> c) & 1) & ((idx >> t) & 1))
        return None, signs
    forward = idx.copy()
    for q in range(n):
        c, t = q, (q + 1) % n
        forward = forward ^ (((forward >> c) & 1) << t)
    gather = np.empty(dim, dtype=np.intp)
    gather[forward] = idx
    return gather, None


def _apply_layer(amps, buf, circuit, angle_rows, gather, signs):
    """One layer pass over all rows; returns (amps, buf) possibly swapped."""
    for qubit in range(circuit.n_qubits):
        mats = _fused_chain_mats(circuit.rot_axes, angle_rows[:, qubit, :])
        _kernels.apply_1q_rows(amps, mats, qubit)
    if gather is not None:
        np.take(amps, gather, axis=1, out=buf)
        return buf, amps
    if signs is not None:
        amps *= signs
    return amps, buf


def _encode_rows(angle_matrix: np.ndarray, n_qubits: int) -> np.ndarray:
    rows = angle_matrix.shape[0]
    amps = np.zeros((rows, 1 << n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    for qubit in range(n_qubits):
        col = angle_matrix[:, qubit]
        if not col.any():
            continue  # RY(0) on padded qubits
        _kernels.apply_1q_rows(amps, _rot_mats_rows("Y", col), qubit)
    return amps


def _expect_rows(amps: np.ndarray, compiled) -> np.ndarray:
    diag, offdiag = compiled
    if EVAL_COUNTER is not None:
        EVAL_COUNTER[0] += amps.shape[0]
    if diag is not None and not offdiag:
        out = np.empty(amps.shape[0], dtype=np.float64)
        _kernels.diag_expectation_rows(amps, diag, out)
        return out
    return expectation_from_compiled(amps, diag, offdiag)


def _forward_states(circuit, params, angle_matrix, gather, signs):
    """Post-encoding state plus the state after each layer, all batched."""
    states = [_encode_rows(angle_matrix, circuit.n_qubits)]
    rows = angle_matrix.shape[0]
    for layer in range(circuit.n_layers):
        amps = states[-1].copy()
        buf = np.empty_like(amps)
        angle_rows = np.broadcast_to(
            params[layer], (rows, circuit.n_qubits, circuit.n_rot)
        )
        amps, buf = _apply_layer(amps, buf, circuit, angle_rows, gather, signs)
        states.append(amps)
    return states


def batch_expectations(
    circuit: CircuitSpec,
    params: np.ndarray,
    angle_matrix: np.ndarray,
    obs: ObservableSpec,
) -> np.ndarray:
    """<H> for every row of an encoded angle matrix, one forward pass."""
    params = check_params(circuit, params)
    angle_matrix = pad_angles(angle_matrix, circuit.n_qubits)
    compiled = compile_observable(obs, circuit.n_qubits)
    gather, signs = _ring_action(circuit)
    states = _forward_states(circuit, params, angle_matrix, gather, signs)
    return _expect_rows(states[-1], compiled)


def gradient_batch(
    circuit: CircuitSpec,
    params: np.ndarray,
    angle_matrix: np.ndarray,
    obs: ObservableSpec,
    first_layer_only: bool = False,
    with_value: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Per-sample parameter-shift gradients of <H>.

    angle_matrix: (B, <=N) encoded rows.  Returns (B, N*R*L), or (B, N*R)
    when only the first layer is requested.  Exactly 2*N*R evaluations per
    sample per requested layer, grouped so that all variants of one layer
    share a cached prefix state and run as one batched suffix.  With
    ``with_value`` the unshifted expectations (B,) ride along for free
    from the cached forward pass.
    """
    params = check_params(circuit, params)
    angle_matrix = pad_angles(angle_matrix, circuit.n_qubits)
    compiled = compile_observable(obs, circuit.n_qubits)
    gather, signs = _ring_action(circuit)

    n, r_rot, n_layers = circuit.n_qubits, circuit.n_rot, circuit.n_layers
    n_slots = n * r_rot
    n_variants = 2 * n_slots
    batch = angle_matrix.shape[0]

    states = _forward_states(circuit, params, angle_matrix, gather, signs)

    # Shift tensor: variant 2k is slot k shifted by +pi/2, 2k+1 by -pi/2.
    shifts = np.zeros((n_variants, n, r_rot), dtype=np.float64)
    slot_q, slot_r = divmod(np.arange(n_slots), r_rot)
    shifts[2 * np.arange(n_slots), slot_q, slot_r] = 0.5 * np.pi
    shifts[2 * np.arange(n_slots) + 1, slot_q, slot_r] = -0.5 * np.pi

    layers = (0,) if first_layer_only else tuple(range(n_layers))
    out = np.empty((batch, len(layers) * n_slots), dtype=np.float64)

    amps = np.empty((batch * n_variants, 1 << n), dtype=np.complex128)
    buf = np.empty_like(amps)
    uniform_rows = np.empty((batch * n_variants, n, r_rot), dtype=np.float64)

    for pos, layer in enumerate(layers):
        # Rows are sample-major: row b*V + v is variant v of sample b.
        amps.reshape(batch, n_variants, -1)[:] = states[layer][:, None, :]
        shifted = params[layer][None, :, :] + shifts
        angle_rows = np.tile(shifted, (batch, 1, 1))
        cur, spare = _apply_layer(amps, buf, circuit, angle_rows, gather, signs)
        for later in range(layer + 1, n_layers):
            uniform_rows[:] = params[later]
            cur, spare = _apply_layer(cur, spare, circuit, uniform_rows, gather, signs)
        evals = _expect_rows(cur, compiled).reshape(batch, n_slots, 2)
        out[:, pos * n_slots : (pos + 1) * n_slots] = 0.5 * (
            evals[:, :, 0] - evals[:, :, 1]
        )
        amps, buf = cur, spare
    if with_value:
        return out, _expect_rows(states[-1], compiled)
    return out
