"""Layered ansatz: program construction, evaluation, parameter-shift
gradients, and the batched engine against the gate-by-gate reference."""

import numpy as np
import pytest

import vqclab.ansatz as ansatz
from vqclab.ansatz import (
    EncodedSample,
    batch_expectations,
    build_circuit,
    evaluate,
    first_layer_gradient,
    gate_program,
    gradient,
    gradient_batch,
    pad_angles,
    single_z,
    zero_projector,
)
from vqclab.simcore import ObservableSpec

from oracles import dense_expectation, fd_gradient


def sample(angles, label=0):
    return EncodedSample(np.asarray(angles, dtype=np.float64), label)


class TestBuildCircuit:
    def test_param_count_law(self):
        for n in (1, 2, 5):
            for r in (1, 2, 4):
                for layers in (1, 3):
                    c = build_circuit(n, r, layers)
                    assert c.param_count == n * r * layers
                    assert c.param_shape == (layers, n, r)

    def test_default_axes_cycle(self):
        assert build_circuit(2, 1, 1).rot_axes == ("Y",)
        assert build_circuit(2, 2, 1).rot_axes == ("X", "Y")
        assert build_circuit(2, 3, 1).rot_axes == ("X", "Y", "Z")
        assert build_circuit(2, 5, 1).rot_axes == ("X", "Y", "Z", "X", "Y")

    def test_explicit_axes_and_entangler(self):
        c = build_circuit(3, 2, 1, rot_axes=("Z", "Z"), entangler="CZ")
        assert c.rot_axes == ("Z", "Z")
        assert c.entangler == "CZ"

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_qubits=0, n_rot=1, n_layers=1),
            dict(n_qubits=2, n_rot=0, n_layers=1),
            dict(n_qubits=2, n_rot=1, n_layers=0),
            dict(n_qubits=2, n_rot=2, n_layers=1, rot_axes=("Y",)),
            dict(n_qubits=2, n_rot=1, n_layers=1, rot_axes=("Q",)),
            dict(n_qubits=2, n_rot=1, n_layers=1, entangler="SWAP"),
        ],
    )
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(ValueError):
            build_circuit(**kwargs)

    def test_flat_slot_layout(self):
        c = build_circuit(3, 2, 4)
        seen = [
            c.flat_slot(layer, q, r)
            for layer in range(4)
            for q in range(3)
            for r in range(2)
        ]
        assert seen == list(range(c.param_count))


class TestGateProgram:
    def test_two_qubit_single_layer_program(self):
        # encoding RYs, one trainable RY per qubit, then the CNOT ring
        c = build_circuit(2, 1, 1)
        ops = gate_program(c, sample([0.3, 0.7]))
        kinds = [(op.kind, op.qubits, op.param_slot, op.fixed_angle) for op in ops]
        assert kinds == [
            ("RY", (0,), None, 0.3),
            ("RY", (1,), None, 0.7),
            ("RY", (0,), 0, None),
            ("RY", (1,), 1, None),
            ("CNOT", (0, 1), None, None),
            ("CNOT", (1, 0), None, None),
        ]

    def test_single_qubit_has_no_entangler(self):
        ops = gate_program(build_circuit(1, 2, 3), sample([0.1]))
        assert all(op.kind in ("RX", "RY", "RZ") for op in ops)

    def test_encoding_appears_once_regardless_of_depth(self):
        ops = gate_program(build_circuit(2, 1, 4), sample([0.5, 0.5]))
        fixed = [op for op in ops if op.fixed_angle is not None]
        assert len(fixed) == 2  # no re-uploading between layers

    def test_ring_wraps_modulo_n(self):
        ops = gate_program(build_circuit(4, 1, 1), sample([0.0] * 4))
        ring = [op.qubits for op in ops if op.kind == "CNOT"]
        assert ring == [(0, 1), (1, 2), (2, 3), (3, 0)]


class TestEvaluate:
    def test_minimal_cell_is_cosine(self):
        c = build_circuit(1, 1, 1)
        for theta in (0.0, np.pi / 2, 1.3, -2.0):
            got = evaluate(c, np.array([[[theta]]]), sample([0.0]), single_z(1))
            assert got == pytest.approx(np.cos(theta), abs=1e-12)

    def test_encoding_composes_with_parameters(self):
        c = build_circuit(1, 1, 1)
        got = evaluate(c, np.array([[[0.7]]]), sample([0.3]), single_z(1))
        assert got == pytest.approx(np.cos(1.0), abs=1e-12)

    def test_params_shape_enforced(self):
        c = build_circuit(2, 2, 2)
        with pytest.raises(ValueError):
            evaluate(c, np.zeros((2, 2)), sample([0.0, 0.0]), single_z(2))
        with pytest.raises(ValueError):
            evaluate(c, np.full(c.param_shape, np.nan), sample([0.0, 0.0]), single_z(2))

    @pytest.mark.parametrize("entangler", ["CNOT", "CZ"])
    def test_matches_dense_oracle(self, entangler):
        rng = np.random.default_rng(42)
        for _ in range(6):
            n = int(rng.integers(1, 5))
            c = build_circuit(n, int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                              entangler=entangler)
            params = rng.normal(size=c.param_shape)
            x = rng.uniform(0, np.pi, size=n)
            obs = ObservableSpec(
                tuple(
                    (float(rng.normal()), "".join(rng.choice(list("IXYZ"), size=n)))
                    for _ in range(3)
                )
            )
            got = evaluate(c, params, sample(x), obs)
            ops = gate_program(c, sample(x))
            want = dense_expectation(ops, params.reshape(-1), obs, n)
            assert got == pytest.approx(want, abs=1e-10)


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        c = build_circuit(3, 2, 2)
        params = rng.normal(size=c.param_shape)
        x = rng.uniform(0, np.pi, size=3)
        obs = single_z(3)
        g = gradient(c, params, sample(x), obs)
        f = lambda flat: evaluate(c, flat.reshape(c.param_shape), sample(x), obs)
        fd = fd_gradient(f, params.reshape(-1)).reshape(c.param_shape)
        np.testing.assert_allclose(g, fd, atol=1e-9)

    def test_evaluation_count_is_two_per_parameter(self):
        c = build_circuit(3, 2, 4)
        params = np.random.default_rng(0).normal(size=c.param_shape)
        ansatz.EVAL_COUNTER = [0]
        try:
            gradient(c, params, sample([0.1, 0.2, 0.3]), single_z(3))
            assert ansatz.EVAL_COUNTER[0] == 2 * c.param_count
            ansatz.EVAL_COUNTER = [0]
            first_layer_gradient(c, params, sample([0.1, 0.2, 0.3]), single_z(3))
            assert ansatz.EVAL_COUNTER[0] == 2 * c.n_qubits * c.n_rot
        finally:
            ansatz.EVAL_COUNTER = None

    def test_first_layer_is_gradient_prefix(self):
        rng = np.random.default_rng(11)
        c = build_circuit(2, 3, 3)
        params = rng.normal(size=c.param_shape)
        s = sample([0.4, 1.1])
        full = gradient(c, params, s, single_z(2))
        first = first_layer_gradient(c, params, s, single_z(2))
        np.testing.assert_allclose(first, full[0].reshape(-1), atol=1e-12)

    def test_zero_angles_zero_params_give_zero_gradient(self):
        # |0..0> with theta=0: every +-pi/2 pair is symmetric for Z_0
        c = build_circuit(2, 1, 2)
        g = gradient(c, np.zeros(c.param_shape), sample([0.0, 0.0]), single_z(2))
        np.testing.assert_allclose(g, 0.0, atol=1e-12)


class TestBatchedEngine:
    @pytest.mark.parametrize("entangler", ["CNOT", "CZ"])
    @pytest.mark.parametrize("obs_kind", ["z0", "proj", "mixed"])
    def test_matches_reference_path(self, entangler, obs_kind):
        rng = np.random.default_rng(hash((entangler, obs_kind)) % 2**32)
        for _ in range(4):
            n = int(rng.integers(1, 5))
            c = build_circuit(n, int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                              entangler=entangler)
            params = rng.normal(size=c.param_shape)
            xs = rng.uniform(0, np.pi, size=(5, n))
            if obs_kind == "z0":
                obs = single_z(n)
            elif obs_kind == "proj":
                obs = zero_projector(n)
            else:
                obs = ObservableSpec(((0.7, "X" * n), (-0.2, "Y" + "I" * (n - 1))))
            vals = batch_expectations(c, params, xs, obs)
            grads = gradient_batch(c, params, xs, obs)
            for i, x in enumerate(xs):
                assert vals[i] == pytest.approx(
                    evaluate(c, params, sample(x), obs), abs=1e-10
                )
                np.testing.assert_allclose(
                    grads[i].reshape(c.param_shape),
                    gradient(c, params, sample(x), obs),
                    atol=1e-10,
                )

    def test_with_value_rides_along(self):
        rng = np.random.default_rng(17)
        c = build_circuit(3, 2, 2)
        params = rng.normal(size=c.param_shape)
        xs = rng.uniform(0, np.pi, size=(4, 3))
        g1 = gradient_batch(c, params, xs, single_z(3))
        g2, vals = gradient_batch(c, params, xs, single_z(3), with_value=True)
        np.testing.assert_array_equal(g1, g2)
        np.testing.assert_allclose(vals, batch_expectations(c, params, xs, single_z(3)),
                                   atol=1e-12)

    def test_inputs_not_mutated(self):
        rng = np.random.default_rng(23)
        c = build_circuit(2, 2, 2)
        params = rng.normal(size=c.param_shape)
        xs = rng.uniform(0, np.pi, size=(3, 2))
        params_copy, xs_copy = params.copy(), xs.copy()
        gradient_batch(c, params, xs, single_z(2))
        np.testing.assert_array_equal(params, params_copy)
        np.testing.assert_array_equal(xs, xs_copy)

    def test_oversized_register_rejected(self):
        c = build_circuit(17, 1, 1)  # spec object is fine; running it is not
        with pytest.raises(ValueError, match="resource"):
            batch_expectations(c, np.zeros(c.param_shape), np.zeros((1, 17)),
                               single_z(17))


class TestHelpers:
    def test_pad_angles_extends_with_identity_rotations(self):
        out = pad_angles(np.array([[0.5, 1.0]]), 4)
        np.testing.assert_array_equal(out, [[0.5, 1.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            pad_angles(np.ones((1, 5)), 4)

    def test_encoded_sample_validation(self):
        with pytest.raises(ValueError):
            EncodedSample(np.array([-0.5]), 0)
        with pytest.raises(ValueError):
            EncodedSample(np.array([4.0]), 0)
        with pytest.raises(ValueError):
            EncodedSample(np.array([0.5]), 2)

    def test_single_z_terms(self):
        assert single_z(3).terms == ((1.0, "ZII"),)
        assert single_z(3, qubit=2).terms == ((1.0, "IIZ"),)

    def test_zero_projector_is_a_projector(self):
        obs = zero_projector(2)
        assert len(obs.terms) == 4
        assert all(c == 0.25 for c, _ in obs.terms)
        from oracles import dense_observable

        m = dense_observable(obs)
        want = np.zeros((4, 4))
        want[0, 0] = 1.0
        np.testing.assert_allclose(m, want, atol=1e-15)
