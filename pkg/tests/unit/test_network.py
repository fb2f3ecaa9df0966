"""Tests for labels, the joint loss, the PIN graph and sample synthesis."""

import itertools
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import kstest

from core.errors import InvalidHeaderError, ShapeError
from micrograd.gradcheck import finite_difference_check
from micrograd.layers import LayerKind, Mode
from micrograd.tensor import Precision, Tensor
from models.network import NetworkConfig
from models.patch import PatchStack
from models.volume import LandmarkSet, Volume
from network.labels import direction_of, gt_label, gt_labels, one_hot
from network.loss import PROB_FLOOR, joint_loss, loss_terms
from network.patches import extract_patch
from network.pin_network import (
    PinNetwork,
    network_config_from_manifest,
    network_manifest,
    parameter_shapes,
)
from network.samples import (
    make_sample_multi,
    make_sample_single,
    sample_b,
    sample_position,
)
from storage.checkpoint_storage import decode_checkpoint, encode_checkpoint


def _scan_label(d):
    """Brute-force reference: first axis with the largest magnitude wins."""
    best = 0
    for i in range(1, len(d)):
        if abs(d[i]) > abs(d[best]):
            best = i
    return 2 * best if d[best] > 0 else 2 * best + 1


def _scalar_loss(d, P, d_gt, classes, alpha):
    n, n_o = d.shape
    reg = 0.0
    cls = 0.0
    for k in range(n):
        for i in range(n_o):
            reg += (d_gt[k][i] - d[k][i]) ** 2
        cls -= np.log(max(P[k][classes[k]], 1e-12))
    return (1 - alpha) * reg / (n_o * n) + alpha * cls / n


@pytest.mark.unit
class TestLabels:
    """Direction-class labels."""

    @pytest.mark.parametrize("n_o", [1, 2, 3, 5])
    def test_exhaustive_ternary_vectors(self, n_o):
        """Every vector in {-1, 0, 1}^n_o matches the scan reference."""
        for d in itertools.product([-1.0, 0.0, 1.0], repeat=n_o):
            assert gt_label(d) == _scan_label(d)

    def test_random_vectors(self, rng):
        """10^4 random vectors agree with the scan reference, single and batched."""
        d = rng.standard_normal((10_000, 3)) * rng.uniform(0.01, 50.0, (10_000, 1))
        expected = np.array([_scan_label(row) for row in d])
        np.testing.assert_array_equal(gt_labels(d), expected)
        assert all(gt_label(row) == e for row, e in zip(d[:200], expected[:200]))

    def test_zero_vector_is_class_one(self):
        assert gt_label([0.0, 0.0, 0.0]) == 1

    def test_tie_prefers_lowest_axis(self):
        """|d_x| == |d_y| resolves to the x axis."""
        assert gt_label([2.0, -2.0, 1.0]) == 0
        assert gt_label([-2.0, 2.0, 1.0]) == 1

    def test_one_hot_and_direction(self):
        np.testing.assert_array_equal(one_hot(3, 6), [0, 0, 0, 1, 0, 0])
        np.testing.assert_array_equal(direction_of(4, 3), [0, 0, 1])
        np.testing.assert_array_equal(direction_of(1, 3), [-1, 0, 0])


@pytest.mark.unit
class TestLoss:
    """The weighted regression / classification loss."""

    def test_worked_example(self):
        """d_gt = (1, 0, 0), d = 0, P[c_gt] = 0.5, alpha = 0.5."""
        P = np.array([[0.5, 0.1, 0.1, 0.1, 0.1, 0.1]])
        terms = loss_terms(np.zeros((1, 3)), P, np.array([[1.0, 0.0, 0.0]]), np.array([0]), 0.5)
        assert terms.total == pytest.approx(0.5 / 3.0 + 0.5 * np.log(2.0), abs=1e-12)
        assert terms.total == pytest.approx(0.5132402569, abs=1e-9)

    def test_matches_scalar_reference_on_random_batches(self, rng):
        for _ in range(100):
            n, n_o = rng.integers(1, 6), rng.integers(1, 5)
            d = rng.standard_normal((n, n_o))
            d_gt = rng.standard_normal((n, n_o)) * 5
            logits = rng.standard_normal((n, 2 * n_o))
            P = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
            classes = gt_labels(d_gt)
            alpha = float(rng.uniform())
            expected = _scalar_loss(d, P, d_gt, classes, alpha)
            assert loss_terms(d, P, d_gt, classes, alpha).total == pytest.approx(
                expected, abs=1e-9
            )

    def test_degenerate_alphas(self, rng):
        """alpha = 0 is pure regression, alpha = 1 pure classification."""
        d, d_gt = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        P = np.full((4, 6), 1.0 / 6.0)
        classes = gt_labels(d_gt)
        pure_reg = loss_terms(d, P, d_gt, classes, 0.0)
        pure_cls = loss_terms(d, P, d_gt, classes, 1.0)
        assert pure_reg.total == pytest.approx(pure_reg.regression, abs=1e-12)
        assert pure_cls.total == pytest.approx(np.log(6.0), abs=1e-12)

    def test_zero_probability_is_clamped(self):
        P = np.array([[0.0, 1.0]])
        terms = loss_terms(np.zeros((1, 1)), P, np.array([[1.0]]), np.array([0]), 1.0)
        assert terms.classification == pytest.approx(-np.log(PROB_FLOOR))
        assert np.isfinite(terms.total)

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            loss_terms(np.zeros((2, 3)), np.zeros((2, 5)), np.zeros((2, 3)), np.zeros(2), 0.5)
        with pytest.raises(ShapeError):
            loss_terms(np.zeros((0, 3)), np.zeros((0, 6)), np.zeros((0, 3)), np.zeros(0), 0.5)

    def test_graph_gradients(self, rng):
        """Analytic loss gradients for d and P agree with finite differences."""
        d = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
        P = Tensor(rng.uniform(0.1, 1.0, (3, 4)), requires_grad=True)
        d_gt = rng.standard_normal((3, 2))
        classes = gt_labels(d_gt)
        error = finite_difference_check(
            lambda: joint_loss(d, P, d_gt, classes, 0.3)[0], [d, P]
        )
        assert error < 1e-6

    def test_alpha_zero_leaves_probabilities_without_gradient(self, rng):
        d = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
        P = Tensor(np.full((2, 6), 1.0 / 6.0), requires_grad=True)
        loss, _ = joint_loss(d, P, rng.standard_normal((2, 3)), np.array([0, 5]), 0.0)
        loss.backward()
        np.testing.assert_array_equal(P.grad, np.zeros((2, 6)))
        assert np.any(d.grad != 0)


@pytest.mark.unit
class TestPinNetwork:
    """The shared-trunk two-head graph."""

    def test_parameter_order_and_shapes(self, tiny_network_config):
        shapes = parameter_shapes(tiny_network_config)
        assert list(shapes)[:4] == ["conv1.kernel", "conv1.bias", "conv2.kernel", "conv2.bias"]
        assert shapes["conv2.kernel"] == (3, 3, 2, 3)
        # 9 -> 4 -> 2 after two pooling stages, 3 channels
        assert shapes["reg_fc1.weight"] == (12, 4)
        assert shapes["reg_out.weight"] == (4, 3)
        assert shapes["cls_out.weight"] == (4, 6)

    def test_initialisation(self, tiny_network_config, rng):
        """Biases start at zero and weights stay within two sigma."""
        network = PinNetwork.initialise(tiny_network_config, 0.1, rng)
        for name, tensor in network.params.items():
            if name.endswith(".bias"):
                assert not tensor.data.any()
            else:
                assert np.abs(tensor.data).max() <= 0.2 + 1e-12

    def test_layer_specs(self, tiny_network_config, rng):
        specs = PinNetwork.initialise(tiny_network_config, 0.1, rng).layer_specs()
        kinds = [s.kind for s in specs]
        assert kinds.count(LayerKind.CONV3X3) == 2
        assert kinds.count(LayerKind.DROPOUT) == 2
        assert kinds[-1] is LayerKind.SOFTMAX

    def test_forward_shapes_and_probabilities(self, tiny_network_config, rng):
        network = PinNetwork.initialise(tiny_network_config, 0.1, rng)
        patches = rng.uniform(0, 1, (5, 9, 9, 3))
        d, P = network.predict(patches)
        assert d.shape == (5, 3) and P.shape == (5, 6)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)

        single = network.forward(PatchStack(patches[0]))
        np.testing.assert_allclose(single.d, d[0], atol=1e-12)
        assert single.P.shape == (6,)

    def test_infer_mode_is_deterministic(self, tiny_network_config, rng):
        config = replace(tiny_network_config, dropout_rate=0.5)
        network = PinNetwork.initialise(config, 0.1, rng)
        patches = rng.uniform(0, 1, (2, 9, 9, 3))
        first, second = network.predict(patches), network.predict(patches)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_train_mode_without_dropout_matches_infer(self, tiny_network_config, rng):
        """With dropout_rate 0 the two modes give identical outputs."""
        network = PinNetwork.initialise(tiny_network_config, 0.1, rng)
        patches = rng.uniform(0, 1, (4, 9, 9, 3))
        d_train, P_train = network.forward_graph(patches, Mode.TRAIN, np.random.default_rng(5))
        d_infer, P_infer = network.predict(patches)
        np.testing.assert_array_equal(d_train.data, d_infer)
        np.testing.assert_array_equal(P_train.data, P_infer)

    def test_untrained_full_size_patches_stay_finite(self):
        """101x101x3 input through five pooling stages, across 100 seeds."""
        config = NetworkConfig(input_side=101, conv_channels=(4, 4, 8, 8, 8), fc_widths=(16, 16))
        patch = np.random.default_rng(0).uniform(0, 1, (1, 101, 101, 3))
        for seed in range(100):
            network = PinNetwork.initialise(config, 0.1, np.random.default_rng(seed))
            d, P = network.predict(patch)
            assert np.all(np.isfinite(d)) and np.all(np.isfinite(P))
            np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-6)

    def test_params_must_match_layout(self, tiny_network_config, rng):
        params = dict(PinNetwork.initialise(tiny_network_config, 0.1, rng).params)
        del params["cls_out.bias"]
        with pytest.raises(ShapeError, match="cls_out.bias") as excinfo:
            PinNetwork(tiny_network_config, params)
        assert "cls_out.bias" not in excinfo.value.got

    def test_wrong_input_shape(self, tiny_network_config, rng):
        network = PinNetwork.initialise(tiny_network_config, 0.1, rng)
        with pytest.raises(ShapeError):
            network.predict(np.zeros((1, 11, 11, 3)))

    def test_composed_graph_gradients(self, tiny_network_config, rng):
        """The whole network plus loss passes a finite-difference check in 64-bit."""
        network = PinNetwork.initialise(tiny_network_config, 0.5, rng)
        patches = rng.uniform(0, 1, (2, 9, 9, 3))
        d_gt = rng.standard_normal((2, 3)) * 3
        classes = gt_labels(d_gt)

        def graph():
            d, P = network.forward_graph(patches, Mode.TRAIN, np.random.default_rng(0))
            return joint_loss(d, P, d_gt, classes, 0.5)[0]

        assert finite_difference_check(graph, list(network.params.values())) < 1e-4

    def test_manifest_round_trip(self, tiny_network_config):
        manifest = network_manifest(tiny_network_config)
        assert manifest["plane_order"] == "axial,coronal,sagittal"
        assert network_config_from_manifest(manifest) == tiny_network_config

    def test_manifest_rejects_other_plane_order(self, tiny_network_config):
        manifest = network_manifest(tiny_network_config)
        manifest["plane_order"] = "sagittal,coronal,axial"
        with pytest.raises(InvalidHeaderError):
            network_config_from_manifest(manifest)

    def test_manifest_missing_key(self, tiny_network_config):
        manifest = network_manifest(tiny_network_config)
        del manifest["n_o"]
        with pytest.raises(InvalidHeaderError):
            network_config_from_manifest(manifest)

    def test_checkpoint_round_trip_predicts_identically(self, tiny_network_config, rng):
        config = replace(tiny_network_config, precision=Precision.FLOAT32)
        network = PinNetwork.initialise(config, 0.1, rng)
        restored = PinNetwork.from_checkpoint(
            decode_checkpoint(encode_checkpoint(network.to_checkpoint({"mode": "single"})))
        )
        patches = rng.uniform(0, 1, (3, 9, 9, 3))
        np.testing.assert_array_equal(network.predict(patches)[0], restored.predict(patches)[0])

    def test_checkpoint_missing_block(self, tiny_network_config, rng):
        checkpoint = PinNetwork.initialise(tiny_network_config, 0.1, rng).to_checkpoint()
        del checkpoint.blocks["cls_out.bias"]
        with pytest.raises(InvalidHeaderError):
            PinNetwork.from_checkpoint(checkpoint)


@pytest.mark.unit
class TestSamples:
    """Training-sample synthesis."""

    def test_positions_are_uniform(self, rng):
        points = np.array([sample_position((16, 20, 24), rng) for _ in range(3000)])
        for axis, dim in enumerate((16, 20, 24)):
            scaled = (points[:, axis] + 0.5) / dim
            assert kstest(scaled, "uniform").pvalue > 1e-3

    def test_rounded_positions_cover_every_voxel(self, rng):
        points = np.array([sample_position((8, 8, 8), rng) for _ in range(4000)])
        voxels = np.floor(points[:, 0] + 0.5).astype(int)
        counts = np.bincount(voxels, minlength=8)
        assert counts.size == 8
        assert counts.min() > 350

    def test_single_sample_targets(self, phantom_case, rng):
        volume, landmarks = phantom_case
        x_gt = landmarks.point(2)
        sample = make_sample_single(volume, x_gt, 9, rng)
        np.testing.assert_allclose(sample.position + sample.d_gt, x_gt, atol=1e-12)
        assert sample.class_index == gt_label(sample.d_gt)
        assert sample.patch.data.shape == (9, 9, 3)

    def test_b_draws_are_truncated(self, fitted_shape_model, rng):
        limits = fitted_shape_model.mode_limits()
        for multiplier in (0.5, 1.0, 2.0):
            draws = np.array([sample_b(fitted_shape_model, rng, multiplier) for _ in range(300)])
            assert np.all(np.abs(draws) <= limits + 1e-12)

    def test_multi_sample_at_mean_shape(self, phantom_case, fitted_shape_model, rng):
        """With b = 0 the target is the projected ground truth."""
        volume, landmarks = phantom_case
        sample = make_sample_multi(
            volume, landmarks, fitted_shape_model, 9, rng, b=np.zeros(fitted_shape_model.n_modes)
        )
        np.testing.assert_allclose(sample.d_gt, fitted_shape_model.to_b(landmarks.flatten()))
        assert sample.patch.channels == 3 * landmarks.n_landmarks

    def test_multi_patch_follows_landmark_order(self, fitted_shape_model, rng):
        """Group k of the block is the patch at landmark k of the started shape."""
        data = rng.uniform(0, 1, (32, 32, 32))
        volume = Volume.create(data)
        b = np.zeros(fitted_shape_model.n_modes)
        sample = make_sample_multi(
            volume,
            LandmarkSet.from_flat(fitted_shape_model.mean),
            fitted_shape_model,
            5,
            rng,
            b=b,
        )
        start = LandmarkSet.from_flat(fitted_shape_model.to_x(b))
        for k in range(start.n_landmarks):
            np.testing.assert_array_equal(
                sample.patch.point_channels(k), extract_patch(volume, start.point(k), 5).data
            )
