"""
Tests for CLI command handlers with mocked services.
"""

import struct
from unittest.mock import Mock

import numpy as np
import pytest

from cli.commands import (
    handle_eval_ablation,
    handle_eval_multi,
    handle_fit_pca,
    handle_gen_data,
    handle_infer,
    handle_train,
)
from core.errors import TrainingDivergedError
from main import create_parser, main
from models.network import TrainingMode
from models.volume import Volume
from network.pin_network import PinNetwork
from services.training_service import TrainingResult
from storage.checkpoint_storage import save_checkpoint
from storage.dataset_storage import read_manifest
from storage.shape_storage import load_shape_model, save_shape_model
from storage.volume_storage import encode_volume, write_volume


@pytest.mark.unit
class TestCLICommands:
    """Test CLI command handlers."""

    def test_handle_gen_data_success(self, tiny_config_file, tmp_path, capsys):
        """Test phantom generation writes cases, manifest and config echo."""
        out = tmp_path / "data"
        result = handle_gen_data(str(tiny_config_file), str(out), 5)

        assert result == 0
        entries = read_manifest(out / "manifest.csv")
        assert len(entries) == 5
        assert all((out / e.volume_path).exists() for e in entries)
        assert (out / "effective_config_gen_data.txt").exists()
        assert "SUCCESS" in capsys.readouterr().out

    def test_handle_gen_data_invalid_phantom(self, tmp_path, capsys):
        """Test that a pose range past the border margin is a runtime error."""
        config = tmp_path / "bad.cfg"
        config.write_text("dims=48,48,48\ntranslation_range=12\n")

        result = handle_gen_data(str(config), str(tmp_path / "data"), 3)

        assert result == 2
        assert "ERROR:" in capsys.readouterr().err
        assert not (tmp_path / "data" / "manifest.csv").exists()

    def test_handle_gen_data_missing_config(self, tmp_path):
        """Test a config path that does not exist."""
        assert handle_gen_data(str(tmp_path / "absent.cfg"), str(tmp_path / "data"), 3) == 2

    def test_handle_fit_pca_success(self, tiny_config_file, tmp_path):
        """Test shape model fitting on generated data."""
        data = tmp_path / "data"
        assert handle_gen_data(str(tiny_config_file), str(data), 10) == 0

        out = tmp_path / "model" / "shape.pins"
        result = handle_fit_pca(str(data / "manifest.csv"), 0.995, str(out))

        assert result == 0
        model = load_shape_model(out)
        assert model.n_landmarks == 10
        assert 1 <= model.n_modes <= 12

    def test_handle_fit_pca_reads_threshold_from_config(self, tiny_config_file, tmp_path):
        """Test that --threshold falls back to variance_threshold and overrides it when given."""
        data = tmp_path / "data"
        assert handle_gen_data(str(tiny_config_file), str(data), 10) == 0
        config = tmp_path / "pca.cfg"
        config.write_text("variance_threshold=0.5\n")

        loose = tmp_path / "loose" / "shape.pins"
        assert handle_fit_pca(str(data / "manifest.csv"), None, str(loose), str(config)) == 0
        echoed = (loose.parent / "effective_config_fit_pca.txt").read_text().splitlines()
        assert "variance_threshold=0.5" in echoed

        tight = tmp_path / "tight" / "shape.pins"
        assert handle_fit_pca(str(data / "manifest.csv"), 0.995, str(tight), str(config)) == 0
        echoed = (tight.parent / "effective_config_fit_pca.txt").read_text().splitlines()
        assert "variance_threshold=0.995" in echoed
        assert load_shape_model(loose).n_modes <= load_shape_model(tight).n_modes

    def test_stages_echo_to_separate_files(self, tiny_config_file, tmp_path):
        """Test that two stages writing into one directory keep their own echo."""
        data = tmp_path / "data"
        assert handle_gen_data(str(tiny_config_file), str(data), 10) == 0
        assert handle_fit_pca(str(data / "manifest.csv"), 0.9, str(data / "shape.pins")) == 0
        assert (data / "effective_config_gen_data.txt").exists()
        assert (data / "effective_config_fit_pca.txt").exists()
        assert not (data / "effective_config.txt").exists()

    def test_handle_fit_pca_missing_manifest(self, tmp_path):
        result = handle_fit_pca(str(tmp_path / "manifest.csv"), 0.995, str(tmp_path / "s.pins"))
        assert result == 2

    def test_handle_train_single_with_mock(self, tiny_config_file, tmp_path):
        """Test that the single-mode network has 3 channels and 3 outputs."""
        mock_service = Mock()
        mock_service.train.return_value = TrainingResult(tmp_path / "model.pinc", 4)
        mock_factory = Mock()
        mock_factory.create_training_service.return_value = mock_service

        result = handle_train(
            "single", 2, str(tiny_config_file), "manifest.csv", str(tmp_path), factory=mock_factory
        )

        assert result == 0
        mock_factory.create_training_service.assert_called_once_with("manifest.csv")
        network_config, train_config, out_dir = mock_service.train.call_args.args
        assert network_config.input_channels == 3
        assert network_config.n_o == 3
        assert network_config.input_side == 9
        assert train_config.iterations == 4
        assert mock_service.train.call_args.kwargs["mode"] is TrainingMode.SINGLE
        assert mock_service.train.call_args.kwargs["landmark_index"] == 2

    def test_handle_train_multi_without_shape_model(self, tiny_config_file, tmp_path, capsys):
        """Test multi mode refuses to run without a shape model."""
        mock_factory = Mock()

        result = handle_train(
            "multi", 0, str(tiny_config_file), "manifest.csv", str(tmp_path), factory=mock_factory
        )

        assert result == 2
        assert "--shape-model" in capsys.readouterr().err
        mock_factory.create_training_service.assert_not_called()

    def test_handle_train_multi_sizes_network_from_shape_model(
        self, tiny_config_file, fitted_shape_model, tmp_path
    ):
        shape_path = tmp_path / "shape.pins"
        save_shape_model(fitted_shape_model, shape_path)
        mock_service = Mock()
        mock_service.train.return_value = TrainingResult(tmp_path / "model.pinc", 4)
        mock_factory = Mock()
        mock_factory.create_training_service.return_value = mock_service

        result = handle_train(
            "multi",
            0,
            str(tiny_config_file),
            "manifest.csv",
            str(tmp_path),
            shape_model_path=str(shape_path),
            factory=mock_factory,
        )

        assert result == 0
        network_config = mock_service.train.call_args.args[0]
        assert network_config.input_channels == 30
        assert network_config.n_o == fitted_shape_model.n_modes

    def test_handle_train_divergence(self, tiny_config_file, tmp_path, capsys):
        """Test that divergence maps to exit code 2."""
        mock_service = Mock()
        mock_service.train.side_effect = TrainingDivergedError(17, None)
        mock_factory = Mock()
        mock_factory.create_training_service.return_value = mock_service

        result = handle_train(
            "single", 0, str(tiny_config_file), "manifest.csv", str(tmp_path), factory=mock_factory
        )

        assert result == 2
        assert "iteration 17" in capsys.readouterr().err

    def test_handle_infer_missing_checkpoint(self, tmp_path, capsys):
        """Test inference with a checkpoint that does not exist."""
        mock_factory = Mock()

        result = handle_infer(
            str(tmp_path / "absent.pinc"),
            str(tmp_path / "v.pinv"),
            str(tmp_path / "out.csv"),
            factory=mock_factory,
        )

        assert result == 2
        assert "checkpoint" in capsys.readouterr().err
        mock_factory.create_inference_service.assert_not_called()

    def test_handle_eval_ablation_bad_checkpoint_spec(self, tmp_path, capsys):
        """Test a --checkpoint value without ALPHA=PATH form."""
        mock_factory = Mock()

        result = handle_eval_ablation(
            "manifest.csv", ["model.pinc"], str(tmp_path), factory=mock_factory
        )

        assert result == 2
        assert "ALPHA=PATH" in capsys.readouterr().err
        mock_factory.create_evaluation_service.return_value.run_ablation.assert_not_called()

    def test_handle_eval_ablation_parses_alphas(self, tmp_path):
        mock_factory = Mock()
        service = mock_factory.create_evaluation_service.return_value
        service.run_ablation.return_value = []

        result = handle_eval_ablation(
            "manifest.csv",
            ["0=a.pinc", "0.5=b.pinc", "1=c.pinc"],
            str(tmp_path),
            landmark=4,
            factory=mock_factory,
        )

        assert result == 0
        checkpoints = service.run_ablation.call_args.args[0]
        assert checkpoints == {0.0: "a.pinc", 0.5: "b.pinc", 1.0: "c.pinc"}
        assert service.run_ablation.call_args.kwargs["landmark_index"] == 4

    def test_handle_eval_multi_missing_shape_model(self, tmp_path):
        mock_factory = Mock()
        result = handle_eval_multi(
            "manifest.csv",
            ["a.pinc"],
            "m.pinc",
            str(tmp_path / "absent.pins"),
            str(tmp_path),
            factory=mock_factory,
        )
        assert result == 2


@pytest.mark.unit
class TestMain:
    """Test argument parsing and exit codes."""

    def test_no_command(self, capsys):
        assert main([]) == 1

    def test_unknown_option_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["gen-data", "--out", "x", "--count", "3", "--colour", "red"])
        assert excinfo.value.code == 1

    def test_missing_required_option(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["train", "--mode", "single", "--manifest", "m.csv"])
        assert excinfo.value.code == 1

    def test_bad_rule_choice(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["infer", "--checkpoint", "c", "--volume", "v", "--out", "o", "--rule", "D"])
        assert excinfo.value.code == 1

    def test_rule_is_case_insensitive(self):
        args = create_parser().parse_args(
            ["infer", "--checkpoint", "c", "--volume", "v", "--out", "o", "--rule", "b"]
        )
        assert args.rule == "B"

    def test_repeated_checkpoints_collect(self):
        args = create_parser().parse_args(
            [
                "eval-ablation",
                "--manifest",
                "m.csv",
                "--checkpoint",
                "0=a",
                "--checkpoint",
                "1=b",
                "--out",
                "r",
            ]
        )
        assert args.checkpoints == ["0=a", "1=b"]
        assert args.landmark is None

    def test_missing_checkpoint_exit_code(self, tmp_path):
        code = main(
            [
                "infer",
                "--checkpoint",
                str(tmp_path / "absent.pinc"),
                "--volume",
                str(tmp_path / "v.pinv"),
                "--out",
                str(tmp_path / "o.csv"),
            ]
        )
        assert code == 2
        assert not (tmp_path / "o.csv").exists()

    def _infer(self, checkpoint, volume, tmp_path):
        return main(
            [
                "infer",
                "--checkpoint",
                str(checkpoint),
                "--volume",
                str(volume),
                "--out",
                str(tmp_path / "o.csv"),
            ]
        )

    def _checkpoint(self, tiny_network_config, rng, path, note="ok"):
        network = PinNetwork.initialise(tiny_network_config, 0.1, rng)
        checkpoint = network.to_checkpoint({"mode": "single", "landmark_index": "0", "note": note})
        save_checkpoint(checkpoint, path)
        return path

    def test_nan_volume_exit_code(self, tiny_network_config, rng, tmp_path, capsys):
        """Test that a volume holding NaN intensities is reported, not raised."""
        checkpoint = self._checkpoint(tiny_network_config, rng, tmp_path / "m.pinc")
        raw = bytearray(encode_volume(Volume.create(np.ones((12, 12, 12)))))
        raw[30:34] = struct.pack("<f", float("nan"))
        volume = tmp_path / "v.pinv"
        volume.write_bytes(bytes(raw))

        assert self._infer(checkpoint, volume, tmp_path) == 2
        assert "ERROR:" in capsys.readouterr().err
        assert not (tmp_path / "o.csv").exists()

    def test_checkpoint_manifest_not_utf8_exit_code(
        self, tiny_network_config, rng, tmp_path, capsys
    ):
        checkpoint = self._checkpoint(tiny_network_config, rng, tmp_path / "m.pinc", note="zz")
        checkpoint.write_bytes(checkpoint.read_bytes().replace(b"note=zz", b"note=\xff\xfe"))
        volume = tmp_path / "v.pinv"
        write_volume(Volume.create(np.ones((12, 12, 12))), volume)

        assert self._infer(checkpoint, volume, tmp_path) == 2
        assert "UTF-8" in capsys.readouterr().err
