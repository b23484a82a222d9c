"""CLI tests: subcommand behavior, report grammar, exit codes."""

import numpy as np
import pytest

from emonet import cli
from emonet.classifiers import EmotionScores
from emonet.dataset import save_dataset_dir
from emonet.glyphs import draw_glyph, make_glyph_dataset
from emonet.video import Frame, write_pgm

from test_pipeline import make_video, sidecar  # noqa: F401  (shared builders)


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("glyphs")
    x, y = make_glyph_dataset(n_per_class=8, seed=11)
    save_dataset_dir(x, y, str(root))
    return str(root)


@pytest.fixture(scope="module")
def lda_model_path(dataset_dir, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("models") / "lda.emn1")
    code = cli.main(["train", "--data", dataset_dir, "--model-kind", "lda",
                     "--out", out])
    assert code == 0
    return out


class TestFormatScores:
    def test_reference_report(self):
        scores = EmotionScores.from_percentages({
            "angry": 0.82, "disgust": 0.15, "scared": 7.89, "happy": 22.18,
            "sad": 8.10, "surprised": 1.33, "neutral": 53.85,
        })
        text = cli.format_scores(scores)
        assert text.splitlines() == [
            "angry=0.82%",
            "disgust=0.15%",
            "scared=7.89%",
            "happy=22.18%",
            "sad=8.10%",
            "surprised=1.33%",
            "neutral=53.85%",
            "argmax: neutral",
        ]


class TestTrainPredictEval:
    def test_train_lda_writes_model(self, lda_model_path, capsys):
        import os
        assert os.path.exists(lda_model_path)

    def test_train_cnn_prints_epochs(self, dataset_dir, tmp_path, capsys):
        out = str(tmp_path / "cnn.emn1")
        code = cli.main(["train", "--data", dataset_dir, "--epochs", "2",
                         "--out", out])
        captured = capsys.readouterr()
        assert code == 0
        assert "epoch 0:" in captured.out and "epoch 1:" in captured.out
        assert "loss=" in captured.out

    def test_predict_reports_argmax(self, lda_model_path, tmp_path, capsys):
        img = np.clip(np.rint(draw_glyph("happy") * 255.0), 0, 255).astype(np.uint8)
        path = tmp_path / "sample.pgm"
        path.write_bytes(write_pgm(Frame(0, 28, 28, img)))
        code = cli.main(["predict", "--image", str(path),
                         "--model", lda_model_path])
        captured = capsys.readouterr()
        assert code == 0
        assert "argmax: happy" in captured.out
        assert sum("=" in line for line in captured.out.splitlines()) == 7

    def test_eval_prints_accuracy_and_confusion(self, lda_model_path,
                                                dataset_dir, capsys):
        code = cli.main(["eval", "--data", dataset_dir,
                         "--model", lda_model_path])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("accuracy: ")
        assert "neutral" in captured.out

    def test_bad_epochs_is_validation_error(self, dataset_dir, tmp_path):
        code = cli.main(["train", "--data", dataset_dir, "--epochs", "0",
                         "--out", str(tmp_path / "m.emn1")])
        assert code == 1


class TestRun:
    def test_end_to_end_run(self, lda_model_path, tmp_path, capsys):
        video = tmp_path / "clip.y4m"
        video.write_bytes(make_video(["neutral"] * 4 + ["sad"] * 4,
                                     canvas=100))
        dets = tmp_path / "clip.dets"
        lines = ["# min_size=1x1"] + [f"{i} 10 10 28 28" for i in range(8)]
        dets.write_text("\n".join(lines) + "\n")
        log = tmp_path / "events.log"
        code = cli.main(["run", "--video", str(video),
                         "--detections", str(dets),
                         "--model", lda_model_path,
                         "--thresh", "3", "--width", "100",
                         "--event-log", str(log)])
        captured = capsys.readouterr()
        assert code == 0
        assert "events=1" in captured.out
        assert log.read_text().startswith("7 sad 4 ")

    def test_config_file_supplies_thresh(self, lda_model_path, tmp_path, capsys):
        video = tmp_path / "clip.y4m"
        video.write_bytes(make_video(["happy"] * 2, canvas=100))
        dets = tmp_path / "clip.dets"
        dets.write_text("# min_size=1x1\n0 10 10 28 28\n1 10 10 28 28\n")
        conf = tmp_path / "run.conf"
        conf.write_text("thresh=5\nwidth=100\n")
        code = cli.main(["run", "--video", str(video),
                         "--detections", str(dets),
                         "--model", lda_model_path,
                         "--config", str(conf)])
        assert code == 0
        assert "events=0" in capsys.readouterr().out

    def test_missing_thresh_is_validation_error(self, lda_model_path,
                                                tmp_path, capsys):
        video = tmp_path / "clip.y4m"
        video.write_bytes(make_video(["happy"], canvas=100))
        dets = tmp_path / "clip.dets"
        dets.write_text("0 10 10 28 28\n")
        code = cli.main(["run", "--video", str(video),
                         "--detections", str(dets),
                         "--model", lda_model_path])
        assert code == 1


class TestExitCodes:
    def test_missing_model_file_is_io_error(self, tmp_path, capsys):
        img = tmp_path / "x.pgm"
        img.write_bytes(b"P5\n1 1\n255\n\x00")
        code = cli.main(["predict", "--image", str(img),
                         "--model", str(tmp_path / "nope.emn1")])
        assert code == 2

    def test_corrupt_model_is_io_error(self, tmp_path, capsys):
        img = tmp_path / "x.pgm"
        img.write_bytes(b"P5\n1 1\n255\n\x00")
        bad = tmp_path / "bad.emn1"
        bad.write_bytes(b"NOPE" + b"\x00" * 32)
        code = cli.main(["predict", "--image", str(img), "--model", str(bad)])
        assert code == 2

    def test_truncated_video_is_io_error(self, lda_model_path, tmp_path, capsys):
        video = tmp_path / "bad.y4m"
        video.write_bytes(b"YUV4MPEG2 W8 H8 F25:1 Cmono\nFRAME\n\x00\x00")
        dets = tmp_path / "d.dets"
        dets.write_text("# min_size=1x1\n0 0 0 8 8\n")
        code = cli.main(["run", "--video", str(video),
                         "--detections", str(dets),
                         "--model", lda_model_path, "--thresh", "3"])
        assert code == 2
