"""Operator CLI: train, predict, eval and run subcommands.

Exit status: 0 success, 1 validation/usage error, 2 I/O or protocol
failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import model_io, pipeline
from .classifiers import (LABELS, EmotionScores, EmptyClass, LdaModel,
                          cnn_predict, cnn_train, evaluate, lda_predict,
                          lda_train)
from .config import ConfigError, build_config, load_config_file
from .dataset import load_dataset_dir
from .nn import CnnModel
from .preprocess import bilinear_resize, load_detections
from .video import VideoFormatError, Y4mReader, parse_pgm

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def format_scores(scores: EmotionScores) -> str:
    """Stable report grammar: one `label=NN.NN%` line per label, then argmax."""
    lines = [f"{name}={p * 100.0:.2f}%" for name, p in zip(LABELS, scores.probs)]
    lines.append(f"argmax: {scores.label}")
    return "\n".join(lines)


def _cmd_train(args) -> int:
    if args.epochs < 1:
        print("error: --epochs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    x, y = load_dataset_dir(args.data, roi_size=args.roi_size)
    if args.model_kind == "lda":
        model = lda_train(x, y)
        print("fitted PCA+LDA model "
              f"(d={model.pca_basis.shape[1]}, n={len(y)})")
    else:
        model, history = cnn_train(x, y, epochs=args.epochs, lr=args.lr,
                                   seed=args.seed)
        for h in history:
            print(f"epoch {h.epoch}: loss={h.mean_loss:.4f} "
                  f"accuracy={h.train_accuracy * 100.0:.2f}%")
    model_io.save_model_file(model, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = model_io.load_model_file(args.model)
    with open(args.image, "rb") as fh:
        frame = parse_pgm(fh.read())
    side = model.input_side if isinstance(model, CnnModel) else \
        int(round(np.sqrt(model.pca_mean.shape[0])))
    img = frame.luma.astype(np.float64)
    if img.shape != (side, side):
        img = bilinear_resize(img, side, side)
    sample = (img / 255.0).astype(np.float32)
    if isinstance(model, LdaModel):
        scores = lda_predict(model, sample)
    else:
        scores = cnn_predict(model, sample)
    print(format_scores(scores))
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = model_io.load_model_file(args.model)
    roi_size = model.input_side if isinstance(model, CnnModel) else \
        int(round(np.sqrt(model.pca_mean.shape[0])))
    x, y = load_dataset_dir(args.data, roi_size=roi_size)
    accuracy, confusion = evaluate(model, x, y)
    print(f"accuracy: {accuracy * 100.0:.2f}")
    print("confusion (rows true, cols predicted):")
    for i, name in enumerate(LABELS):
        print(f"{name:>10} " + " ".join(f"{n:5d}" for n in confusion[i]))
    return EXIT_OK


def _cmd_run(args) -> int:
    file_values = None
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            from .config import parse_config_text
            file_values = parse_config_text(fh.read())
    config = build_config(file_values, thresh=args.thresh,
                          cooldown=args.cooldown, width=args.width,
                          roi_size=args.roi_size,
                          smooth_window=args.smooth_window)
    model = model_io.load_model_file(args.model)
    with open(args.detections, "rb") as fh:
        detections = load_detections(fh.read())
    log_fh = open(args.event_log, "w", encoding="utf-8") if args.event_log else None
    try:
        with open(args.video, "rb") as fh:
            reader = Y4mReader(fh)
            report = pipeline.run_stream(
                reader, detections, model, config, event_log=log_fh,
                warn=lambda msg: print(f"warning: {msg}", file=sys.stderr))
    finally:
        if log_fh:
            log_fh.close()
    print(report.summary_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emonet",
        description="Facial-emotion monitoring: classification and alerting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier on a label-directory dataset")
    p.add_argument("--data", required=True, help="dataset root (one dir per label)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--roi-size", type=int, default=28)
    p.add_argument("--model-kind", choices=("cnn", "lda"), default="cnn")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a single PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="accuracy and confusion matrix on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="process a Y4M stream with detections sidecar")
    p.add_argument("--video", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--thresh", type=int)
    p.add_argument("--cooldown", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--roi-size", type=int)
    p.add_argument("--smooth-window", type=int)
    p.add_argument("--event-log", help="file to append alert lines to")
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, VideoFormatError, model_io.ModelFileError,
            pipeline.PipelineStageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, EmptyClass, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
