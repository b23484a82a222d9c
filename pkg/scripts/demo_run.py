#!/usr/bin/env python3
"""Self-contained demo: synthesize a short Y4M clip with glyph "faces",
train a quick baseline model, run the monitoring pipeline against an
in-process stub SMTP server, and print the alert log plus the captured
mail dialogue.
"""

import argparse
import io
import tempfile

import numpy as np

from emonet import pipeline
from emonet.classifiers import lda_train
from emonet.config import PipelineConfig
from emonet.glyphs import draw_glyph, make_glyph_dataset
from emonet.preprocess import bilinear_resize, load_detections
from emonet.smtp_client import StubSmtpServer
from emonet.video import Frame, VideoHeader, Y4mReader, write_y4m


def build_clip(labels, canvas_w=500, canvas_h=300, at=(20, 20), side=112):
    frames = []
    for i, label in enumerate(labels):
        luma = np.zeros((canvas_h, canvas_w), dtype=np.uint8)
        glyph = bilinear_resize(draw_glyph(label), side, side)
        patch = np.clip(np.rint(glyph * 255.0), 0, 255).astype(np.uint8)
        luma[at[1]:at[1] + side, at[0]:at[0] + side] = patch
        frames.append(Frame(index=i, width=canvas_w, height=canvas_h, luma=luma))
    header = VideoHeader(canvas_w, canvas_h, 25, 1, "mono")
    sidecar = ["# scale_factor=1.0 min_neighbors=12 min_size=60x60"]
    sidecar += [f"{i} {at[0]} {at[1]} {side} {side}" for i in range(len(labels))]
    return write_y4m(header, frames), ("\n".join(sidecar) + "\n").encode()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--thresh", type=int, default=5)
    parser.add_argument("--sad-frames", type=int, default=6)
    parser.add_argument("--neutral-frames", type=int, default=14)
    args = parser.parse_args()

    print("training baseline model on synthetic glyphs...")
    x, y = make_glyph_dataset(n_per_class=40, seed=3)
    model = lda_train(x, y)

    labels = ["neutral"] * args.neutral_frames + ["sad"] * args.sad_frames
    video, sidecar = build_clip(labels)
    detections = load_detections(sidecar)

    script = ["220 stub", "250 stub", "250 ok", "250 ok", "354 go",
              "250 queued", "221 bye"]
    with StubSmtpServer(script) as server:
        config = PipelineConfig(thresh=args.thresh, width=500,
                                smtp_host="127.0.0.1", smtp_port=server.port,
                                alert_from="monitor@example.org",
                                alert_to=("oncall@example.org",))
        log = io.StringIO()
        report = pipeline.run_stream(Y4mReader(video), detections, model,
                                     config, event_log=log)
        print("--- run summary ---")
        print(report.summary_text())
        print("--- event log ---")
        print(log.getvalue() or "(no alerts)")
        if server.session.commands:
            print("--- captured SMTP dialogue ---")
            for cmd in server.session.commands:
                print(f"C: {cmd}")
            print("--- mail body ---")
            for line in server.session.unstuffed_body():
                print(line)


if __name__ == "__main__":
    main()
