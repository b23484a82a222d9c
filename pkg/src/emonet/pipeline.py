"""End-to-end stream processing: frames -> preprocessing -> classification
-> alert counters -> (optional) SMTP dispatch.

Frames with no usable detection still advance the frame counter and the
alert cooldown, so alert pacing does not depend on detector dropouts.
SMTP failures are logged and counted, never fatal: monitoring availability
beats delivery guarantees.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import alerts, smtp_client
from .classifiers import EmotionScores, LdaModel, cnn_predict, lda_predict
from .config import PipelineConfig
from .nn import CnnModel
from .preprocess import (DetectionSet, extract_roi, resize_to_width,
                         select_primary_face)
from .video import Y4mReader, temporal_smooth


class PipelineStageError(RuntimeError):
    """A stage failure wrapped with the frame index it happened on."""

    def __init__(self, frame_index: int, cause: Exception):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index


@dataclass
class RunReport:
    state: alerts.CounterState
    events: list[alerts.AlertEvent] = field(default_factory=list)
    smtp_failures: int = 0
    emails_sent: int = 0

    def summary_text(self) -> str:
        lines = [alerts.render_summary(self.state),
                 f"events={len(self.events)} emails_sent={self.emails_sent} "
                 f"smtp_failures={self.smtp_failures}"]
        return "\n".join(lines)


def _predict(model, roi) -> EmotionScores:
    if isinstance(model, LdaModel):
        return lda_predict(model, roi.pixels)
    return cnn_predict(model, roi)


def run_stream(reader: Y4mReader, detections: DetectionSet, model,
               config: PipelineConfig, event_log=None,
               clock=alerts._utc_now, send=smtp_client.send_alert,
               warn=None) -> RunReport:
    """Process every frame of a Y4M stream; returns the run report.

    event_log, when given, receives one line per alert (flushed as
    written). send is the SMTP dispatcher, injectable for tests.
    """
    policy = alerts.AlertPolicy(thresh=config.thresh,
                                monitored_labels=config.monitored_labels,
                                cooldown_frames=config.cooldown)
    state = alerts.CounterState()
    report = RunReport(state=state)
    smtp_cfg = config.smtp_config()
    window: deque = deque(maxlen=config.smooth_window)

    for frame in reader:
        window.append(frame)
        current = (temporal_smooth(list(window))
                   if len(window) == config.smooth_window else frame)
        try:
            resized = resize_to_width(current, config.width)
            factor = config.width / frame.width
            boxes = detections.for_frame(frame.index)
            if config.detections_coords == "original" and factor != 1.0:
                boxes = [b.scaled(factor) for b in boxes]
            box = select_primary_face(boxes)
            if box is None:
                alerts.tick(state, policy, frame.index)
                continue
            roi = extract_roi(resized, box, roi_size=config.roi_size)
            scores = _predict(model, roi)
            event = alerts.ingest(state, policy, frame.index, scores, clock=clock)
        except Exception as exc:
            raise PipelineStageError(frame.index, exc) from exc
        if event is None:
            continue
        report.events.append(event)
        if event_log is not None:
            event_log.write(event.log_line() + "\n")
            event_log.flush()
        if smtp_cfg is not None:
            try:
                send(smtp_cfg, event)
                report.emails_sent += 1
            except smtp_client.SmtpError as exc:
                report.smtp_failures += 1
                if warn is not None:
                    warn(f"smtp delivery failed for frame {event.frame_index}: {exc}")
    return report
