"""Pipeline configuration: line-based key=value files plus environment
overrides for the SMTP settings (environment wins over the file).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .alerts import DEFAULT_MONITORED
from .classifiers import LABELS
from .smtp_client import SmtpConfig

ENV_SMTP_HOST = "EMONET_SMTP_HOST"
ENV_SMTP_PORT = "EMONET_SMTP_PORT"
ENV_ALERT_FROM = "EMONET_ALERT_FROM"
ENV_ALERT_TO = "EMONET_ALERT_TO"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    thresh: int
    width: int = 500
    roi_size: int = 28
    monitored_labels: frozenset[str] = DEFAULT_MONITORED
    cooldown: int = 0
    smooth_window: int = 1               # 1 disables temporal smoothing
    detections_coords: str = "original"  # or "resized"
    smtp_host: str | None = None
    smtp_port: int = 25
    alert_from: str | None = None
    alert_to: tuple[str, ...] = ()

    def __post_init__(self):
        if self.thresh < 1:
            raise ConfigError("thresh must be >= 1")
        if self.width < 1 or self.roi_size < 1:
            raise ConfigError("width and roi_size must be >= 1")
        if self.smooth_window not in (1, 3, 5):
            raise ConfigError("smooth_window must be 1, 3 or 5")
        if self.detections_coords not in ("original", "resized"):
            raise ConfigError("detections_coords must be 'original' or 'resized'")
        unknown = self.monitored_labels - set(LABELS)
        if unknown:
            raise ConfigError(f"unknown monitored labels: {sorted(unknown)}")

    def smtp_config(self) -> SmtpConfig | None:
        """SMTP settings if fully configured, else None (alerts log-only)."""
        if not (self.smtp_host and self.alert_from and self.alert_to):
            return None
        return SmtpConfig(host=self.smtp_host, port=self.smtp_port,
                          sender=self.alert_from, recipients=self.alert_to)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key=value` lines; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key] = val
    return out


_KNOWN_KEYS = {
    "thresh", "width", "roi_size", "monitored_labels", "cooldown",
    "smooth_window", "detections_coords", "smtp_host", "smtp_port",
    "alert_from", "alert_to",
}


def build_config(file_values: dict[str, str] | None = None,
                 env: dict[str, str] | None = None,
                 **overrides) -> PipelineConfig:
    """Merge defaults < config file < environment (SMTP keys) < overrides."""
    values = dict(file_values or {})
    for key in values:
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    env = os.environ if env is None else env
    kwargs: dict = {}
    if "thresh" in values:
        kwargs["thresh"] = int(values["thresh"])
    for key in ("width", "roi_size", "cooldown", "smooth_window", "smtp_port"):
        if key in values:
            kwargs[key] = int(values[key])
    for key in ("detections_coords", "smtp_host", "alert_from"):
        if key in values:
            kwargs[key] = values[key]
    if "monitored_labels" in values:
        kwargs["monitored_labels"] = frozenset(
            s.strip() for s in values["monitored_labels"].split(",") if s.strip())
    if "alert_to" in values:
        kwargs["alert_to"] = tuple(
            s.strip() for s in values["alert_to"].split(",") if s.strip())
    if env.get(ENV_SMTP_HOST):
        kwargs["smtp_host"] = env[ENV_SMTP_HOST]
    if env.get(ENV_SMTP_PORT):
        kwargs["smtp_port"] = int(env[ENV_SMTP_PORT])
    if env.get(ENV_ALERT_FROM):
        kwargs["alert_from"] = env[ENV_ALERT_FROM]
    if env.get(ENV_ALERT_TO):
        kwargs["alert_to"] = tuple(
            s.strip() for s in env[ENV_ALERT_TO].split(",") if s.strip())
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if "thresh" not in kwargs:
        raise ConfigError("thresh is mandatory (config file or flag)")
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str, env: dict[str, str] | None = None,
                     **overrides) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return build_config(parse_config_text(fh.read()), env=env, **overrides)
