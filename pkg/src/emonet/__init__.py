"""emonet: facial-emotion monitoring with CNN / PCA+LDA classification,
threshold alerting and SMTP dispatch."""

from .classifiers import LABELS, EmotionScores

__all__ = ["LABELS", "EmotionScores"]
__version__ = "0.1.0"
