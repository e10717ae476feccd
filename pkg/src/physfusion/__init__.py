"""Startle, surprise and baseline classification from ECG, EDA, PPG and respiration.

The pipeline runs filter -> epoch -> features -> classifier -> fusion ->
evaluation; :mod:`physfusion.synth` provides a controllable synthetic
benchmark and :mod:`physfusion.cli` a file-based front end.
"""

from .core import ChannelKind, ClassLabel, EventAnnotation, Epoch, FeatureVector, RawRecording
from .errors import PipelineError

__version__ = "0.1.0"

__all__ = ["ChannelKind", "ClassLabel", "EventAnnotation", "Epoch", "FeatureVector",
           "RawRecording", "PipelineError", "__version__"]
