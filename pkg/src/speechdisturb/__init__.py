"""Speech-disturbance metrics for annotated interview transcripts."""

__version__ = "0.1.0"
