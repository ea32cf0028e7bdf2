"""Counterfactual prompting of a small masked video predictor: optical
flow, movable-object segments, keypoints and relative depth are read out
of one model by asking "what if this patch moved?" instead of training
per-task heads."""

__version__ = "0.1.0"
