"""
Hypersphere embedding training: L2 normalization, scaled-cosine softmax,
agent-based metric losses, numeric checks of the loss geometry, and
pair/video verification evaluation.
"""
__version__ = "0.1.0"
