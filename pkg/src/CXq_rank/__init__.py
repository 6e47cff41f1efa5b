"""CXq_rank: unbiased pairwise learning-to-rank from biased click and dwell-time feedback."""

__version__ = "0.1.0"
