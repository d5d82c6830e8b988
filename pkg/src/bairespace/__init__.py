"""Baire space toolkit: continuous maps on sequences, Sigma^0_2 reductions,
Borel codes and partitions, full functions, approximation of Baire class 1
functions, and ultrametric embeddings."""

__version__ = "0.1.0"
