"""
Multi-scale spectral graph wavelet neural networks.

Exact and Chebyshev-approximated graph wavelet operators, GWNN/GCN layers,
percentile-threshold graph construction from patch feature grids, multi-branch
training with combined node/graph losses and a synthetic multi-scale benchmark.
"""

__version__ = "0.1.0"
