"""
Example 4: Chebyshev approximation of the heat wavelet without eigendecomposition
"""
import json

import numpy as np

from msgwnn.graph import load_graph, normalized_laplacian
from msgwnn.spectral import (
    FORWARD,
    chebyshev_apply,
    chebyshev_fit,
    eigendecompose,
    wavelet_basis_exact,
)

# Load graph from example 2
with open("example_config.json", "r") as f:
    config = json.load(f)

graph = load_graph(config["graph"])
laplacian = normalized_laplacian(graph)
exact = wavelet_basis_exact(eigendecompose(laplacian), 1.0)

x = np.random.default_rng(0).normal(size=graph.n)
reference = exact.forward @ x

print(f"Graph: {graph.n} nodes (from {config['graph']})")
print(" k   relative error")
for k in (2, 4, 8, 16):
    approx = chebyshev_apply(chebyshev_fit(1.0, FORWARD, k, 2.0), laplacian, x)
    print(f"{k:2d}   {np.linalg.norm(approx - reference) / np.linalg.norm(x):.2e}")
