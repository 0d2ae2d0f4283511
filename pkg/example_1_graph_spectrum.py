"""
Example 1: Build a lattice graph and inspect its normalized Laplacian spectrum
"""
import numpy as np

from msgwnn.graph import Graph, lattice_adjacency, normalized_laplacian
from msgwnn.spectral import eigendecompose, scale_range_heuristic

# An 8 x 8 patch grid with 4-neighbour edges and self-loops
adjacency = lattice_adjacency(8, 8) + np.eye(64)
graph = Graph(n=64, adjacency=adjacency, embeddings=np.ones((64, 1)))

print(f"✓ Graph built: {graph.n} nodes, {graph.edge_count} edges")

# Eigendecomposition of L = I - D^{-1/2} A D^{-1/2}
decomposition = eigendecompose(normalized_laplacian(graph))

print(f"  Smallest eigenvalues: {np.round(decomposition.eigenvalues[:4], 4)}")
print(f"  Largest eigenvalue:   {decomposition.lambda_max:.4f}")

# Scale range suggested by the spectrum
s_min, s_max = scale_range_heuristic(decomposition)
print(f"\n✓ Suggested scale range: [{s_min:.4f}, {s_max:.4f}]")
