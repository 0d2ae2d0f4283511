"""
Example 2: Turn an image into a patch graph with the percentile edge rule
"""
import json

import numpy as np

from msgwnn.graph_build import EdgeRule, build_graph, read_ppm, write_ppm
from msgwnn.graph import save_graph

# Two-texture test image: fine noise on the left, a smooth ramp on the right
rng = np.random.default_rng(0)
image = np.zeros((64, 64, 3), dtype=np.uint8)
image[:, :32] = rng.integers(0, 256, size=(64, 32, 3))
image[:, 32:] = np.linspace(0, 255, 32, dtype=np.uint8)[None, :, None]
write_ppm(image, "example_image.ppm")

print("✓ Test image written to example_image.ppm")

# 16 x 16 patches -> 4 x 4 grid of nodes, edges above the 90th percentile
graph = build_graph(read_ppm("example_image.ppm"), rule=EdgeRule(alpha=90), patch=16)

print(f"✓ Graph built: {graph.n} nodes, {graph.edge_count} edges, {graph.channels} channels")

save_graph(graph, "example_graph.json")

# Save paths for use in other examples
with open("example_config.json", "w") as f:
    json.dump({"graph": "example_graph.json", "image": "example_image.ppm"}, f, indent=2)

print(f"\n✓ Graph saved to example_graph.json")
