"""
Example 7: Reload a checkpoint and export per-branch node embeddings
"""
import json

import numpy as np

from msgwnn.checkpoint import load_checkpoint
from msgwnn.synthdata import load_dataset

# Load checkpoint and test data from example 6
with open("example_config.json", "r") as f:
    config = json.load(f)

model = load_checkpoint(config["checkpoint"])
test_set = load_dataset(f"{config['data']}/test")
graph = test_set[0].graph

for branch, (scale, hidden) in enumerate(zip(model.scales, model.node_embeddings(graph))):
    path = f"example_embeddings_branch{branch}.csv"
    np.savetxt(path, hidden, delimiter=",")
    print(f"✓ Branch {branch} (s={scale:g}): {hidden.shape[0]} x {hidden.shape[1]} -> {path}")

print("\nProject the CSV files with any t-SNE or UMAP tool to compare branches.")
