"""
Example 5: Forward pass of a single GWNN branch next to a GCN on one graph
"""
import numpy as np
import torch

from msgwnn.layers import GcnNetwork, GwnnNetwork, embeddings_tensor, gwnn_forward
from msgwnn.synthdata import SynthSpec, generate

graph = generate(SynthSpec(classes=2, samples_per_class=1))[0].graph
generator = torch.Generator().manual_seed(0)

gwnn = GwnnNetwork(graph.channels, 2, graph.n, scale=1.0, hidden=(16, 8), generator=generator)
gcn = GcnNetwork(graph.channels, 2, hidden=(16, 8), generator=generator)

with torch.no_grad():
    gwnn_probs = gwnn_forward(gwnn, graph)
    gcn_probs = gcn(embeddings_tensor(graph), gcn.propagator(graph))

print(f"✓ GWNN node probabilities: {tuple(gwnn_probs.shape)}, rows sum to "
      f"{np.round(gwnn_probs.sum(dim=1).numpy()[:3], 6)}")
print(f"✓ GCN node probabilities:  {tuple(gcn_probs.shape)}")
print(f"  Trainable GWNN parameters: {sum(p.numel() for p in gwnn.parameters())}")
print(f"  Trainable GCN parameters:  {sum(p.numel() for p in gcn.parameters())}")
