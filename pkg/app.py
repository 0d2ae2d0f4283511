"""
Multi-Scale Graph Wavelet Explorer - Streamlit Application

Interactive walkthrough of the msgwnn library:
- Graph inspection (path and lattice graphs, normalized Laplacian spectrum)
- Wavelet receptive fields at several scales around a chosen node
- Chebyshev approximation accuracy against the exact eigenbasis operator
- A desk-scale training run on the synthetic multi-scale dataset

Target Audience: ML researchers and engineers working with graph neural networks
"""

import json
import os
from typing import Dict, List, Optional

import numpy as np
import streamlit as st

from msgwnn.errors import MsGwnnError
from msgwnn.graph import Graph, lattice_adjacency, normalized_laplacian, path_adjacency
from msgwnn.model import ModelConfig
from msgwnn.rng import streams
from msgwnn.spectral import (
    FORWARD,
    NORMALIZED_SPECTRUM_BOUND,
    chebyshev_apply,
    chebyshev_fit,
    eigendecompose,
    receptive_field,
    scale_range_heuristic,
    wavelet_basis_exact,
    wavelet_column,
    wavelet_mass_within,
)
from msgwnn.synthdata import SynthSpec, generate, split
from msgwnn.training import TrainConfig, evaluate, fit

# Page configuration
st.set_page_config(
    page_title="Multi-Scale Graph Wavelet Explorer",
    page_icon="🌊",
    layout="wide",
    initial_sidebar_state="expanded",
)

# Constants
EXPLORER_CONFIG_FILE = "explorer_config.json"
CHEBYSHEV_ORDERS = (2, 4, 8, 16)
DEFAULT_SETTINGS = {
    "graph_kind": "lattice",
    "path_nodes": 9,
    "grid_side": 8,
    "scales": "0.5, 1, 2",
    "center": 4,
    "threshold": 1e-3,
    "seed": 0,
}

# Initialize session state
if "settings" not in st.session_state:
    st.session_state.settings = dict(DEFAULT_SETTINGS)
if "training_result" not in st.session_state:
    st.session_state.training_result = None


# Utility functions
def load_explorer_config() -> Optional[Dict]:
    """Load saved sidebar settings from file."""
    if os.path.exists(EXPLORER_CONFIG_FILE):
        with open(EXPLORER_CONFIG_FILE, "r") as f:
            return json.load(f)
    return None


def save_explorer_config(settings: Dict):
    """Save sidebar settings to file."""
    with open(EXPLORER_CONFIG_FILE, "w") as f:
        json.dump(settings, f, indent=2)


def parse_scales(text: str) -> List[float]:
    """Parse a comma-separated scale list."""
    return [float(part) for part in text.split(",") if part.strip()]


def current_graph(settings: Dict) -> Graph:
    """Build the graph selected in the sidebar, embeddings set to node degree."""
    if settings["graph_kind"] == "path":
        adjacency = path_adjacency(settings["path_nodes"])
    else:
        adjacency = lattice_adjacency(settings["grid_side"], settings["grid_side"])
    return Graph(n=adjacency.shape[0], adjacency=adjacency, embeddings=adjacency.sum(axis=1))


def wavelet_rows(graph: Graph, scales: List[float], center: int, threshold: float) -> List[Dict]:
    """One summary row per scale, using the exact eigenbasis operator."""
    decomposition = eigendecompose(normalized_laplacian(graph))
    rows = []
    for scale in scales:
        pair = wavelet_basis_exact(decomposition, scale)
        rows.append(
            {
                "scale": scale,
                "support": len(receptive_field(pair, center, threshold)),
                "mass_1hop": wavelet_mass_within(pair, graph, center, 1),
                "mass_2hop": wavelet_mass_within(pair, graph, center, 2),
            }
        )
    return rows


def chebyshev_errors(graph: Graph, scale: float, seed: int) -> Dict[int, float]:
    """Relative L2 error of the order-k expansion against the exact operator."""
    laplacian = normalized_laplacian(graph)
    pair = wavelet_basis_exact(eigendecompose(laplacian), scale)
    x = streams(seed)["data"].normal(size=graph.n)
    exact = pair.forward @ x
    errors = {}
    for k in CHEBYSHEV_ORDERS:
        approx = chebyshev_apply(chebyshev_fit(scale, FORWARD, k, NORMALIZED_SPECTRUM_BOUND), laplacian, x)
        errors[k] = float(np.linalg.norm(approx - exact) / np.linalg.norm(x))
    return errors


# UI Components
def render_sidebar():
    """Render sidebar with graph and scale configuration."""
    st.sidebar.title("🌊 Explorer Configuration")
    settings = st.session_state.settings

    settings["graph_kind"] = st.sidebar.selectbox(
        "Graph", ["lattice", "path"], index=["lattice", "path"].index(settings["graph_kind"])
    )
    if settings["graph_kind"] == "path":
        settings["path_nodes"] = st.sidebar.slider("Nodes", 3, 64, settings["path_nodes"])
    else:
        settings["grid_side"] = st.sidebar.slider("Grid side", 2, 16, settings["grid_side"])

    st.sidebar.markdown("---")
    st.sidebar.subheader("Wavelets")
    settings["scales"] = st.sidebar.text_input("Scales", value=settings["scales"])
    settings["center"] = int(st.sidebar.number_input("Center node", min_value=0, value=settings["center"]))
    settings["threshold"] = st.sidebar.number_input(
        "Support threshold", min_value=0.0, value=settings["threshold"], format="%.0e"
    )
    settings["seed"] = int(st.sidebar.number_input("Seed", min_value=0, value=settings["seed"]))

    col1, col2 = st.sidebar.columns(2)
    if col1.button("💾 Save"):
        save_explorer_config(settings)
        st.sidebar.success("Settings saved")
    if col2.button("📂 Load"):
        saved = load_explorer_config()
        if saved:
            st.session_state.settings = {**DEFAULT_SETTINGS, **saved}
            st.rerun()
        else:
            st.sidebar.info(f"No {EXPLORER_CONFIG_FILE} found")


def render_graph_tab():
    """Render graph inspection tab."""
    st.header("1️⃣ Graph and Spectrum")
    settings = st.session_state.settings
    try:
        graph = current_graph(settings)
        decomposition = eigendecompose(normalized_laplacian(graph))
    except MsGwnnError as e:
        st.error(f"Error building graph: {str(e)}")
        return

    col1, col2 = st.columns([2, 1])
    with col1:
        st.subheader("Laplacian eigenvalues")
        st.line_chart({"eigenvalue": decomposition.eigenvalues.tolist()})
    with col2:
        st.markdown("### Summary")
        st.markdown(f"**Nodes:** {graph.n}")
        st.markdown(f"**Edges:** {graph.edge_count}")
        st.markdown(f"**λ_max:** {decomposition.lambda_max:.4f}")
        try:
            s_min, s_max = scale_range_heuristic(decomposition)
            st.markdown(f"**Suggested scale range:** {s_min:.4f} – {s_max:.4f}")
        except MsGwnnError as e:
            st.warning(str(e))


def render_wavelet_tab():
    """Render wavelet receptive field tab."""
    st.header("2️⃣ Wavelet Receptive Fields")
    st.markdown(
        """
    Larger scales spread a wavelet further from its center node: the support grows
    and the share of mass within one hop shrinks.
    """
    )
    settings = st.session_state.settings
    try:
        graph = current_graph(settings)
        scales = parse_scales(settings["scales"])
        rows = wavelet_rows(graph, scales, settings["center"], settings["threshold"])
        decomposition = eigendecompose(normalized_laplacian(graph))
        columns = {
            f"s={scale:g}": wavelet_column(wavelet_basis_exact(decomposition, scale), settings["center"]).tolist()
            for scale in scales
        }
    except (MsGwnnError, ValueError) as e:
        st.error(f"Error computing wavelets: {str(e)}")
        return

    st.dataframe(rows, use_container_width=True)
    st.subheader("Wavelet values by node")
    st.line_chart(columns)


def render_chebyshev_tab():
    """Render Chebyshev approximation accuracy tab."""
    st.header("3️⃣ Chebyshev Approximation")
    settings = st.session_state.settings
    scale = st.slider("Scale", 0.0, 2.0, 1.0, 0.05, key="chebyshev_scale")
    try:
        errors = chebyshev_errors(current_graph(settings), scale, settings["seed"])
    except MsGwnnError as e:
        st.error(f"Error fitting Chebyshev expansion: {str(e)}")
        return
    st.dataframe([{"k": k, "relative_error": err} for k, err in errors.items()], use_container_width=True)
    st.info("💡 Training uses k = 2; higher orders trade sparse products for accuracy.")


def render_training_tab():
    """Render desk-scale training tab."""
    st.header("4️⃣ Desk-Scale Training")
    settings = st.session_state.settings

    col1, col2, col3 = st.columns(3)
    samples = col1.slider("Samples per class", 4, 40, 10)
    epochs = col2.slider("Epochs", 1, 100, 10)
    scales_text = col3.text_input("Branch scales", value="0.5, 1.0, 1.5")

    if st.button("Train", type="primary"):
        with st.spinner("Training..."):
            try:
                dataset = generate(SynthSpec(samples_per_class=samples, seed=settings["seed"]))
                train_set, test_set = split(dataset, 0.7, seed=settings["seed"])
                config = ModelConfig(scales=tuple(parse_scales(scales_text)), hidden=(32, 16))
                result = fit(train_set, config, TrainConfig(epochs=epochs, seed=settings["seed"]))
                report = evaluate(result.model, test_set)
                st.session_state.training_result = {
                    "history": [m.to_dict() for m in result.history],
                    "report": report.to_dict(),
                }
                st.success(f"✅ Test accuracy: {report.accuracy:.3f}")
            except (MsGwnnError, ValueError) as e:
                st.error(f"Error training model: {str(e)}")

    result = st.session_state.training_result
    if result:
        st.subheader("Loss")
        st.line_chart({key: [row[key] for row in result["history"]] for key in ("loss_total", "loss_graph")})
        with st.expander("Confusion matrix"):
            st.dataframe(result["report"]["confusion"], use_container_width=True)


# Main application
def main():
    st.title("🌊 Multi-Scale Graph Wavelet Explorer")
    st.markdown(
        """
    **Spectral graph wavelets and multi-branch graph wavelet networks**

    Inspect how the wavelet scale controls receptive fields, how well a low-order
    Chebyshev expansion tracks the exact operator, and train a small multi-scale model.
    """
    )

    render_sidebar()

    tab1, tab2, tab3, tab4 = st.tabs(
        [
            "1️⃣ Graph",
            "2️⃣ Wavelets",
            "3️⃣ Chebyshev",
            "4️⃣ Training",
        ]
    )

    with tab1:
        render_graph_tab()

    with tab2:
        render_wavelet_tab()

    with tab3:
        render_chebyshev_tab()

    with tab4:
        render_training_tab()

    st.markdown("---")
    st.markdown(
        """
    <div style='text-align: center; color: #666; font-size: 0.9em;'>
    msgwnn | Multi-Scale Graph Wavelet Neural Networks
    </div>
    """,
        unsafe_allow_html=True,
    )


if __name__ == "__main__":
    main()
