import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msgwnn import spectral
from msgwnn.errors import (
    ConvergenceFailure,
    DegenerateSpectrum,
    DimensionMismatch,
    NodeOutOfRange,
    ScaleOverflow,
    SpectrumBoundViolation,
)
from msgwnn.graph import Graph, LaplacianMatrix, lattice_adjacency, normalized_laplacian, path_adjacency
from msgwnn.spectral import (
    FORWARD,
    INVERSE,
    chebyshev_apply,
    chebyshev_fit,
    eigendecompose,
    fourier_conv,
    inverse_wavelet_transform,
    receptive_field,
    scale_range_heuristic,
    wavelet_basis_chebyshev,
    wavelet_basis_exact,
    wavelet_column,
    wavelet_conv,
    wavelet_mass_within,
    wavelet_transform,
)

from conftest import random_connected_graph

GRID = np.linspace(0.0, 2.0, 1000)


def decompose(g: Graph):
    return eigendecompose(normalized_laplacian(g))


def test_eigendecompose_k2(k2):
    sd = decompose(k2)
    np.testing.assert_allclose(sd.eigenvalues, [0.0, 2.0], atol=1e-12)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(sd.eigenvectors, [[r, r], [r, -r]], atol=1e-12)


def test_eigendecompose_single_node():
    sd = eigendecompose(LaplacianMatrix(np.array([[0.0]])))
    assert sd.eigenvalues.tolist() == [0.0]
    assert sd.eigenvectors.tolist() == [[1.0]]


def test_eigendecompose_invariants(rng):
    g = random_connected_graph(8, rng)
    sd = decompose(g)
    u = sd.eigenvectors
    np.testing.assert_allclose(u.T @ u, np.eye(8), atol=1e-8)
    assert np.max(np.abs(sd.reconstruct() - normalized_laplacian(g).matrix)) < 1e-8
    assert np.all(np.diff(sd.eigenvalues) >= 0)


def test_eigendecompose_reports_solver_failure(monkeypatch, k2):
    def fail(matrix):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(spectral.scipy.linalg, "eigh", fail)
    with pytest.raises(ConvergenceFailure):
        decompose(k2)


def test_fourier_conv_examples(k2, rng):
    g = random_connected_graph(7, rng)
    sd = decompose(g)
    x = rng.normal(size=7)
    np.testing.assert_allclose(fourier_conv(sd, np.ones(7), x), x, atol=1e-10)
    np.testing.assert_allclose(fourier_conv(sd, sd.eigenvalues, x), normalized_laplacian(g).matrix @ x, atol=1e-8)
    np.testing.assert_allclose(fourier_conv(decompose(k2), [1.0, 0.0], [1.0, 0.0]), [0.5, 0.5], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        fourier_conv(sd, np.ones(3), x)


def test_wavelet_basis_zero_scale_is_identity(rng):
    pair = wavelet_basis_exact(decompose(random_connected_graph(6, rng)), 0.0)
    assert np.array_equal(pair.forward, np.eye(6))
    assert np.array_equal(pair.inverse, np.eye(6))


def test_wavelet_basis_k2_closed_form(k2):
    pair = wavelet_basis_exact(decompose(k2), 1.0)
    e = math.exp(-2)
    np.testing.assert_allclose(pair.forward, 0.5 * np.array([[1 + e, 1 - e], [1 - e, 1 + e]]), atol=1e-12)
    x = np.array([1.0, 0.0])
    np.testing.assert_allclose(wavelet_transform(pair, x), pair.inverse @ x)
    g = math.exp(2)
    np.testing.assert_allclose(wavelet_transform(pair, x), [(1 + g) / 2, (1 - g) / 2], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(4, 64), seed=st.integers(0, 2**16), s=st.sampled_from([0.25, 0.5, 1.0, 2.0, 5.0]))
def test_wavelet_invertibility_and_symmetry(n, seed, s):
    pair = wavelet_basis_exact(decompose(random_connected_graph(n, np.random.default_rng(seed))), s)
    assert np.max(np.abs(pair.forward @ pair.inverse - np.eye(n))) < 1e-6
    assert np.max(np.abs(pair.forward - pair.forward.T)) < 1e-8


def test_wavelet_transform_round_trip(rng):
    pair = wavelet_basis_exact(decompose(random_connected_graph(10, rng)), 1.0)
    x = rng.normal(size=(10, 2))
    np.testing.assert_allclose(inverse_wavelet_transform(pair, wavelet_transform(pair, x)), x, atol=1e-8)
    zero = wavelet_basis_exact(decompose(random_connected_graph(10, rng)), 0.0)
    assert np.array_equal(wavelet_transform(zero, x), x)


def test_wavelet_conv_examples(rng):
    sd = decompose(random_connected_graph(9, rng))
    x = rng.normal(size=9)
    pair = wavelet_basis_exact(sd, 1.0)
    np.testing.assert_allclose(wavelet_conv(pair, np.ones(9), x), x, atol=1e-6)
    np.testing.assert_allclose(wavelet_conv(pair, np.zeros(9), x), 0.0, atol=1e-12)
    f = rng.normal(size=9)
    assert np.array_equal(wavelet_conv(wavelet_basis_exact(sd, 0.0), f, x), f * x)


def test_negative_scale_rejected(k2):
    with pytest.raises(ValueError):
        wavelet_basis_exact(decompose(k2), -0.5)


def test_scale_overflow(k2):
    with pytest.raises(ScaleOverflow):
        wavelet_basis_exact(decompose(k2), 400.0)


def test_large_scale_logs_warning(k2, caplog):
    wavelet_basis_exact(decompose(k2), 3.0)
    assert "outside the usual range" in caplog.text


def test_chebyshev_fit_constant_at_zero_scale():
    fit = chebyshev_fit(0.0, FORWARD, 4, 2.0)
    assert fit.coefficients[0] == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(fit.coefficients[1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("k, bound", [(10, 1e-6), (2, 0.07)])
def test_chebyshev_fit_grid_error(k, bound):
    fit = chebyshev_fit(1.0, FORWARD, k, 2.0)
    assert np.max(np.abs(fit.evaluate(GRID) - np.exp(-GRID))) < bound


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("sign", [FORWARD, INVERSE])
def test_chebyshev_error_decreases_with_order(s, sign):
    target = np.exp((-s if sign == FORWARD else s) * GRID)
    errors = [np.max(np.abs(chebyshev_fit(s, sign, k, 2.0).evaluate(GRID) - target)) for k in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_chebyshev_fit_rejects_bad_arguments():
    with pytest.raises(ValueError):
        chebyshev_fit(1.0, FORWARD, 0, 2.0)
    with pytest.raises(ValueError):
        chebyshev_fit(1.0, "sideways", 2, 2.0)
    with pytest.raises(ValueError):
        chebyshev_fit(1.0, FORWARD, 2, 0.0)


def test_chebyshev_apply_matches_exact(rng):
    g = random_connected_graph(32, rng)
    l = normalized_laplacian(g)
    exact = wavelet_basis_exact(eigendecompose(l), 1.0)
    x = rng.normal(size=32)
    approx = chebyshev_apply(chebyshev_fit(1.0, FORWARD, 10, 2.0), l, x)
    assert np.linalg.norm(approx - exact.forward @ x) / np.linalg.norm(x) < 1e-4


def test_chebyshev_apply_zero_scale_is_identity(rng):
    l = normalized_laplacian(random_connected_graph(12, rng))
    x = rng.normal(size=(12, 3))
    np.testing.assert_allclose(chebyshev_apply(chebyshev_fit(0.0, FORWARD, 3, 2.0), l, x), x, atol=1e-10)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_chebyshev_apply_uses_k_sparse_products(monkeypatch, rng, k):
    calls = []
    original = spectral._rescaled_matvec

    def counting(lhat, v):
        calls.append(v.shape)
        return original(lhat, v)

    monkeypatch.setattr(spectral, "_rescaled_matvec", counting)
    l = normalized_laplacian(random_connected_graph(10, rng))
    chebyshev_apply(chebyshev_fit(1.0, FORWARD, k, 2.0), l, rng.normal(size=10))
    assert len(calls) == k


def test_chebyshev_apply_spectrum_bound_violation(rng):
    l = normalized_laplacian(random_connected_graph(10, rng))
    with pytest.raises(SpectrumBoundViolation):
        chebyshev_apply(chebyshev_fit(1.0, FORWARD, 2, 0.5), l, np.ones(10))


def test_chebyshev_oracle_agreement_k16(rng):
    for _ in range(5):
        n = int(rng.integers(8, 65))
        g = random_connected_graph(n, rng)
        l = normalized_laplacian(g)
        sd = eigendecompose(l)
        for s in (0.5, 1.0, 2.0):
            exact = wavelet_basis_exact(sd, s)
            cheb = wavelet_basis_chebyshev(l, s, k=16)
            for _ in range(10):
                x = rng.normal(size=n)
                assert np.linalg.norm(cheb.forward @ x - exact.forward @ x) / np.linalg.norm(x) < 1e-3
                assert np.linalg.norm(cheb.inverse @ x - exact.inverse @ x) / np.linalg.norm(x) < 1e-3


def test_chebyshev_pair_materialises(rng):
    l = normalized_laplacian(random_connected_graph(6, rng))
    pair = wavelet_basis_chebyshev(l, 0.5, k=8)
    assert pair.mode == "chebyshev" and pair.order == 8
    np.testing.assert_allclose(pair.forward_matrix() @ np.ones(6), pair.forward @ np.ones(6))


def test_scale_range_heuristic_k2(k2):
    s_min, s_max = scale_range_heuristic(decompose(k2))
    assert s_min == pytest.approx(0.02565, abs=1e-4)
    assert s_max == pytest.approx(0.08126, abs=1e-4)
    equal = scale_range_heuristic(decompose(k2), eta=0.9, gamma=0.9)
    assert equal[0] == pytest.approx(equal[1])


def test_scale_range_heuristic_disconnected():
    adjacency = np.zeros((4, 4))
    adjacency[0, 1] = adjacency[1, 0] = adjacency[2, 3] = adjacency[3, 2] = 1.0
    g = Graph(n=4, adjacency=adjacency, embeddings=np.zeros((4, 1)))
    with pytest.raises(DegenerateSpectrum):
        scale_range_heuristic(decompose(g))


def test_receptive_field_examples(path9):
    sd = decompose(path9)
    assert receptive_field(wavelet_basis_exact(sd, 0.0), 4, 0.5) == {4}
    pair = wavelet_basis_exact(sd, 1.0)
    assert receptive_field(pair, 4, np.abs(wavelet_column(pair, 4)).max() + 1) == frozenset()
    assert 4 in receptive_field(wavelet_basis_exact(sd, 5.0), 4, 1e-6)
    with pytest.raises(NodeOutOfRange):
        receptive_field(pair, 9, 1e-3)


@pytest.mark.parametrize("graph_fixture, center", [("path9", 4), ("grid8", 27)])
def test_localization_trend(request, graph_fixture, center):
    g = request.getfixturevalue(graph_fixture)
    sd = decompose(g)
    pairs = [wavelet_basis_exact(sd, s) for s in (1.0, 3.0, 5.0)]
    supports = [len(receptive_field(p, center, 1e-3)) for p in pairs]
    one_hop = [wavelet_mass_within(p, g, center, 1) for p in pairs]
    assert supports == sorted(supports)
    assert one_hop == sorted(one_hop, reverse=True)


def test_mass_outside_ball_shrinks_with_scale(grid8):
    sd = decompose(grid8)
    for radius in (1, 2):
        outside = [1 - wavelet_mass_within(wavelet_basis_exact(sd, s), grid8, 27, radius) for s in (0.5, 1.0, 2.0)]
        assert outside == sorted(outside)


def test_lattice_wavelet_is_centred():
    g = Graph(n=9, adjacency=lattice_adjacency(3, 3), embeddings=np.ones((9, 1)))
    column = wavelet_column(wavelet_basis_exact(decompose(g), 1.0), 4)
    assert int(np.argmax(np.abs(column))) == 4
