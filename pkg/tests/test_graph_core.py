import numpy as np
import pytest
import scipy.sparse as sp

import src.graph_core as graph_core
from src.errors import (
    DegreeZeroError,
    InvalidGeneratorError,
    InvalidInputError,
    InvalidSizeError,
    SizeCapError,
)
from src.graph_core import (
    Graph,
    Shift,
    build_circulant,
    build_knn,
    build_path,
    cartesian_product,
    check_commute,
    circulant_laplacian_spectrum,
    export_shift,
    kron_pair,
    read_edge_list,
    read_shift,
    spectral_interval,
    sym_normalized_laplacian,
    write_edge_list,
)


class TestGraphs:
    def test_cycle_is_two_regular(self):
        g = build_circulant(8, [1])
        assert g.num_edges == 8
        assert (g.degrees == 2).all()
        np.testing.assert_array_equal(g.neighbors(0), [1, 7])

    @pytest.mark.parametrize("n, generators", [(8, [1]), (15, [1, 4]), (40, [1, 2, 5])])
    def test_circulant_rows_are_cyclic_shifts(self, n, generators):
        A = build_circulant(n, generators).adjacency.toarray()
        for i in range(n):
            np.testing.assert_array_equal(A[i], np.roll(A[0], i))

    def test_circulant_1000_has_degree_six(self):
        g = build_circulant(1000, [1, 2, 5])
        assert g.num_edges == 3000
        assert (g.degrees == 6).all()

    @pytest.mark.parametrize("N, Q, error", [
        (8, [4], InvalidGeneratorError),
        (8, [0], InvalidGeneratorError),
        (8, [], InvalidGeneratorError),
        (8, [1, 1], InvalidGeneratorError),
        (2, [1], InvalidSizeError),
    ])
    def test_circulant_rejects_bad_parameters(self, N, Q, error):
        with pytest.raises(error):
            build_circulant(N, Q)

    def test_from_pairs_rejects_duplicates_and_loops(self):
        with pytest.raises(InvalidInputError):
            Graph.from_pairs(3, [(0, 1), (1, 0)])
        with pytest.raises(InvalidInputError):
            Graph.from_pairs(3, [(2, 2)])

    def test_knn_union_rule(self):
        # nearest neighbors on a line: 0->1, 1->0, 3->1, 7->3
        g = build_knn([[0.0], [1.0], [3.0], [7.0]], k=1)
        assert g.edges == frozenset({(0, 1), (1, 2), (2, 3)})

    def test_knn_is_symmetric_with_min_degree_k(self, rng):
        g = build_knn(rng.uniform(size=(40, 3)), k=4)
        A = g.adjacency
        assert (A != A.T).nnz == 0
        assert g.degrees.min() >= 4

    def test_cartesian_product_degrees(self):
        left, right = build_path(3), build_circulant(3, [1])
        prod = cartesian_product(left, right)
        assert prod.n == 9
        for a in range(3):
            for b in range(3):
                assert prod.degrees[a * 3 + b] == left.degrees[a] + right.degrees[b]


class TestShifts:
    def test_laplacian_interval_and_flag(self, cycle8):
        assert cycle8.interval == (0.0, 2.0)
        assert cycle8.normalized_laplacian
        eigs = np.linalg.eigvalsh(cycle8.toarray())
        assert eigs.min() >= -1e-12 and eigs.max() <= 2 + 1e-12

    def test_degree_zero_rejected(self):
        with pytest.raises(DegreeZeroError):
            sym_normalized_laplacian(Graph(n=3, edges=frozenset({(0, 1)})))

    def test_circulant_spectrum_matches_dense(self):
        L = sym_normalized_laplacian(build_circulant(20, [1, 3]))
        np.testing.assert_allclose(
            np.sort(circulant_laplacian_spectrum(20, [1, 3])), np.linalg.eigvalsh(L.toarray()), atol=1e-12)

    def test_shift_must_be_symmetric(self):
        with pytest.raises(InvalidInputError):
            Shift.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_shift_must_live_on_graph(self):
        with pytest.raises(InvalidInputError):
            Shift(matrix=sp.csr_matrix(np.ones((3, 3))), interval=(0.0, 3.0), graph=build_path(3))

    def test_spectral_interval_methods_nest(self, rng):
        g = build_knn(rng.uniform(size=(30, 2)), k=3)
        L = sym_normalized_laplacian(g)
        lo, hi = spectral_interval(L, "dense-eig")
        glo, ghi = spectral_interval(L, "gershgorin")
        assert glo <= lo + 1e-12 and hi <= ghi + 1e-12
        assert spectral_interval(L, "analytic-laplacian") == (0.0, 2.0)

    def test_analytic_interval_needs_laplacian(self):
        S = Shift.from_matrix(build_path(4).adjacency)
        with pytest.raises(InvalidInputError):
            spectral_interval(S, "analytic-laplacian")

    def test_dense_eig_size_cap(self, monkeypatch, cycle8):
        monkeypatch.setattr(graph_core, "DENSE_EIG_CAP", 5)
        with pytest.raises(SizeCapError):
            spectral_interval(cycle8, "dense-eig")


class TestCommute:
    def test_kron_pair_commutes(self):
        S1, S2 = kron_pair(sym_normalized_laplacian(build_path(3)), sym_normalized_laplacian(build_circulant(4, [1])))
        assert check_commute(S1, S2, tol=1e-12)
        assert S1.graph is S2.graph

    def test_kron_pair_layout(self):
        L_left = sym_normalized_laplacian(build_path(3))
        L_right = sym_normalized_laplacian(build_path(4))
        S1, S2 = kron_pair(L_left, L_right)
        np.testing.assert_allclose(S1.toarray(), np.kron(np.eye(3), L_right.toarray()))
        np.testing.assert_allclose(S2.toarray(), np.kron(L_left.toarray(), np.eye(4)))

    def test_noncommuting_pair_detected(self):
        L = sym_normalized_laplacian(build_path(3))
        D = Shift.from_matrix(sp.diags([1.0, 2.0, 3.0]), graph=L.graph)
        assert not check_commute(L, D, tol=1e-10)


class TestFormats:
    def test_edge_list_keeps_isolated_vertices(self, tmp_path):
        g = Graph(n=5, edges=frozenset({(0, 1), (1, 2)}))
        path = write_edge_list(g, tmp_path / "g.edges")
        back = read_edge_list(path)
        assert back.n == 5
        assert back.edges == g.edges

    def test_edge_list_without_header(self, tmp_path):
        path = tmp_path / "plain.edges"
        path.write_text("# comment\n0 1\n1 3\n")
        g = read_edge_list(path)
        assert g.n == 4
        assert g.edges == frozenset({(0, 1), (1, 3)})

    def test_shift_export_round_trip(self, tmp_path, cycle8):
        path = export_shift(cycle8, tmp_path / "shift.txt")
        assert path.read_text().splitlines()[0] == "8 0 2"
        back = read_shift(path, graph=cycle8.graph)
        assert back.interval == (0.0, 2.0)
        assert (back.matrix != cycle8.matrix).nnz == 0
