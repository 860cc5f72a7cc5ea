import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from biswarm.bicluster import Bicluster
from biswarm.expr import (
    DegenerateSubmatrixError,
    DimensionError,
    EmptySelectionError,
    ExpressionMatrix,
    MatrixFormatError,
    MatrixParseError,
    col_contributions,
    compute_stats,
    load_matrix,
    residue_contribution_col,
    residue_contribution_row,
    row_contributions,
    write_matrix,
)
from oracles import brute_col_contribution, brute_row_contribution, brute_stats


def full(values):
    m = ExpressionMatrix.from_array(values)
    return m, Bicluster.full(*m.shape)


# --- loading -----------------------------------------------------------------


def test_load_small_table():
    text = b"gene\tc1\tc2\ng1\t1\t2\ng2\t3\t4\ng3\t5\t6.5\n"
    m = load_matrix(io.BytesIO(text))
    assert m.shape == (3, 2)
    assert m.present.all()
    assert m.gene_labels == ("g1", "g2", "g3")
    assert m.condition_labels == ("c1", "c2")
    assert m.values[2, 1] == 6.5


def test_load_header_without_corner_cell():
    m = load_matrix(b"c1\tc2\ng1\t1\t2\ng2\t3\t4\n")
    assert m.condition_labels == ("c1", "c2")
    assert m.shape == (2, 2)


def test_missing_marker_cell_is_absent():
    m = load_matrix(b"g\ta\tb\nx\t-1\t2\ny\t3\t4\n", missing_marker="-1")
    assert not m.present[0, 0]
    assert m.present.sum() == 3
    m2 = load_matrix(b"g\ta\tb\nx\tNA\t2\ny\t3\t4\n", missing_marker="NA")
    assert not m2.present[0, 0]


def test_ragged_row_names_line():
    with pytest.raises(MatrixFormatError, match="line 3"):
        load_matrix(b"g\ta\tb\nx\t1\t2\ny\t3\n")


def test_too_small_is_dimension_error():
    with pytest.raises(DimensionError):
        load_matrix(b"g\ta\nx\t1\ny\t2\n")
    with pytest.raises(DimensionError):
        load_matrix(b"g\ta\tb\nx\t1\t2\n")


def test_unparseable_cell_reports_coordinates():
    with pytest.raises(MatrixParseError, match=r"line 3, column 3"):
        load_matrix(b"g\ta\tb\nx\t1\t2\ny\t3\tfoo\n")


def test_yeast_shaped_table_dimensions(rng):
    # 2884 genes by 17 conditions, integers in 0..600 with -1 for missing
    vals = rng.integers(0, 601, size=(2884, 17))
    vals[rng.random(vals.shape) < 0.02] = -1
    lines = ["gene\t" + "\t".join(f"c{j}" for j in range(17))]
    lines += [f"g{i}\t" + "\t".join(map(str, row)) for i, row in enumerate(vals)]
    m = load_matrix(("\n".join(lines) + "\n").encode())
    assert (m.n_genes, m.n_conditions) == (2884, 17)
    assert np.array_equal(~m.present, vals == -1)


def test_write_then_load_roundtrip(tmp_path, rng):
    vals = rng.normal(size=(5, 4))
    present = rng.random((5, 4)) > 0.2
    m = ExpressionMatrix(vals, present, tuple("abcde"), tuple("wxyz"))
    write_matrix(m, tmp_path / "m.tsv")
    back = load_matrix((tmp_path / "m.tsv").read_bytes())
    assert np.array_equal(back.present, present)
    assert np.array_equal(back.values[present], m.values[present])
    assert back.gene_labels == m.gene_labels


# --- statistics ----------------------------------------------------------------


def test_additive_two_by_two_has_zero_residue():
    m, bc = full([[1.0, 2.0], [3.0, 4.0]])
    assert compute_stats(m, bc).residue == 0.0


def test_hand_evaluated_two_by_two():
    # residuals are +-0.25 everywhere; row deviations are +-0.5 and +-1
    m, bc = full([[1.0, 2.0], [3.0, 5.0]])
    st = compute_stats(m, bc)
    assert st.residue == pytest.approx(0.0625, abs=1e-15)
    assert st.row_variance == pytest.approx(0.625, abs=1e-15)
    assert st.volume == 4
    np.testing.assert_allclose(st.row_means, [1.5, 4.0])
    np.testing.assert_allclose(st.col_means, [2.0, 3.5])
    assert st.grand_mean == 2.75


def test_single_cell_residue_zero(rng):
    m = ExpressionMatrix.from_array(rng.normal(size=(4, 3)))
    for i in range(4):
        for j in range(3):
            bc = Bicluster.from_indices(4, 3, [i], [j])
            assert compute_stats(m, bc).residue == 0.0


def test_empty_selection_and_degenerate_errors():
    m = ExpressionMatrix.from_array([[1.0, np.nan], [np.nan, 2.0]])
    with pytest.raises(EmptySelectionError):
        compute_stats(m, Bicluster.from_indices(2, 2, [], [0]))
    with pytest.raises(DegenerateSubmatrixError):
        compute_stats(m, Bicluster.from_indices(2, 2, [0], [1]))


def test_missing_cells_excluded_from_means():
    m = ExpressionMatrix.from_array([[1.0, np.nan, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 9.0]])
    st = compute_stats(m, Bicluster.full(3, 3))
    assert st.volume == 8
    assert st.row_means[0] == 2.0
    assert st.col_means[1] == 2.0
    ref = brute_stats(m.values.tolist(), m.present.tolist(), [0, 1, 2], [0, 1, 2])
    assert st.residue == pytest.approx(ref["residue"], abs=1e-12)


def test_row_and_col_contribution_examples():
    m, bc = full([[1.0, 2.0], [3.0, 5.0]])
    assert residue_contribution_row(m, bc, 0) == pytest.approx(0.0625, abs=1e-15)
    assert residue_contribution_col(m, bc, 0) == pytest.approx(0.0625, abs=1e-15)


def test_constant_row_and_column_contribute_nothing():
    m, bc = full(np.full((4, 3), 7.0))
    assert np.all(row_contributions(m, bc) == 0)
    assert np.all(col_contributions(m, bc) == 0)


def test_non_member_contributions_match_oracle(rng):
    vals = rng.normal(size=(8, 6))
    m = ExpressionMatrix.from_array(vals)
    genes, conds = [0, 2, 3, 5], [1, 2, 4]
    bc = Bicluster.from_indices(8, 6, genes, conds)
    rows = row_contributions(m, bc)
    cols = col_contributions(m, bc)
    for i in range(8):
        assert rows[i] == pytest.approx(brute_row_contribution(vals.tolist(), genes, conds, i), abs=1e-12)
    for j in range(6):
        assert cols[j] == pytest.approx(brute_col_contribution(vals.tolist(), genes, conds, j), abs=1e-12)


def test_gene_without_present_cells_gets_infinite_contribution():
    vals = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 7.0], [np.nan, np.nan, 1.0]])
    m = ExpressionMatrix.from_array(vals)
    bc = Bicluster.from_indices(3, 3, [0, 1], [0, 1])
    assert np.isinf(residue_contribution_row(m, bc, 2))


def test_bicluster_dimension_mismatch():
    m = ExpressionMatrix.from_array(np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        compute_stats(m, Bicluster.full(4, 3))


# --- properties ----------------------------------------------------------------

shapes = st.tuples(st.integers(2, 9), st.integers(2, 7))


@st.composite
def matrix_and_selection(draw, missing=True):
    n, m = draw(shapes)
    vals = draw(arrays(np.float64, (n, m), elements=st.floats(-100, 100, allow_subnormal=False)))
    present = (
        draw(arrays(np.bool_, (n, m), elements=st.booleans()))
        if missing
        else np.ones((n, m), dtype=bool)
    )
    g = draw(arrays(np.bool_, n, elements=st.booleans()))
    c = draw(arrays(np.bool_, m, elements=st.booleans()))
    g[draw(st.integers(0, n - 1))] = True
    c[draw(st.integers(0, m - 1))] = True
    if not present[np.ix_(g, c)].any():
        present[np.flatnonzero(g)[0], np.flatnonzero(c)[0]] = True
    labels = (tuple(f"g{i}" for i in range(n)), tuple(f"c{j}" for j in range(m)))
    return ExpressionMatrix(vals, present, *labels), Bicluster(g, c)


@given(matrix_and_selection())
def test_residue_and_variance_nonnegative(ms):
    st_ = compute_stats(*ms)
    assert st_.residue >= 0 and st_.row_variance >= 0


@given(matrix_and_selection())
def test_matches_brute_force(ms):
    m, bc = ms
    ref = brute_stats(m.values.tolist(), m.present.tolist(), bc.genes.tolist(), bc.conditions.tolist())
    got = compute_stats(m, bc)
    assert got.residue == pytest.approx(ref["residue"], rel=1e-9, abs=1e-9)
    assert got.row_variance == pytest.approx(ref["row_variance"], rel=1e-9, abs=1e-9)
    assert got.volume == ref["volume"]


@given(
    st.lists(st.floats(-50, 50), min_size=2, max_size=8),
    st.lists(st.floats(-50, 50), min_size=2, max_size=6),
    st.data(),
)
def test_additive_model_has_zero_residue(a, b, data):
    m = ExpressionMatrix.from_array(np.add.outer(a, b))
    g = data.draw(st.lists(st.integers(0, len(a) - 1), min_size=1, unique=True))
    c = data.draw(st.lists(st.integers(0, len(b) - 1), min_size=1, unique=True))
    assert compute_stats(m, Bicluster.from_indices(len(a), len(b), g, c)).residue < 1e-9


@given(matrix_and_selection(), st.floats(-1000, 1000))
def test_shift_invariance(ms, shift):
    m, bc = ms
    moved = ExpressionMatrix(m.values + shift, m.present, m.gene_labels, m.condition_labels)
    a, b = compute_stats(m, bc), compute_stats(moved, bc)
    assert b.residue == pytest.approx(a.residue, abs=1e-9, rel=1e-9)
    assert b.row_variance == pytest.approx(a.row_variance, abs=1e-9, rel=1e-9)


@given(matrix_and_selection(missing=False))
def test_contributions_average_to_residue(ms):
    m, bc = ms
    st_ = compute_stats(m, bc)
    rows = row_contributions(m, bc, st_)[bc.gene_mask]
    cols = col_contributions(m, bc, st_)[bc.cond_mask]
    assert rows.mean() == pytest.approx(st_.residue, abs=1e-9, rel=1e-9)
    assert cols.mean() == pytest.approx(st_.residue, abs=1e-9, rel=1e-9)
