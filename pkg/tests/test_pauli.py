import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhdmft.pauli import (
    PauliString,
    PauliSum,
    identity,
    multiply,
    simplify,
    sum_product,
    to_matrix,
)

strings = st.text(alphabet="IXYZ", min_size=1, max_size=5)


def paired_strings(n_max=5):
    return st.integers(min_value=1, max_value=n_max).flatmap(
        lambda n: st.tuples(
            st.text(alphabet="IXYZ", min_size=n, max_size=n),
            st.text(alphabet="IXYZ", min_size=n, max_size=n),
        )
    )


class TestMultiply:
    def test_xy_gives_iz(self):
        phase, prod = multiply(PauliString("X"), PauliString("Y"))
        assert phase == 1j
        assert prod.ops == "Z"

    def test_yx_gives_minus_iz(self):
        phase, prod = multiply(PauliString("Y"), PauliString("X"))
        assert phase == -1j
        assert prod.ops == "Z"

    @given(strings)
    def test_self_product_is_identity(self, s):
        phase, prod = multiply(PauliString(s), PauliString(s))
        assert phase == 1
        assert prod.is_identity

    @given(paired_strings())
    @settings(max_examples=200)
    def test_matches_matrix_product(self, pair):
        a, b = PauliString(pair[0]), PauliString(pair[1])
        phase, prod = multiply(a, b)
        direct = a.to_matrix() @ b.to_matrix()
        assert np.allclose(direct, phase * prod.to_matrix(), atol=1e-14)

    @given(paired_strings())
    def test_phase_is_fourth_root(self, pair):
        phase, _ = multiply(PauliString(pair[0]), PauliString(pair[1]))
        assert phase in (1, -1, 1j, -1j)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            multiply(PauliString("XX"), PauliString("X"))


class TestPauliString:
    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            PauliString("XQZ")

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PauliString("")

    def test_support(self):
        assert PauliString("IXZXI").support == (1, 2, 3)

    def test_matrix_qubit_zero_leftmost(self):
        # ZI has qubit 0 carrying Z, so the sign flips with the high-order bit
        m = PauliString("ZI").to_matrix()
        assert np.allclose(np.diag(m), [1, 1, -1, -1])

    @given(strings)
    def test_matrix_unitary_hermitian(self, s):
        m = PauliString(s).to_matrix()
        assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-14)
        assert np.allclose(m, m.conj().T, atol=1e-14)


class TestTraceOrthogonality:
    @given(paired_strings(n_max=4))
    @settings(max_examples=120)
    def test_trace_inner_product(self, pair):
        a, b = PauliString(pair[0]), PauliString(pair[1])
        tr = np.trace(a.to_matrix() @ b.to_matrix())
        expect = 2 ** len(a) if a.ops == b.ops else 0.0
        assert abs(tr - expect) < 1e-12


class TestSimplify:
    def test_merges_and_sorts(self):
        s = PauliSum.from_terms([(1.0, "ZZ"), (0.5, "XX"), (2.0, "ZZ")])
        out = simplify(s)
        assert [(t.coefficient, t.string.ops) for t in out.terms] == [(0.5, "XX"), (3.0, "ZZ")]

    def test_drops_cancellations(self):
        s = PauliSum.from_terms([(1.0, "XY"), (-1.0, "XY")])
        assert len(simplify(s)) == 0

    def test_keeps_above_tol(self):
        s = PauliSum.from_terms([(1e-13, "XX"), (1e-11, "YY")])
        out = simplify(s)
        assert [t.string.ops for t in out.terms] == ["YY"]

    def test_rejects_negative_tol(self):
        with pytest.raises(ValueError):
            simplify(identity(2), tol=-1.0)


class TestSumProduct:
    def test_projector_pair_annihilates(self):
        plus = PauliSum.from_terms([(1.0, "IIIII"), (1.0, "ZZIII")])
        minus = PauliSum.from_terms([(1.0, "IIIII"), (-1.0, "ZZIII")])
        assert len(sum_product(plus, minus)) == 0

    def test_coupling_term_squares_to_scalar(self):
        lam = 0.3
        t = PauliSum.from_terms([(lam, "IIIIX")])
        sq = sum_product(t, t)
        assert len(sq) == 1
        assert sq.terms[0].string.is_identity
        assert sq.terms[0].coefficient == pytest.approx(lam**2)

    def test_operator_matmul_alias(self):
        a = PauliSum.from_terms([(1.0, "X")])
        b = PauliSum.from_terms([(1.0, "Y")])
        prod = a @ b
        assert prod.terms[0].coefficient == 1j
        assert prod.terms[0].string.ops == "Z"

    @given(
        st.lists(st.tuples(st.floats(-2, 2, allow_nan=False), st.text("IXYZ", min_size=3, max_size=3)), min_size=1, max_size=4),
        st.lists(st.tuples(st.floats(-2, 2, allow_nan=False), st.text("IXYZ", min_size=3, max_size=3)), min_size=1, max_size=4),
    )
    @settings(max_examples=60)
    def test_homomorphism_to_matrices(self, ta, tb):
        a = PauliSum.from_terms(ta)
        b = PauliSum.from_terms(tb)
        dense = to_matrix(a) @ to_matrix(b)
        prod = sum_product(a, b)
        if len(prod) == 0:
            assert np.allclose(dense, 0, atol=1e-10)
        else:
            assert np.allclose(to_matrix(prod), dense, atol=1e-10)

    def test_register_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sum_product(identity(2), identity(3))


class TestPauliSum:
    def test_mixed_sizes_rejected(self):
        with pytest.raises(ValueError):
            PauliSum.from_terms([(1.0, "XX"), (1.0, "X")])

    def test_hermiticity_check(self):
        h = PauliSum.from_terms([(0.5, "XZ"), (-1.2, "ZI")])
        assert h.is_hermitian()
        assert not PauliSum.from_terms([(1j, "XZ")]).is_hermitian()
        # anti-Hermitian pieces that cancel under merging still count as Hermitian
        assert PauliSum.from_terms([(1j, "XZ"), (-1j, "XZ")]).is_hermitian()

    def test_pad_appends_identities(self):
        s = PauliSum.from_terms([(1.0, "XZ")]).pad(3)
        assert s.terms[0].string.ops == "XZIII"

    def test_render_format(self):
        s = PauliSum.from_terms([(-0.5, "XZXII")])
        assert s.render() == "-0.5 * XZXII"

    def test_scale_and_adjoint(self):
        s = PauliSum.from_terms([(1 + 2j, "XY")])
        assert s.scale(2.0).terms[0].coefficient == 2 + 4j
        assert s.adjoint().terms[0].coefficient == 1 - 2j

    def test_matrix_cap(self):
        with pytest.raises(ValueError):
            to_matrix(identity(13))
