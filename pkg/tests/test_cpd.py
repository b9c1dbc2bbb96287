import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from momentmap import (CpdFactors, FailedInvariant, MalformedFile,
                       NoConvergence, UnsupportedDimension, cpd_als,
                       cpd_analytic, identity_tensor4, load_factors,
                       save_factors, verify_cpd)


def reconstruct(f):
    v = f.vectors
    return np.einsum("r,ra,rb,rc,rd->abcd", f.betas ** 2, v, v, v, v)


class TestAnalytic:

    @pytest.mark.parametrize("n,rank", [(1, 1), (2, 3), (3, 6)])
    def test_residual(self, n, rank):
        f = cpd_analytic(n)
        assert f.dim == n and f.rank == rank
        assert f.residual <= 1e-14
        assert verify_cpd(f) <= 1e-14

    def test_scalar_weight(self):
        f = cpd_analytic(1)
        assert_allclose(f.betas, [np.sqrt(3.0)], rtol=1e-16)

    def test_triangle_values(self):
        """dim 2: uniform weight sqrt(8/3), equilateral triangle from (1,0)."""
        f = cpd_analytic(2)
        assert_allclose(f.betas, np.sqrt(8.0 / 3.0), rtol=1e-16)
        assert_array_equal(f.vectors[0], [1.0, 0.0])
        assert_allclose(f.vectors[1], [-0.5, np.sqrt(3.0) / 2.0], rtol=1e-16)
        assert_allclose(f.vectors[2], [-0.5, -np.sqrt(3.0) / 2.0], rtol=1e-16)

    def test_icosahedron_geometry(self):
        f = cpd_analytic(3)
        assert_allclose(f.betas, np.sqrt(2.5), rtol=1e-16)
        norms = np.linalg.norm(f.vectors, axis=1)
        assert_allclose(norms, 1.0, atol=1e-15)
        # pairwise |cos| between distinct icosahedron half-vertices is 1/sqrt(5)
        gram = np.abs(f.vectors @ f.vectors.T)
        off = gram[~np.eye(6, dtype=bool)]
        assert_allclose(off, 1.0 / np.sqrt(5.0), atol=1e-14)

    def test_unit_norms(self):
        for n in (1, 2, 3):
            norms = np.linalg.norm(cpd_analytic(n).vectors, axis=1)
            assert np.max(np.abs(norms - 1.0)) < 1e-15

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimension):
            cpd_analytic(4)


class TestAls:

    def test_dim2_matches_exact_tensor(self):
        f = cpd_als(2, 3, seed=0)
        assert f.residual <= 1e-10
        assert_allclose(reconstruct(f), 3.0 * identity_tensor4(2), atol=1e-10)

    def test_dim3(self):
        f = cpd_als(3, 6, seed=0)
        assert f.residual <= 1e-10

    def test_dim4_needs_rank_11(self):
        # the counting bound 10 is infeasible in dimension 4
        with pytest.raises(NoConvergence):
            cpd_als(4, 10, seed=0)
        f = cpd_als(4, 11, seed=0)
        assert f.residual <= 1e-10

    def test_deterministic(self):
        a = cpd_als(2, 3, seed=42)
        b = cpd_als(2, 3, seed=42)
        assert_array_equal(a.betas, b.betas)
        assert_array_equal(a.vectors, b.vectors)

    def test_seed_changes_result(self):
        a = cpd_als(2, 3, seed=0)
        b = cpd_als(2, 3, seed=1)
        assert not np.array_equal(a.vectors, b.vectors)

    def test_rank_one_cannot_fit(self):
        with pytest.raises(NoConvergence) as err:
            cpd_als(5, 1, tol=1e-3, seed=0)
        assert err.value.best_residual is not None
        assert err.value.best_residual > 1e-3

    def test_positive_weights_and_unit_vectors(self):
        f = cpd_als(3, 6, seed=3)
        assert np.all(f.betas > 0)
        assert_allclose(np.linalg.norm(f.vectors, axis=1), 1.0, atol=1e-12)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            cpd_als(1, 1)
        with pytest.raises(ValueError):
            cpd_als(3, 0)


class TestFactorValidation:

    def test_non_unit_vector_rejected(self):
        with pytest.raises(FailedInvariant):
            CpdFactors(2, 1, np.array([1.0]), np.array([[1.0, 1.0]]))

    def test_nonpositive_beta_rejected(self):
        with pytest.raises(FailedInvariant):
            CpdFactors(2, 1, np.array([-1.0]), np.array([[1.0, 0.0]]))
        with pytest.raises(FailedInvariant):
            CpdFactors(2, 1, np.array([0.0]), np.array([[1.0, 0.0]]))

    def test_shape_checks(self):
        with pytest.raises(FailedInvariant):
            CpdFactors(2, 2, np.array([1.0]), np.eye(2))
        with pytest.raises(FailedInvariant):
            CpdFactors(3, 2, np.ones(2), np.eye(2))


class TestPersistence:

    def test_round_trip_bit_exact(self, tmp_path):
        f = cpd_analytic(3)
        path = tmp_path / "factors.json"
        save_factors(f, path)
        g = load_factors(path)
        assert_array_equal(g.betas, f.betas)
        assert_array_equal(g.vectors, f.vectors)
        assert g.dim == f.dim and g.rank == f.rank
        assert g.generator == "analytic"

    def test_round_trip_fitted(self, tmp_path):
        f = cpd_als(2, 3, seed=5)
        path = tmp_path / "fit.json"
        save_factors(f, path)
        g = load_factors(path)
        assert_array_equal(g.vectors, f.vectors)
        assert g.seed == 5

    def test_decimal_width(self, tmp_path):
        path = tmp_path / "f.json"
        save_factors(cpd_analytic(2), path)
        doc = json.loads(path.read_text())
        # 17 significant decimal digits guarantee binary64 round-tripping
        assert all("." in b and len(b.split(".")[1].split("e")[0]) == 17
                   for b in doc["betas"])

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(MalformedFile):
            load_factors(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "missing.json"
        path.write_text(json.dumps({"dim": 2, "rank": 3}))
        with pytest.raises(MalformedFile):
            load_factors(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedFile):
            load_factors(tmp_path / "nope.json")

    def test_tampered_vector_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        save_factors(cpd_analytic(2), path)
        doc = json.loads(path.read_text())
        doc["vectors"][0][0] = "1.10000000000000000e+00"
        path.write_text(json.dumps(doc))
        with pytest.raises(FailedInvariant):
            load_factors(path)

    def test_understated_residual_rejected(self, tmp_path):
        """A file whose stated residual is far better than its content."""
        f = cpd_als(2, 3, seed=0)
        f = CpdFactors(f.dim, f.rank, f.betas, f.vectors,
                       residual=1e-16, generator="als", seed=0)
        path = tmp_path / "lie.json"
        save_factors(f, path)
        with pytest.raises(FailedInvariant):
            load_factors(path)
