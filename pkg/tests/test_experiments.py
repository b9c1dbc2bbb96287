import json

import numpy as np
import pytest

import momentmap.experiments as expmod
from momentmap import (DIFFERENCE_LABELS, DowndateBreaksDefiniteness,
                       ExperimentSpec, cpd_als, oracle_suite, run_experiment)


class TestExperimentSpec:

    def test_polar_defaults(self):
        spec = ExperimentSpec("polar")
        assert spec.params == {"mean": [0.0, 1000.0], "factor_scale": 250.0,
                               "factor_diag": [4.0, 1.0]}
        assert spec.precisions == ("binary64", "binary32")
        assert spec.methods == ("sqrt", "full")

    def test_vanderpol_defaults(self):
        spec = ExperimentSpec("vanderpol")
        assert spec.params["mean"] == [0.1, 0.5]
        assert spec.params["beta"] == 5e-6
        assert spec.params["sigma"] == 0.1
        assert spec.params["zeta"] == 1e-3
        assert spec.params["step"] == 1e-3

    def test_override_keeps_other_defaults(self):
        spec = ExperimentSpec("polar", params={"factor_scale": 1.0})
        assert spec.params["factor_scale"] == 1.0
        assert spec.params["mean"] == [0.0, 1000.0]

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            ExperimentSpec("spherical")

    def test_unknown_precision(self):
        with pytest.raises(ValueError):
            ExperimentSpec("polar", precisions=("binary16",))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            ExperimentSpec("polar", methods=("cubature",))

    def test_unknown_param(self):
        with pytest.raises(ValueError):
            ExperimentSpec("polar", params={"scale": 2.0})

    def test_empty_selection(self):
        with pytest.raises(ValueError):
            ExperimentSpec("polar", methods=())


class TestRunExperiment:

    def test_polar_labels_in_order(self):
        rep = run_experiment(ExperimentSpec("polar"))
        assert [d["label"] for d in rep.differences] == list(DIFFERENCE_LABELS)
        assert all(np.isfinite(d["frobenius"]) and d["frobenius"] >= 0.0
                   for d in rep.differences)

    def test_report_is_deterministic(self):
        a = run_experiment(ExperimentSpec("polar")).to_json()
        b = run_experiment(ExperimentSpec("polar")).to_json()
        assert a == b

    @pytest.mark.parametrize("name", ["polar", "vanderpol"])
    def test_coarse_rounding_dominates(self, name):
        # rounding the whole pipeline to binary32 hurts the full route far
        # more than the factored route
        rep = run_experiment(ExperimentSpec(name))
        diffs = {d["label"]: d["frobenius"] for d in rep.differences}
        assert diffs["S64 vs S32"] < diffs["S64 vs P32"]

    def test_single_cell_has_no_differences(self):
        spec = ExperimentSpec("polar", precisions=("binary64",),
                              methods=("sqrt",))
        rep = run_experiment(spec)
        assert rep.differences == []
        assert "s64_frobenius" in rep.provenance

    def test_single_precision_pair(self):
        spec = ExperimentSpec("polar", precisions=("binary32",))
        rep = run_experiment(spec)
        assert [d["label"] for d in rep.differences] == ["S32 vs P32"]

    def test_provenance(self):
        rep = run_experiment(ExperimentSpec("polar"))
        prov = rep.provenance
        assert len(prov["factors_sha256"]) == 64
        assert int(prov["factors_sha256"], 16) >= 0
        assert prov["factors_generator"] == "analytic"
        assert prov["factors_seed"] is None
        assert prov["integrator_step"] is None
        assert prov["backend"] in ("compiled", "numpy")
        assert "binary64" in prov["protocol"]
        assert "errors" not in prov

    def test_vanderpol_provenance_step(self):
        rep = run_experiment(ExperimentSpec("vanderpol"))
        assert rep.provenance["integrator_step"] == 1e-3

    def test_custom_factors_recorded(self):
        f = cpd_als(2, 3, seed=9)
        rep = run_experiment(ExperimentSpec("polar"), factors=f)
        assert rep.provenance["factors_generator"] == "als"
        assert rep.provenance["factors_seed"] == 9
        assert len(rep.differences) == 4

    def test_json_round_trip(self):
        rep = run_experiment(ExperimentSpec("polar"))
        doc = json.loads(rep.to_json())
        assert doc == rep.to_dict()
        assert doc["experiment"] == "polar"
        assert doc["config"]["mean"] == [0.0, 1000.0]

    def test_csv_layout(self):
        rep = run_experiment(ExperimentSpec("polar"))
        lines = rep.to_csv().splitlines()
        assert lines[0] == "experiment,label,value"
        assert len(lines) == 1 + len(rep.differences)
        for line, row in zip(lines[1:], rep.differences):
            name, label, value = line.split(",")
            assert name == "polar"
            assert label == row["label"]
            # repr round-trips binary64 exactly
            assert float(value) == row["frobenius"]

    def test_failed_cell_is_recorded(self, monkeypatch):
        real = expmod.map_second_order_sqrt

        def flaky(x, model, noise, cpd, p=None):
            if p == "binary32":
                raise DowndateBreaksDefiniteness("forced for the test")
            return real(x, model, noise, cpd, p=p)

        monkeypatch.setattr(expmod, "map_second_order_sqrt", flaky)
        rep = run_experiment(ExperimentSpec("polar"))
        assert set(rep.provenance["errors"]) == {"S32"}
        assert "DowndateBreaksDefiniteness" in rep.provenance["errors"]["S32"]
        # rows touching the failed cell are dropped, the rest survive
        assert [d["label"] for d in rep.differences] == ["S64 vs P64",
                                                         "S64 vs P32"]


@pytest.fixture(scope="module")
def dim4_factors():
    # the rank-11 fit takes a few seconds; share it across the battery tests
    return cpd_als(4, 11, seed=0)


class TestOracleSuite:

    def test_small_battery_passes(self, dim4_factors):
        summary = oracle_suite(cases=25, seed=3,
                               factors_by_dim={4: dim4_factors})
        assert summary["passed"] is True
        assert summary["cases"] == 25
        assert summary["failures"] == []
        assert summary["max_rel_squared"] <= 1e-10
        assert summary["max_rel_factor"] <= 1e-9

    def test_deterministic(self, dim4_factors):
        a = oracle_suite(cases=10, seed=1, factors_by_dim={4: dim4_factors})
        b = oracle_suite(cases=10, seed=1, factors_by_dim={4: dim4_factors})
        assert a == b

    def test_seed_matters(self, dim4_factors):
        a = oracle_suite(cases=10, seed=1, factors_by_dim={4: dim4_factors})
        b = oracle_suite(cases=10, seed=2, factors_by_dim={4: dim4_factors})
        assert a["max_rel_squared"] != b["max_rel_squared"]
