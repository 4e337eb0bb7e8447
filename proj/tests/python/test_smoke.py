"""Smoke tests for the _privrec extension module.

Run with PYTHONPATH pointing at the directory that holds the built module;
the CMake test target sets this up. Uses only the standard library so the
suite works in a bare interpreter.
"""

import json
import math
import os
import sys
import tempfile

import _privrec as pr


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol * max(1.0, abs(a), abs(b)), f"{a!r} != {b!r} (tol {tol})"


def test_numeric_utilities():
    # Laplace scales: the d in {20, 40, 60} points are exact in doubles.
    assert pr.laplace_scale(20, 0.4, 80000) == 0.00375
    assert pr.laplace_scale(40, 0.4, 80000) == 0.01375
    assert pr.laplace_scale(60, 0.4, 80000) == 0.03
    approx(pr.global_sensitivity(60), 60 + 60 * 60 / 4)

    # Piecewise mechanism constants at eps = 1.
    C, p, high = pr.piecewise_params(1.0)
    approx(C, 4.0829881650735966)
    approx(p, 0.20190130414820951)
    approx(high, 0.62245933120185456)

    # Output depends only on the seed, and stays inside [-C, C].
    y1 = pr.piecewise_perturb(0.3, 1.0, seed=7)
    y2 = pr.piecewise_perturb(0.3, 1.0, seed=7)
    assert y1 == y2
    assert -C <= y1 <= C

    # Feature-selection widths across the budget range.
    assert [pr.choose_zeta(e, 21) for e in (0.5, 5.0, 10.0, 20.0)] == [1, 2, 4, 8]

    # Truncated pairwise loss at the origin is ln 2.
    approx(pr.truncated_bpr_approx(0.0), math.log(2.0))


def test_metrics():
    recs = [[1, 2, 3], [4, 5]]
    tests = [[2], [9]]
    approx(pr.hit_at_k(recs, tests, 3, mode="user"), 0.5)
    approx(pr.hit_at_k(recs, tests, 3, mode="pair"), 0.5)
    approx(pr.ndcg_at_k(recs, tests, 3), 0.5 * (1.0 / math.log2(3)))
    approx(pr.f1_score([1, 1, 0, 0], [1, 0, 0, 0], 2, average="weighted"), 23.0 / 30.0)
    approx(pr.f1_score([1, 1, 0, 0], [1, 0, 0, 0], 2, average="macro"), 11.0 / 15.0)
    approx(pr.f1_score([1, 1, 0, 0], [1, 0, 0, 0], 2, average="micro"), 0.75)


def test_dataset_roundtrip(tmp):
    data_dir = os.path.join(tmp, "data")
    pr.generate_dataset(data_dir, seed=77, users=40, items=30, ratings=900)
    ds = pr.load_dataset(data_dir)
    assert ds.num_users == 40
    assert ds.num_items == 30
    assert ds.num_interactions == 900

    features, schema_json = pr.engineer_features(data_dir)
    schema = json.loads(schema_json)
    d0 = sum(f["width"] for f in schema["features"])
    assert features.shape == (40, d0)
    assert len(schema["features"]) == 21  # 18 numerical + 3 categorical blocks

    noised = pr.perturb_feature_matrix(features, schema_json, 10.0, seed=5)
    assert noised.shape == features.shape
    again = pr.perturb_feature_matrix(features, schema_json, 10.0, seed=5)
    assert (noised == again).all()
    assert (noised != features).any()
    return data_dir


def test_pipeline(data_dir):
    kwargs = dict(
        variant="gerai",
        seed=3,
        epochs=2,
        dim=8,
        neighbor_cap=6,
        k_list=[3, 5],
        attributes=["gender"],
        attackers=["nn"],
    )
    rep = json.loads(pr.run_experiment(data_dir, **kwargs))
    assert rep["variant"] == "gerai"
    assert rep["k_list"] == [3, 5]
    assert len(rep["hit"]) == 2
    assert all(0.0 <= h <= 1.0 for h in rep["hit"])
    assert len(rep["attacks"]) == 2
    for row in rep["attacks"]:
        assert row["attribute"] == "gender"
        assert 0.0 <= row["f1"] <= 1.0

    rep2 = json.loads(pr.run_experiment(data_dir, **kwargs))
    rep["wall_seconds"] = rep2["wall_seconds"] = 0.0
    assert rep == rep2, "repeated runs must match exactly"


def main():
    test_numeric_utilities()
    print("numeric utilities ok")
    test_metrics()
    print("metrics ok")
    with tempfile.TemporaryDirectory(prefix="privrec_smoke_") as tmp:
        data_dir = test_dataset_roundtrip(tmp)
        print("dataset roundtrip ok")
        test_pipeline(data_dir)
        print("pipeline ok")
    print("smoke: all ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
