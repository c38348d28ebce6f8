import numpy as np
import pytest

from tvrepair import (BinningError, DimensionError, EmptyGroup, IoError, SchemaError, census,
                      identity_plan, tv_distance)
from tvrepair.census import (ADULT_COLUMNS, DiscreteDataset, FeatureBins, apply_repair,
                             default_schema, discretize, estimate, feature_marginal, histogram,
                             load_csv, load_schema)
from tvrepair.prob import Pmf, push_forward

from conftest import ADULT

HEADER = ",".join(ADULT_COLUMNS)


def row(hours="40", edu="13", sex="Male", income="<=50K"):
    return (f"39, State-gov, 77516, Bachelors, {edu}, Never-married, Adm-clerical, Not-in-family,"
            f" White, {sex}, 2174, 0, {hours}, United-States, {income}")


def write(tmp_path, *lines, name="toy.csv"):
    p = tmp_path / name
    p.write_text("\n".join(lines) + "\n")
    return p


def test_toy_csv(tmp_path):
    rs = load_csv(write(tmp_path, HEADER, row(), row(sex="Female"), row(income=">50K")))
    assert len(rs) == 3 and rs.dropped == 0
    assert rs.columns["sex"] == ("Male", "Female", "Male")


def test_headerless_csv_uses_adult_columns(tmp_path):
    rs = load_csv(write(tmp_path, row(), row(hours="50")))
    assert rs.columns["hours-per-week"] == ("40", "50")


def test_missing_values_dropped(tmp_path):
    rs = load_csv(write(tmp_path, HEADER, row(), row(hours=""), row(hours="?"), row()))
    assert len(rs) == 2 and rs.dropped == 2


def test_load_errors(tmp_path):
    with pytest.raises(IoError):
        load_csv(tmp_path / "absent.csv")
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "age,sex,income", "30,Male,>50K"))


def test_full_adult_file(adult_dataset):
    rs = load_csv(ADULT)
    assert 45000 <= len(rs) <= 50000
    assert len(adult_dataset) == len(rs)
    assert adult_dataset.n_x == 128


def test_discretize_examples(tmp_path):
    rs = load_csv(write(tmp_path, HEADER, row(hours="40", edu="13", sex="Female", income=">50K."),
                        row(hours="99", edu="9", income="<=50K"), row(hours="1", edu="16")))
    ds = discretize(rs)
    hours_bin = np.unravel_index(ds.x, ds.shape)[0]
    assert hours_bin[0] == int((40 - 1) // 12.25) == 3
    assert hours_bin[1] == 7 and hours_bin[2] == 0          # last bin includes its upper edge
    edu_levels = ds.feature_labels[1]
    assert edu_levels == ("9", "13", "16")                   # one bin per observed value
    assert ds.y.tolist() == [1, 0, 0]
    assert ds.s.tolist() == [0, 1, 1]


def test_value_outside_bins_names_row(tmp_path):
    rs = load_csv(write(tmp_path, HEADER, row(), row(hours="120")))
    with pytest.raises(BinningError, match="row 1"):
        discretize(rs)


def test_unknown_label_value(tmp_path):
    with pytest.raises(SchemaError):
        discretize(load_csv(write(tmp_path, HEADER, row(income="maybe"))))


def test_estimate_hand_counts():
    ds = DiscreteDataset(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 1]), np.array([0, 0, 1, 1]),
                         ("f",), (("a", "b"),), ("no", "yes"))
    g = estimate(ds)
    np.testing.assert_array_equal(g.joint_0.mass, [[0.5, 0.0], [0.0, 0.5]])
    np.testing.assert_array_equal(g.joint_1.mass, [[0.0, 0.5], [0.5, 0.0]])
    assert g.pi.mass.tolist() == [0.5, 0.5]


def test_estimate_weights_sum_to_one(adult_data):
    assert adult_data.pi.mass.sum() == 1.0
    assert adult_data.pi.mass[0] == pytest.approx(16192 / 48842, abs=1e-15)


def test_estimate_empty_group():
    ds = DiscreteDataset(np.array([0, 1]), np.array([0, 1]), np.array([1, 1]), ("f",), (("a", "b"),),
                         ("no", "yes"))
    with pytest.raises(EmptyGroup):
        estimate(ds)


def test_estimate_ignores_row_order(tmp_path):
    lines = [row(hours=str(h), edu=str(e), sex=s, income=i)
             for h, e, s, i in [(40, 13, "Male", ">50K"), (20, 9, "Female", "<=50K"),
                                (60, 13, "Female", ">50K"), (45, 10, "Male", "<=50K")]]
    a = estimate(discretize(load_csv(write(tmp_path, HEADER, *lines, name="a.csv"))))
    b = estimate(discretize(load_csv(write(tmp_path, HEADER, *lines[::-1], name="b.csv"))))
    for ja, jb in zip(a.joints, b.joints):
        assert ja.mass.tobytes() == jb.mass.tobytes()
    assert a.x_alphabet == b.x_alphabet


def test_schema_file(tmp_path):
    p = tmp_path / "schema.txt"
    p.write_text("protected = sex\nprotected_values = Female, Male\nfeatures = hours-per-week\n"
                 "bins.hours-per-week = edges(1, 40, 99)  # two bins\n")
    schema = load_schema(p)
    assert schema.features == ("hours-per-week",)
    assert schema.bins["hours-per-week"].edges == (1.0, 40.0, 99.0)
    assert load_schema_round_trip(schema, tmp_path) == schema.to_text()
    with pytest.raises(SchemaError):
        FeatureBins.parse("edges(3, 2)")
    with pytest.raises(SchemaError):
        FeatureBins.parse("quantile(4)")


def load_schema_round_trip(schema, tmp_path):
    q = tmp_path / "again.txt"
    q.write_text(schema.to_text())
    return load_schema(q).to_text()


def test_dataset_json_round_trip(adult_dataset):
    small = DiscreteDataset(adult_dataset.x[:50], adult_dataset.y[:50], adult_dataset.s[:50],
                            adult_dataset.feature_names, adult_dataset.feature_labels,
                            adult_dataset.y_labels, adult_dataset.s_labels)
    back = DiscreteDataset.from_json(small.to_json())
    assert back.to_json() == small.to_json()


def test_apply_identity_and_determinism(adult_dataset, adult_data):
    plan = identity_plan(adult_data)
    out = apply_repair(adult_dataset, plan, seed=123)
    np.testing.assert_array_equal(out.x, adult_dataset.x)
    with pytest.raises(DimensionError):
        apply_repair(adult_dataset, identity_plan(census.estimate(DiscreteDataset(
            np.array([0, 1]), np.array([0, 1]), np.array([0, 1]), ("f",), (("a", "b"),), ("n", "y")))), 1)


def test_apply_random_plan_properties(adult_dataset, adult_data, rng):
    from tvrepair.suites import random_plan
    plan = random_plan(rng, adult_data)
    a = apply_repair(adult_dataset, plan, seed=42)
    b = apply_repair(adult_dataset, plan, seed=42)
    c = apply_repair(adult_dataset, plan, seed=43)
    assert a.x.tobytes() == b.x.tobytes()
    assert a.x.tobytes() != c.x.tobytes()
    np.testing.assert_array_equal(a.y, adult_dataset.y)
    np.testing.assert_array_equal(a.s, adult_dataset.s)
    # each record's draw depends only on (seed, index)
    head = DiscreteDataset(adult_dataset.x[:100], adult_dataset.y[:100], adult_dataset.s[:100],
                           adult_dataset.feature_names, adult_dataset.feature_labels,
                           adult_dataset.y_labels, adult_dataset.s_labels)
    np.testing.assert_array_equal(apply_repair(head, plan, seed=42).x, a.x[:100])


def test_histogram_examples(adult_dataset):
    one = DiscreteDataset(np.array([3]), np.array([0]), np.array([0]), ("f",), (("a", "b", "c", "d"),),
                          ("n", "y"))
    assert histogram(one, "f", 0) == [("a", 0.0), ("b", 0.0), ("c", 0.0), ("d", 1.0)]
    with pytest.raises(SchemaError):
        histogram(one, "age", 0)
    female = histogram(adult_dataset, "hours-per-week", 0)
    male = histogram(adult_dataset, "hours-per-week", 1)
    assert sum(p for _, p in female) == pytest.approx(1.0, abs=1e-12)
    # men report longer hours: more mass at 50 hours and above
    assert sum(p for _, p in male[4:]) > sum(p for _, p in female[4:]) + 0.1


@pytest.mark.slow
def test_zero_budget_sampling_matches_parity(adult_dataset, adult_data, adult_plan):
    plan = adult_plan(0.0)
    out = apply_repair(adult_dataset, plan, seed=2024)
    counts = [np.bincount(out.x[out.s == s], minlength=out.n_x) for s in (0, 1)]
    emp = [Pmf.of(c / c.sum(), adult_data.x_alphabet) for c in counts]
    assert tv_distance(emp[0], emp[1]) <= 0.02
    # sampled hours histograms sit close to the exact pushed marginals
    for s in (0, 1):
        exact = feature_marginal(push_forward(plan.channels[s], adult_data.q(s)), out.shape, 0)
        sampled = np.array([p for _, p in histogram(out, "hours-per-week", s)])
        assert 0.5 * np.abs(exact - sampled).sum() <= 0.02
