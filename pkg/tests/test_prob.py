import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvrepair import (Alphabet, Channel, DimensionError, EmptySupport, InvalidParameter,
                      JointTable, Pmf, constant_channel, dobrushin_coefficient, identity_channel,
                      marginal_x, marginal_y, pmf_from_counts, push_forward, push_forward_joint,
                      tv_distance, tv_distance_joint)
from tvrepair.prob import from_json, to_json

from oracles import pushforward_joint_loops, tv


def test_counts_normalize():
    ab = Alphabet(("a", "b"))
    assert pmf_from_counts([2, 2], ab).mass.tolist() == [0.5, 0.5]
    np.testing.assert_array_equal(pmf_from_counts([3, 0, 1], Alphabet.range(3)).mass,
                                  [0.75, 0.0, 0.25])


def test_counts_errors():
    with pytest.raises(EmptySupport):
        pmf_from_counts([0, 0], Alphabet.range(2))
    with pytest.raises(DimensionError):
        pmf_from_counts([1, 2, 3], Alphabet.range(2))


def test_pmf_rejects_bad_mass():
    with pytest.raises(InvalidParameter):
        Pmf.of([0.5, 0.6])
    with pytest.raises(InvalidParameter):
        Pmf.of([1.2, -0.2])
    with pytest.raises(DimensionError):
        Pmf(Alphabet.range(3), np.array([0.5, 0.5]))
    with pytest.raises(InvalidParameter):
        Channel.of([[0.5, 0.4], [0, 1]])


def test_values_are_read_only():
    p = Pmf.of([0.5, 0.5])
    with pytest.raises(ValueError):
        p.mass[0] = 1.0


def test_tv_examples():
    p = Pmf.of([0.7, 0.3])
    assert tv_distance(p, p) == 0.0
    assert tv_distance(Pmf.of([1, 0]), Pmf.of([0, 1])) == 1.0
    assert tv_distance(p, Pmf.of([0.4, 0.6])) == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(DimensionError):
        tv_distance(p, Pmf.of([1, 0, 0]))
    with pytest.raises(DimensionError):
        tv_distance(p, Pmf(Alphabet(("x", "y")), np.array([0.7, 0.3])))


def test_joint_tv_examples():
    a = JointTable.of([[0.5, 0], [0, 0.5]])
    assert tv_distance_joint(a, a) == 0.0
    assert tv_distance_joint(JointTable.of([[1, 0], [0, 0]]), JointTable.of([[0, 0], [0, 1]])) == 1.0
    assert tv_distance_joint(a, JointTable.of([[0.25, 0.25], [0.25, 0.25]])) == pytest.approx(0.5)


def test_push_forward_examples():
    p = Pmf.of([0.2, 0.3, 0.5])
    np.testing.assert_array_equal(push_forward(identity_channel(p.alphabet), p).mass, p.mass)
    r = Pmf.of([0.1, 0.6, 0.3])
    np.testing.assert_allclose(push_forward(constant_channel(p.alphabet, r), p).mass, r.mass,
                               atol=1e-15)
    t = Channel.of([[0.9, 0.1], [0.2, 0.8]])
    np.testing.assert_allclose(push_forward(t, Pmf.of([0.5, 0.5])).mass, [0.55, 0.45], atol=1e-15)


def test_push_forward_joint_examples():
    j = JointTable.of([[0.1, 0.2], [0.3, 0.4]])
    out = push_forward_joint(identity_channel(j.x_alphabet), j)
    np.testing.assert_array_equal(out.mass, j.mass)
    r = Pmf.of([0.25, 0.75])
    const = push_forward_joint(constant_channel(j.x_alphabet, r), j)
    np.testing.assert_allclose(const.mass, np.outer(r.mass, marginal_y(j).mass), atol=1e-15)
    t = Channel.of([[0.9, 0.1], [0.2, 0.8]])
    np.testing.assert_allclose(push_forward_joint(t, j).mass,
                               pushforward_joint_loops(t.rows.tolist(), j.mass.tolist()), atol=1e-15)


def test_marginals():
    np.testing.assert_allclose(marginal_x(JointTable.of([[0.5, 0], [0, 0.5]])).mass, [0.5, 0.5])
    point = JointTable.of([[0, 1], [0, 0]])
    assert marginal_x(point).mass.tolist() == [1, 0]
    assert marginal_y(point).mass.tolist() == [0, 1]
    np.testing.assert_allclose(marginal_x(JointTable.of([[0.1, 0.2], [0.3, 0.4]])).mass,
                               [0.3, 0.7], atol=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.5, math.log(2), 1.0, 3.0])
def test_dobrushin_examples(eps):
    assert dobrushin_coefficient(identity_channel(Alphabet.range(3))) == 1.0
    assert dobrushin_coefficient(constant_channel(Alphabet.range(3), Pmf.of([0.2, 0.3, 0.5]))) \
        == pytest.approx(0.0, abs=1e-15)
    a = math.exp(-eps)
    rr = Channel.of([[1 - a, a], [a, 1 - a]])
    assert dobrushin_coefficient(rr) == pytest.approx(1 - 2 * min(a, 1 - a), abs=1e-15)


def test_json_round_trip():
    p = Pmf(Alphabet(("lo", "hi")), np.array([0.25, 0.75]))
    t = Channel.of([[0.9, 0.1], [0.2, 0.8]])
    j = JointTable.of([[0.1, 0.2], [0.3, 0.4]])
    for obj in (p, t, j):
        text = to_json(obj)
        back = from_json(text)
        assert type(back) is type(obj)
        a = getattr(obj, "mass", None) if not isinstance(obj, Channel) else obj.rows
        b = getattr(back, "mass", None) if not isinstance(back, Channel) else back.rows
        np.testing.assert_allclose(a, b, atol=1e-12)
    assert json.loads(to_json(p)) == {"kind": "pmf", "alphabet": ["lo", "hi"], "mass": [0.25, 0.75]}


# --- properties -------------------------------------------------------------------

def pmfs(n):
    return st.lists(st.floats(0, 1), min_size=n, max_size=n).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: Pmf.of(np.array(v) / sum(v)))


@st.composite
def pmf_triples(draw):
    n = draw(st.integers(1, 6))
    return draw(pmfs(n)), draw(pmfs(n)), draw(pmfs(n))


@st.composite
def channel_and_pair(draw):
    n = draw(st.integers(1, 5))
    m = draw(st.integers(1, 5))
    rows = np.array([draw(pmfs(m)).mass for _ in range(n)])
    return Channel.of(rows), draw(pmfs(n)), draw(pmfs(n))


@settings(max_examples=300, deadline=None)
@given(pmf_triples())
def test_tv_is_a_metric(triple):
    p, q, r = triple
    assert tv_distance(p, q) == pytest.approx(tv(p.mass, q.mass), abs=1e-15)
    assert tv_distance(p, q) == tv_distance(q, p)
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-15
    assert 0.0 <= tv_distance(p, q) <= 1.0
    assert tv_distance(p, p) == 0.0
    if tv_distance(p, q) == 0.0:
        assert np.all(np.abs(p.mass - q.mass) <= 1e-12)


@settings(max_examples=300, deadline=None)
@given(channel_and_pair())
def test_channels_contract_tv(case):
    t, p, q = case
    tp, tq = push_forward(t, p), push_forward(t, q)
    assert abs(tp.mass.sum() - 1.0) <= 1e-12
    assert tv_distance(tp, tq) <= dobrushin_coefficient(t) * tv_distance(p, q) + 1e-12


def test_contraction_random_trials(rng):
    for _ in range(1000):
        n, m = rng.integers(1, 7, size=2)
        t = Channel.of(rng.dirichlet(np.ones(m), size=n))
        p, q = Pmf.of(rng.dirichlet(np.ones(n))), Pmf.of(rng.dirichlet(np.ones(n)))
        assert tv_distance(push_forward(t, p), push_forward(t, q)) \
            <= dobrushin_coefficient(t) * tv_distance(p, q) + 1e-12


def test_joint_dominates_marginal(rng):
    for _ in range(1000):
        n, ny = rng.integers(1, 6, size=2)
        a = JointTable.of(rng.dirichlet(np.ones(n * ny)).reshape(n, ny))
        b = JointTable.of(rng.dirichlet(np.ones(n * ny)).reshape(n, ny))
        assert tv_distance_joint(a, b) >= tv_distance(marginal_x(a), marginal_x(b)) - 1e-15


def test_joint_pushforward_marginal_commutes(rng):
    for _ in range(200):
        n, ny = rng.integers(1, 6, size=2)
        j = JointTable.of(rng.dirichlet(np.ones(n * ny)).reshape(n, ny))
        t = Channel.of(rng.dirichlet(np.ones(n), size=n))
        np.testing.assert_allclose(marginal_x(push_forward_joint(t, j)).mass,
                                   push_forward(t, marginal_x(j)).mass, atol=1e-14)
        np.testing.assert_allclose(marginal_y(push_forward_joint(t, j)).mass,
                                   marginal_y(j).mass, atol=1e-14)
