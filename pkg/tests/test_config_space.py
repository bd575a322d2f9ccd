import io
import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilutegas import (
    Box,
    Complement,
    Particle,
    ParticleConfiguration,
    PredicateRegion,
    SiteSet,
    Union,
    Whole,
    count,
    distance,
    in_neighborhood,
    is_delta_embedded,
    read_configurations,
    restrict,
    superpose,
    write_configurations,
)


def P(x, y, m="+"):
    return Particle((x, y), m)


def brute_embedded(xi, eta, delta):
    src, dst = xi.particles(), eta.particles()
    if len(src) > len(dst):
        return False
    for perm in itertools.permutations(range(len(dst)), len(src)):
        if all(distance(p, dst[j]) < delta for p, j in zip(src, perm)):
            return True
    return False


points = st.builds(
    Particle,
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.sampled_from(["+", "-"]),
)
configs = st.lists(points, max_size=8).map(ParticleConfiguration.from_particles)


def test_angle_mark_must_lie_in_half_circle():
    Particle((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        Particle((0.0, 0.0), math.pi)


def test_distance_is_location_plus_mark():
    assert distance(P(0, 0), P(1, 2)) == 2
    assert distance(P(0, 0), P(0, 0, "-")) == 1
    a, b = Particle((0.0,), 0.1), Particle((0.0,), math.pi - 0.1)
    assert distance(a, b) == pytest.approx(0.2)


def test_multiplicities_merge_and_compare_as_measures():
    c = ParticleConfiguration([P(0, 0), P(0, 0), P(1, 1, "-")])
    assert c.multiplicity(P(0, 0)) == 2
    assert c.total() == 3
    assert c == ParticleConfiguration({P(1, 1, "-"): 1, P(0, 0): 2}, window=Box((0, 0), (5, 5)))
    with pytest.raises(ValueError):
        ParticleConfiguration({P(0, 0): 0})


def test_window_is_checked():
    with pytest.raises(ValueError):
        ParticleConfiguration([P(3, 3)], window=Box((0, 0), (1, 1)))


def test_regions():
    box = Box((0, 0), (2, 2), marks={"+"}, lattice=True)
    assert box.contains(P(2, 2)) and not box.contains(P(2, 2, "-"))
    assert len(list(box.sites())) == 9
    ball = Box.ball((0.0, 0.0), 1.0, strict=True)
    assert not ball.contains(Particle((1.0, 0.0), "+"))
    assert ball.contains(Particle((0.99, -0.99), "+"))
    u = Union(SiteSet([(5, 5)]), box)
    assert u.contains(P(5, 5, "-")) and u.contains(P(1, 1))
    comp = Complement(box, Box((0, 0), (3, 3)))
    assert comp.contains(P(3, 3)) and not comp.contains(P(1, 1))
    pred = PredicateRegion(((0, 0), (1, 1)), lambda p: p.mark == "-")
    assert pred.contains(P(1, 1, "-")) and not pred.contains(P(2, 2, "-"))
    assert Whole().covers_bbox(box) and not box.covers_bbox(Whole())


def test_count_and_restrict():
    c = ParticleConfiguration([P(0, 0), P(0, 0), P(3, 3)])
    B = Box((0, 0), (1, 1))
    assert count(c, B) == 2
    assert restrict(c, B) == ParticleConfiguration({P(0, 0): 2})


@given(configs, configs)
def test_superpose_adds_counts(a, b):
    s = superpose(a, b)
    for p in a.support() | b.support():
        assert s.multiplicity(p) == a.multiplicity(p) + b.multiplicity(p)
    assert s.total() == a.total() + b.total()


@given(configs)
def test_restriction_is_idempotent(c):
    B = Box((0, 0), (1, 2))
    assert restrict(restrict(c, B), B) == restrict(c, B)
    assert count(c, B) == restrict(c, B).total()


@settings(max_examples=300)
@given(configs, configs, st.sampled_from([0.5, 1.0, 1.5, 2.0, 2.5]))
def test_embedding_matches_brute_force(xi, eta, delta):
    assert is_delta_embedded(xi, eta, delta) == brute_embedded(xi, eta, delta)


def test_embedding_examples():
    assert is_delta_embedded(ParticleConfiguration(), ParticleConfiguration([P(0, 0)]), 0.1)
    assert not is_delta_embedded(ParticleConfiguration({P(0, 0): 2}), ParticleConfiguration([P(0, 0)]), 1.0)
    with pytest.raises(ValueError):
        is_delta_embedded(ParticleConfiguration(), ParticleConfiguration(), 0.0)


@given(configs)
def test_configuration_is_in_its_own_neighbourhood(c):
    assert in_neighborhood(c, c, Box((0, 0), (3, 3)), 0.1)


reals = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(
    st.lists(
        st.tuples(
            st.integers(0, 3),
            st.lists(
                st.builds(Particle, st.tuples(reals, reals), st.floats(0.0, 3.14159)),
                max_size=4,
            ),
        ),
        max_size=4,
    )
)
def test_serialization_round_trip(records):
    recs = [(r, 0.25, ParticleConfiguration.from_particles(ps)) for r, (_, ps) in enumerate(records)]
    buf = io.StringIO()
    write_configurations(buf, recs)
    back = read_configurations(buf.getvalue())
    assert [(r, e, c) for r, e, c in back] == recs


def test_serialization_keeps_integer_coordinates():
    buf = io.StringIO()
    write_configurations(buf, [(0, 0.0, ParticleConfiguration({P(2, -1, "-"): 3}))])
    assert "2 -1,-,3" in buf.getvalue()
    (_, _, c), = read_configurations(buf.getvalue())
    assert c.entries[0][0].location == (2, -1)
