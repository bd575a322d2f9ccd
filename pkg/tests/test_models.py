import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilutegas import (
    Box,
    ContinuumWR,
    DiscreteWR,
    GeneralizedWR,
    InsufficientSupport,
    NoClosedForm,
    Particle,
    ParticleConfiguration,
    Peierls,
    ShrunkenWR,
    StepFunction,
    ThinRods,
    UnboundedDensity,
    alpha_closed_forms,
    alpha_peierls,
    closed_form_for,
    diluteness_coefficient,
    effective_model,
    enumerate_contours,
    negligible_set_membership,
    peierls_lhs,
    restrict,
    rods_intersect,
    shrink_adapter,
)
from dilutegas.intensity import ContourWeights

CATALOG = enumerate_contours(8)

MODELS = [
    DiscreteWR(0.05, 0.05, 1, 2),
    DiscreteWR(0.02, 0.07, 2, 2),
    ContinuumWR(0.1, 0.05, 0.5, 2),
    ShrunkenWR(0.1, 0.5, 2, eps=0.25),
    ShrunkenWR(0.1, 0.5, 2, eps=0.0, delta=0.25),
    GeneralizedWR(0.1, 0.1, StepFunction([0.5], [math.inf]), StepFunction([0.3], [1.0]), StepFunction.zero()),
    ThinRods(0.1, 0.5),
    ThinRods(0.1, 0.7, {0.0: 0.5, math.pi / 2: 0.5}, lattice=True),
    Peierls(1.0, catalog=CATALOG),
]


def random_particle(model, rng, spread=3.0):
    intensity = model.intensity
    if isinstance(intensity, ContourWeights):
        shapes = list(CATALOG.shapes())
        return Particle(tuple(int(v) for v in rng.integers(-2, 3, 2)), shapes[rng.integers(len(shapes))])
    marks = intensity.marks
    mark = marks.sample(rng)
    if intensity.lattice:
        step = getattr(intensity, "spacing", None) or 1
        loc = tuple(int(v) for v in rng.integers(-3, 4, model.dim))
        if step != 1:
            loc = tuple(step * v for v in loc)
    else:
        loc = tuple(float(v) for v in rng.uniform(-spread / 2, spread / 2, model.dim))
    return Particle(loc, mark)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_leaps_are_local_and_bounded(model):
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = random_particle(model, rng)
        config = ParticleConfiguration([random_particle(model, rng) for _ in range(rng.integers(0, 5))])
        leap = model.energy_leap(p, config)
        assert leap >= model.delta_E
        local = restrict(config, model.impact_region(p))
        assert model.energy_leap(p, local) == leap


@pytest.mark.parametrize("model", MODELS[:6], ids=lambda m: m.family)
def test_translation_invariance(model):
    rng = np.random.default_rng(2)
    shift = (2, -1) if model.lattice else (0.37, -1.21)
    if getattr(model.intensity, "spacing", None):
        shift = tuple(model.intensity.spacing * s for s in (2, -1))

    def move(q):
        return Particle(tuple(a + b for a, b in zip(q.location, shift)), q.mark)

    for _ in range(100):
        p = random_particle(model, rng)
        config = ParticleConfiguration([random_particle(model, rng) for _ in range(3)])
        assert model.energy_leap(p, config) == model.energy_leap(move(p), config.map(move))


def test_discrete_wr_impact_region_exactly():
    model = DiscreteWR(0.05, 0.05, 2, 2)
    p = Particle((0, 0), "+")
    region = model.impact_region(p)
    inside = {
        Particle((x, y), m)
        for x in range(-4, 5)
        for y in range(-4, 5)
        for m in "+-"
        if region.contains(Particle((x, y), m))
    }
    expected = {p} | {Particle((x, y), "-") for x in range(-2, 3) for y in range(-2, 3)}
    assert inside == expected


def test_leap_needs_window_covering_impact_region():
    model = DiscreteWR(0.05, 0.05, 1, 2)
    with pytest.raises(InsufficientSupport):
        model.energy_leap(Particle((0, 0), "+"), ParticleConfiguration(window=Box((0, 0), (3, 3))))


def test_rods_intersection_is_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(500):
        a = Particle(tuple(rng.uniform(0, 1, 2)), float(rng.uniform(0, math.pi)))
        b = Particle(tuple(rng.uniform(0, 1, 2)), float(rng.uniform(0, math.pi)))
        assert rods_intersect(a, b, 0.4) == rods_intersect(b, a, 0.4)


def test_closed_form_values():
    assert alpha_closed_forms("discrete-wr", lam_plus=0.05, lam_minus=0.05, k=1, d=2) == pytest.approx(0.5, abs=1e-15)
    assert alpha_closed_forms("continuum-wr", lam_plus=0.1, lam_minus=0.1, r=0.5, d=2) == pytest.approx(0.1, abs=1e-15)
    assert alpha_closed_forms("thin-rods", lam=0.1, half_length=0.5) == pytest.approx(0.2 / math.pi, abs=1e-15)
    assert alpha_closed_forms("discrete-wr", lam_plus=0.0, lam_minus=0.0, k=1, d=2) == 0.0
    with pytest.raises(NoClosedForm):
        alpha_closed_forms("ising")


@pytest.mark.parametrize(
    "model",
    [
        DiscreteWR(0.05, 0.05, 1, 2),
        DiscreteWR(0.01, 0.03, 2, 3),
        ContinuumWR(0.1, 0.1, 0.5, 2),
        ContinuumWR(0.2, 0.05, 0.3, 3),
        ShrunkenWR(0.1, 0.5, 2, eps=0.0),
        ThinRods(0.1, 0.5),
        ThinRods(0.3, 0.8),
        ThinRods(0.1, 0.5, {0.0: 0.25, 1.0: 0.25, 2.0: 0.5}),
    ],
    ids=repr,
)
def test_closed_forms_match_generic_integrator(model):
    assert abs(closed_form_for(model) - diluteness_coefficient(model).alpha) <= 1e-12


def test_envelope_coefficient():
    model = ShrunkenWR(0.1, 0.5, 2, eps=0.0, delta=0.5)
    assert closed_form_for(model, use_envelope=True) == pytest.approx(0.5)
    assert diluteness_coefficient(model, use_envelope=True).alpha == pytest.approx(0.5, abs=1e-12)


def test_generalized_wr_bound_is_exact_when_opposite_range_dominates():
    h = StepFunction([0.6], [math.inf])
    j = StepFunction([0.2], [1.0])
    model = GeneralizedWR(0.1, 0.1, h, j, j)
    assert closed_form_for(model) == pytest.approx(diluteness_coefficient(model).alpha, abs=1e-12)


def test_generalized_wr_bound_dominates_otherwise():
    h = StepFunction([0.2], [math.inf])
    j = StepFunction([0.6], [1.0])
    model = GeneralizedWR(0.1, 0.1, h, j, j)
    assert closed_form_for(model) >= diluteness_coefficient(model).alpha


def test_peierls_sum_examples():
    assert peierls_lhs(1.0, 4)["value"] == pytest.approx(4 * math.exp(-8.0), rel=1e-14)
    lhs5 = peierls_lhs(5.0, 8, CATALOG)
    assert lhs5["value"] <= 4 * math.exp(-40) * (1 + 1e-6) + lhs5["tail_estimate"] + 1e-30
    values = [peierls_lhs(b, 8, CATALOG)["value"] for b in np.linspace(0.3, 2.0, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_peierls_bound_dominates_catalog_sup():
    model = Peierls(1.0, catalog=CATALOG)
    bound = alpha_peierls(1.0, 8, CATALOG).alpha
    assert bound >= diluteness_coefficient(model, "length").alpha


def test_effective_model_shifts_leaps():
    base = DiscreteWR(0.05, 0.05, 1, 2)
    same = effective_model(base, base.intensity, lambda p: 1.0)
    shifted = effective_model(base, base.intensity, lambda p: 1.2, delta_E=-math.log(1.2))
    config = ParticleConfiguration([Particle((3, 3), "-")])
    for p in (Particle((0, 0), "+"), Particle((3, 4), "+"), Particle((5, 5), "-")):
        assert same.energy_leap(p, config) == base.energy_leap(p, config)
        leap = base.energy_leap(p, config)
        expected = leap - math.log(1.2) if leap < math.inf else math.inf
        assert shifted.energy_leap(p, config) == expected
    bad = effective_model(base, base.intensity, lambda p: 2.0, delta_E=-0.1)
    with pytest.raises(UnboundedDensity):
        bad.energy_leap(Particle((0, 0), "+"), ParticleConfiguration())


def test_effective_peierls_temperature_change():
    base = Peierls(1.0, catalog=CATALOG)
    model = effective_model(base, base.intensity, lambda p: math.exp(-2 * 0.5 * p.mark.length))
    p = Particle((0, 0), next(CATALOG.shapes()))
    assert model.energy_leap(p, ParticleConfiguration()) == pytest.approx(2 * 0.5 * 4)


def test_shrink_adapter_keeps_radius_in_continuum_units():
    m = shrink_adapter(DiscreteWR(0.1, 0.1, 1, 2), 0.25)
    assert m.eps == 0.25 and m.r0 == 1.0
    assert m.intensity.cell_mass(("s", (0, 0))) == pytest.approx(2 * 0.25**2 * 0.1)
    unit = shrink_adapter(DiscreteWR(0.1, 0.1, 1, 2), 1.0)
    a, b = Particle((0, 0), "+"), Particle((1, 1), "-")
    assert unit.pair(a, b) == DiscreteWR(0.1, 0.1, 1, 2).pair(a, b) == math.inf


def test_negligible_sets():
    assert not negligible_set_membership("continuum-wr", ParticleConfiguration())
    assert not negligible_set_membership("thin-rods", ParticleConfiguration())
    assert negligible_set_membership("discrete-wr", ParticleConfiguration({Particle((0, 0), "+"): 2}))
    pair = ParticleConfiguration([Particle((0.0, 0.0), "+"), Particle((0.5, 0.0), "-")])
    assert negligible_set_membership("continuum-wr", pair, r0=0.5)
    assert not negligible_set_membership("continuum-wr", pair, r0=0.6)
    assert negligible_set_membership(ContinuumWR(0.1, 0.1, 0.5), pair)
    with pytest.raises(ValueError):
        negligible_set_membership("peierls", ParticleConfiguration())


@settings(max_examples=50)
@given(st.floats(0.0, 0.2), st.floats(0.0, 0.2), st.integers(1, 3), st.integers(1, 3))
def test_discrete_wr_coefficient_formula(lp, lm, k, d):
    model = DiscreteWR(lp, lm, k, d)
    expected = max(lp, lm) * (2 * k + 1) ** d + min(lp, lm)
    assert closed_form_for(model) == pytest.approx(expected, abs=1e-14)
    assert diluteness_coefficient(model).alpha == pytest.approx(expected, abs=1e-12)
