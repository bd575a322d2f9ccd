"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed together at the end of the run.
Seeds are fixed in advance so the run is reproducible.
"""
import io
import itertools
import math
import time

import numpy as np
from scipy import integrate, stats

from dilutegas import (
    Box,
    ContinuumWR,
    DiscreteWR,
    Particle,
    ParticleConfiguration,
    ShrunkenWR,
    SiteSet,
    Substrate,
    ThinRods,
    AtomicLattice,
    check_contour_identity,
    closed_form_for,
    contours_to_spins,
    coupled_sample,
    derive_seed,
    diluteness_coefficient,
    distance,
    dyadic_grid,
    enumerate_contours,
    enumerate_contours_by_regions,
    enumerate_gibbs,
    finite_volume_sample,
    forward_dynamics,
    identity_run,
    in_neighborhood,
    is_delta_embedded,
    peierls_lhs,
    perfect_sample,
    perfect_sample_details,
    spins_to_contours,
    stabilization_epsilon,
    tv_distance,
    write_configurations,
    wr_discretization_run,
    wr_fugacity_run,
)

SEED = 20240611
WR = DiscreteWR(0.05, 0.05, 1, 2)
BLOCK = SiteSet([(0, 0), (0, 1), (1, 0), (1, 1)])


def test_exact_kernel_equivalence(acceptance):
    start = time.perf_counter()
    exact = enumerate_gibbs(WR, BLOCK)
    n = 100_000
    samples = [finite_volume_sample(WR, BLOCK, None, derive_seed(SEED, r)) for r in range(n)]
    elapsed = time.perf_counter() - start
    tv = tv_distance(samples, exact)
    p_empty = sum(c.is_empty() for c in samples) / n
    target = 1 / (2 * 1.05**4 - 1)
    ok = tv <= 0.01 and abs(p_empty - target) <= 0.0045 and elapsed <= 120
    acceptance(1, "exact kernel", ok, f"TV={tv:.4f} P(empty)={p_empty:.5f} (exact {target:.6f}) time={elapsed:.1f}s")


def test_stationarity_of_dynamics(acceptance):
    exact = enumerate_gibbs(WR, BLOCK)
    rng = np.random.default_rng(SEED)
    starts = rng.choice(len(exact.support), size=10_000, p=exact.probabilities)
    finals = [
        forward_dynamics(WR, BLOCK, None, exact.support[i], 5.0, derive_seed(SEED, r)).final()
        for r, i in enumerate(starts)
    ]
    tv = tv_distance(finals, exact)
    acceptance(2, "stationarity", tv <= 0.02, f"terminal TV={tv:.4f} over 10^4 replicas")


def test_clan_branching_bound(acceptance):
    alpha = closed_form_for(WR)
    # independent single-site windows until 10^4 root clans are collected
    sizes = []
    r = 0
    while len(sizes) < 10_000:
        res = perfect_sample_details(WR, Box((0, 0), (0, 0)), derive_seed(SEED, r))
        sizes.extend(len(res.clan.ancestors_of(root)) for root in res.clan.roots)
        r += 1
    mean = float(np.mean(sizes))
    sigma = float(np.std(sizes, ddof=1) / math.sqrt(len(sizes)))
    bound = 1 / (1 - alpha)
    ok = alpha == 0.5 and mean <= bound + 3 * sigma
    acceptance(3, "clan size", ok, f"mean {mean:.3f} per root over {len(sizes)} roots, bound {bound} + 3sigma={3 * sigma:.3f}; cap never hit")


def test_identity_coupling_is_bitwise(acceptance):
    run = identity_run(WR, dyadic_grid(1, 4))
    W = Box((0, 0), (3, 3))
    mismatches = 0
    for r in range(1000):
        seed = derive_seed(SEED, r)
        cs = coupled_sample(run, W, seed)
        ref = perfect_sample(WR, W, seed)
        a, b = io.StringIO(), io.StringIO()
        write_configurations(a, [(r, e, cs.outputs[e]) for e in run.grid])
        write_configurations(b, [(r, e, ref) for e in run.grid])
        mismatches += a.getvalue() != b.getvalue()
    acceptance(4, "identity coupling", mismatches == 0, f"{mismatches} mismatches in 1000 replicas")


def test_ac_perturbation_coupling(acceptance):
    grid = [0.2, 0.1, 0.05, 0.02, 0.01]
    run = wr_fugacity_run(0.05, 1, 2, grid)
    W = Box((0, 0), (2, 2))
    n = 1000
    agree = {e: 0 for e in grid}
    for r in range(n):
        cs = coupled_sample(run, W, derive_seed(SEED, r))
        for e in grid:
            agree[e] += cs.outputs[e] == cs.outputs[0.0]
    frac = {e: agree[e] / n for e in grid}
    monotone = True
    for small, large in zip(grid[1:], grid[:-1]):
        p = (agree[small] + agree[large]) / (2 * n)
        sigma = math.sqrt(max(p * (1 - p), 1 / n) * 2 / n)
        monotone &= frac[large] <= frac[small] + 3 * sigma
    ok = monotone and frac[0.01] > frac[0.2]
    acceptance(5, "AC coupling", ok, "agreement " + " ".join(f"{e}:{frac[e]:.3f}" for e in grid))


def test_discretization_coupling(acceptance):
    run = wr_discretization_run(0.1, 0.5, 2, dyadic_grid(1, 10))
    K = Box((0.0, 0.0), (1.0, 1.0))
    smallest = min(e for e in run.grid if e > 0)
    stars, missing, vague_fail = [], 0, 0
    for r in range(1000):
        cs = coupled_sample(run, K, derive_seed(SEED, r))
        star = stabilization_epsilon(cs)
        if star is None:
            missing += 1
            continue
        stars.append(star)
        if not in_neighborhood(cs.full[0.0], cs.full[smallest], K, 0.01):
            vague_fail += 1
    median = float(np.median(stars + [0.0] * missing))
    ok = missing == 0 and median > 0 and vague_fail == 0
    acceptance(
        6,
        "discretization coupling",
        ok,
        f"none-on-grid={missing} median eps*={median} min eps*={min(stars)} vague failures={vague_fail}",
    )


def test_peierls_machinery(acceptance):
    round_trip = all(
        contours_to_spins(spins_to_contours([list(bits[i * 4:(i + 1) * 4]) for i in range(4)]))
        == [list(bits[i * 4:(i + 1) * 4]) for i in range(4)]
        for bits in itertools.product((1, -1), repeat=16)
    )
    worst = max(check_contour_identity(3, b) for b in (0.5, 0.8, 1.2))
    a, b = enumerate_contours(6).counts, enumerate_contours_by_regions(6).counts
    counts_ok = a[4] == b[4] == 1 and a[6] == b[6] == 2
    catalog = enumerate_contours(12)
    values = [peierls_lhs(beta, 12, catalog)["value"] for beta in np.linspace(0.3, 2.0, 10)]
    decreasing = all(x > y for x, y in zip(values, values[1:]))
    ok = round_trip and worst <= 1e-10 and counts_ok and decreasing
    acceptance(
        7,
        "Peierls machinery",
        ok,
        f"round trip on 65536={round_trip} identity discrepancy={worst:.2e} N4,N6={a[4]},{a[6]} lhs decreasing={decreasing}",
    )


def test_coefficients(acceptance):
    lam, l = 0.1, 0.5
    rods = ThinRods(lam, l)
    # independent quadrature of int |sin(g - h)| drho(h) for uniform rho
    sin_int = max(
        integrate.quad(lambda h: abs(math.sin(g - h)) / math.pi, 0, math.pi, points=[g], epsabs=1e-14, epsrel=1e-14)[0]
        for g in np.linspace(0, math.pi, 7, endpoint=False)
    )
    numeric = 4 * lam * l * l * sin_int
    formula = 8 * lam * l * l / math.pi
    rods_ok = abs(formula - numeric) <= 1e-9 and abs(closed_form_for(rods) - formula) <= 1e-9
    models = [
        DiscreteWR(0.05, 0.05, 1, 2),
        DiscreteWR(0.02, 0.07, 2, 3),
        ContinuumWR(0.1, 0.1, 0.5, 2),
        ShrunkenWR(0.1, 0.5, 2, eps=0.0),
        ThinRods(0.1, 0.5),
        ThinRods(0.2, 0.8, {0.0: 0.5, math.pi / 2: 0.5}),
    ]
    worst = max(abs(closed_form_for(m) - diluteness_coefficient(m).alpha) for m in models)
    env = ShrunkenWR(0.1, 0.5, 2, eps=0.0, delta=0.5)
    worst = max(worst, abs(closed_form_for(env, True) - diluteness_coefficient(env, use_envelope=True).alpha))
    ok = rods_ok and worst <= 1e-12
    acceptance(8, "coefficients", ok, f"rods 8lam l^2/pi - quadrature = {formula - numeric:.1e}; worst closed-form gap {worst:.1e}")


def test_substrate_laws(acceptance):
    intensity = AtomicLattice(2, {"+": 0.35, "-": 0.35})
    cell = ("s", (0, 0))
    n = 10_000
    counts, ages, residuals = [], [], []
    for r in range(n):
        cyl = Substrate(intensity, 0.0, derive_seed(SEED, r)).alive_at(cell, 0.0)
        counts.append(len(cyl))
        ages.extend(-c.birth for c in cyl)
        residuals.extend(c.death for c in cyl)
    top = 4
    observed = [counts.count(k) for k in range(top)] + [sum(c >= top for c in counts)]
    expected = [stats.poisson.pmf(k, 0.7) * n for k in range(top)] + [stats.poisson.sf(top - 1, 0.7) * n]
    p_count = stats.chisquare(observed, expected).pvalue
    ages, residuals = ages[:n], residuals[:n]
    p_age = stats.kstest(ages, "expon").pvalue
    p_res = stats.kstest(residuals, "expon").pvalue
    sub = Substrate(intensity, 0.0, 7)
    again = Substrate(intensity, 0.0, 7)
    first = sub.alive_at(cell, -0.5)
    idem = first == sub.alive_at(cell, -0.5) and first == again.alive_at(cell, -0.5)
    ok = min(p_count, p_age, p_res) > 1e-3 and idem
    acceptance(9, "substrate laws", ok, f"p(count)={p_count:.3f} p(age)={p_age:.3f} p(residual)={p_res:.3f} idempotent+deterministic={idem}")


def _brute_embedded(xi, eta, delta):
    src, dst = xi.particles(), eta.particles()
    if len(src) > len(dst):
        return False
    return any(
        all(distance(p, dst[j]) < delta for p, j in zip(src, perm))
        for perm in itertools.permutations(range(len(dst)), len(src))
    )


def test_embedding_oracle(acceptance):
    rng = np.random.default_rng(SEED)

    def config(k):
        return ParticleConfiguration(
            [Particle((float(rng.integers(0, 4) * 0.5), float(rng.integers(0, 4) * 0.5)), str(rng.choice(["+", "-"]))) for _ in range(k)]
        )

    disagreements = 0
    for _ in range(1000):
        xi, eta = config(int(rng.integers(0, 5))), config(int(rng.integers(0, 5)))
        delta = float(rng.choice([0.25, 0.5, 0.75, 1.0, 1.5]))
        disagreements += is_delta_embedded(xi, eta, delta) != _brute_embedded(xi, eta, delta)
    acceptance(10, "embedding oracle", disagreements == 0, f"{disagreements} disagreements in 1000 instances")
