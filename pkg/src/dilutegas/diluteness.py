"""Heavy-diluteness coefficients: closed forms and a generic integrator.

The coefficient of a model with size function q is

    alpha_q = sup over particles g of exp(-delta_E) / q(g) * integral of q dnu over I(g),

with I replaced by the envelope V when requested. All built-in models are
translation invariant, so the sup runs over marks only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from shapely.geometry import MultiPoint

from .config_space import Box, Particle, Union
from .contours import ContourCatalog, enumerate_contours
from .errors import NoClosedForm, TruncationInconclusive
from .geometry import rod_endpoints
from .intensity import AtomicLattice, DiscreteMarks, UniformAngles, UniformContinuum
from .models import (
    ContinuumWR,
    DiscreteWR,
    EffectiveModel,
    GasModel,
    GeneralizedWR,
    Peierls,
    ShrunkenWR,
    ThinRods,
)

__all__ = [
    "DilutenessReport",
    "alpha_discrete_wr",
    "alpha_continuum_wr",
    "alpha_generalized_wr",
    "alpha_thin_rods",
    "alpha_peierls",
    "alpha_wr_envelope",
    "peierls_lhs",
    "alpha_closed_forms",
    "diluteness_coefficient",
    "sin_integral",
]


@dataclass
class DilutenessReport:
    alpha: float
    size_function_id: str = "constant"
    envelope_used: bool = False
    method: str = "closed-form"
    upper_bound: bool = False
    truncation: dict = field(default_factory=dict)

    @property
    def heavily_diluted(self) -> bool:
        return self.alpha < 1

    @property
    def verdict(self) -> str:
        if self.alpha < 1:
            return "heavily diluted"
        if self.upper_bound:
            return "not certified (bound >= 1)"
        return "not heavily diluted"


# ---------------------------------------------------------------------------
# Closed forms


def alpha_discrete_wr(lam_plus: float, lam_minus: float, k: int, d: int) -> float:
    return max(lam_plus, lam_minus) * (2 * k + 1) ** d + min(lam_plus, lam_minus)


def alpha_continuum_wr(lam_plus: float, lam_minus: float, r: float, d: int) -> float:
    return max(lam_plus, lam_minus) * (2 * r) ** d


def alpha_wr_envelope(lam: float, r0: float, delta: float, d: int) -> float:
    """nu-mass of the coupling envelope: same type within delta, opposite within r0 + delta."""
    return lam * ((2 * (r0 + delta)) ** d + (2 * delta) ** d)


def alpha_generalized_wr(lam_plus, lam_minus, m_h, m_jp, m_jm, d: int) -> float:
    """Closed form for the soft WR family in terms of the repulsion reaches.

    This bounds the exact coefficient from above and equals it when the
    inter-type reach m_h dominates both intra-type reaches.
    """
    a = lam_minus * m_jm**d + lam_plus * max(m_h**d, m_jp**d)
    b = lam_plus * m_jp**d + lam_minus * max(m_h**d, m_jm**d)
    return 2**d * max(a, b)


def _atomic_sin_sup(atoms: dict) -> float:
    """Exact sup over g of sum_i p_i |sin(g - t_i)|.

    Between consecutive kinks the sum is A sin g + B cos g, whose maximum on
    the interval is at an endpoint or at the stationary point.
    """
    thetas = sorted(set(float(t) % math.pi for t in atoms))
    if not thetas:
        return 0.0
    weights = {}
    for t, p in atoms.items():
        weights[float(t) % math.pi] = weights.get(float(t) % math.pi, 0.0) + p

    def f(g):
        return sum(p * abs(math.sin(g - t)) for t, p in weights.items())

    best = max(f(t) for t in thetas)
    bounds = thetas + [thetas[0] + math.pi]
    for lo, hi in zip(bounds, bounds[1:]):
        mid = 0.5 * (lo + hi)
        a = b = 0.0
        for t, p in weights.items():
            s = 1.0 if math.sin(mid - t) >= 0 else -1.0
            a += s * p * math.cos(t)
            b -= s * p * math.sin(t)
        # sum s p sin(g - t) = a sin g + b cos g
        g0 = math.atan2(a, b)
        for g in (g0, g0 + math.pi, g0 - math.pi, g0 + 2 * math.pi):
            if lo <= g <= hi:
                best = max(best, f(g))
    return best


def alpha_thin_rods(lam: float, half_length: float, orientation="uniform") -> float:
    """4 lam l^2 sup_g int |sin(g - t)| drho(t); 8 lam l^2 / pi for uniform rho."""
    if orientation == "uniform":
        return 8.0 * lam * half_length**2 / math.pi
    return 4.0 * lam * half_length**2 * _atomic_sin_sup(orientation)


def _growth_tail(counts_by_length: dict, lmax: int, term) -> tuple[float, float]:
    """Geometric tail estimate for sum_{l > lmax} term(l, N_l).

    N_l beyond lmax is extrapolated with the last empirical ratio N_l / N_{l-2};
    the tail is summed as a geometric series of the ratio of consecutive terms.
    Returns (tail, ratio); the tail is ``inf`` if the ratio is >= 1.
    """
    n_last = counts_by_length.get(lmax, 0)
    n_prev = counts_by_length.get(lmax - 2, 0)
    growth = n_last / n_prev if n_prev else 0.0
    if n_last == 0:
        return 0.0, 0.0
    first = term(lmax + 2, n_last * growth)
    nxt = term(lmax + 4, n_last * growth**2)
    if first == 0:
        return 0.0, 0.0
    ratio = nxt / first
    # consecutive-term ratios decrease in l, so the first ratio dominates the rest
    if ratio >= 1:
        return math.inf, ratio
    return first / (1 - ratio), ratio


def _catalog(lmax: int, catalog: ContourCatalog | None):
    if catalog is not None and catalog.lmax >= lmax:
        return catalog
    return enumerate_contours(lmax)


def peierls_lhs(beta: float, lmax: int, catalog: ContourCatalog | None = None) -> dict:
    """Truncated sum_{l>=4} l N_l exp(-2 beta l) with a geometric tail estimate."""
    cat = _catalog(lmax, catalog)
    counts = {l: len(cat.by_length.get(l, ())) for l in range(4, lmax + 1)}
    value = sum(l * n * math.exp(-2 * beta * l) for l, n in counts.items())
    tail, ratio = _growth_tail(counts, lmax, lambda l, n: l * n * math.exp(-2 * beta * l))
    return {
        "value": value,
        "tail_estimate": tail,
        "tail_ratio": ratio,
        "lmax": lmax,
        "conclusive": value + tail < 1 or value >= 1,
    }


def alpha_peierls(beta: float, lmax: int, catalog: ContourCatalog | None = None, strict: bool = True) -> DilutenessReport:
    """Upper bound on the Peierls coefficient with size function q = |gamma|.

    Contours meeting gamma share one of its at most |gamma| vertices, so alpha is
    bounded by the sum over shapes s of |V(s)| |s| exp(-2 beta |s|). The sum is
    truncated at lmax; the tail uses |V(s)| <= |s| and the empirical growth of
    N_l. With ``strict`` an inconclusive tail raises.
    """
    if lmax < 4:
        raise ValueError("lmax must be at least 4")
    cat = _catalog(lmax, catalog)
    value = 0.0
    for s in cat.shapes():
        if s.length <= lmax:
            value += len(s.vertices) * s.length * math.exp(-2 * beta * s.length)
    counts = {l: len(cat.by_length.get(l, ())) for l in range(4, lmax + 1)}
    tail, ratio = _growth_tail(counts, lmax, lambda l, n: l * l * n * math.exp(-2 * beta * l))
    bound = value + tail
    report = DilutenessReport(
        alpha=bound,
        size_function_id="length",
        method="closed-form-bound",
        upper_bound=True,
        truncation={"lmax": lmax, "partial": value, "tail_estimate": tail, "tail_ratio": ratio},
    )
    if strict and value < 1 <= bound:
        raise TruncationInconclusive(
            f"truncated bound {value:.6g} < 1 but tail estimate {tail:.3g} reaches 1; increase lmax or beta"
        )
    return report


def alpha_closed_forms(family: str, **params) -> float:
    """Closed-form coefficient for a built-in family (upper bound for Peierls)."""
    if family == "discrete-wr":
        return alpha_discrete_wr(params["lam_plus"], params["lam_minus"], params.get("k", 1), params.get("d", 2))
    if family == "continuum-wr":
        return alpha_continuum_wr(params["lam_plus"], params["lam_minus"], params["r"], params.get("d", 2))
    if family == "generalized-wr":
        return alpha_generalized_wr(
            params["lam_plus"], params["lam_minus"], params["m_h"], params["m_jp"], params["m_jm"], params.get("d", 2)
        )
    if family == "thin-rods":
        return alpha_thin_rods(params["lam"], params["half_length"], params.get("orientation", "uniform"))
    if family == "peierls":
        return alpha_peierls(params["beta"], params.get("lmax", 12), params.get("catalog")).alpha
    if family == "shrunken-wr":
        return alpha_wr_envelope(params["lam"], params["r0"], params.get("delta", 0.0), params.get("d", 2))
    raise NoClosedForm(f"no closed form for family {family!r}")


def closed_form_for(model: GasModel, use_envelope: bool = False) -> float:
    """Closed-form coefficient of a model instance, where one is known."""
    if isinstance(model, DiscreteWR) and not use_envelope:
        return alpha_discrete_wr(model.lam_plus, model.lam_minus, model.k, model.dim)
    if isinstance(model, ContinuumWR) and not use_envelope:
        return alpha_continuum_wr(model.lam_plus, model.lam_minus, model.r, model.dim)
    if isinstance(model, GeneralizedWR) and not use_envelope:
        return alpha_generalized_wr(
            model.lam_plus, model.lam_minus, model.h.reach, model.j_plus.reach, model.j_minus.reach, model.dim
        )
    if isinstance(model, ThinRods) and not model.lattice and not use_envelope:
        return alpha_thin_rods(model.lam, model.half_length, model.orientation)
    if isinstance(model, ShrunkenWR) and model.eps == 0:
        if use_envelope and model.delta > 0:
            return alpha_wr_envelope(model.lam, model.r0, model.delta, model.dim)
        return alpha_continuum_wr(model.lam, model.lam, model.r0, model.dim)
    if isinstance(model, Peierls) and not use_envelope:
        return alpha_peierls(model.beta, model.lmax, model.catalog, strict=False).alpha
    raise NoClosedForm(f"no closed form for {model!r}")


# ---------------------------------------------------------------------------
# Generic integrator


def _box_union_volume(boxes) -> float:
    """Lebesgue volume of a finite union of boxes by inclusion-exclusion."""
    total = 0.0
    for k in range(1, len(boxes) + 1):
        sign = 1.0 if k % 2 else -1.0
        for combo in combinations(boxes, k):
            lo = np.max([b[0] for b in combo], axis=0)
            hi = np.min([b[1] for b in combo], axis=0)
            total += sign * float(np.prod(np.clip(hi - lo, 0.0, None)))
    return total


def _flatten(region):
    if isinstance(region, Union):
        out = []
        for part in region.parts:
            out.extend(_flatten(part))
        return out
    return [region]


def _continuum_box_mass(region, marks: DiscreteMarks) -> float:
    """nu-mass of a union of boxes under Lebesgue x discrete marks."""
    parts = _flatten(region)
    if not all(isinstance(p, Box) for p in parts):
        raise NoClosedForm(f"cannot integrate {region!r}")
    total = 0.0
    for m, w in marks.weights.items():
        boxes = [(np.array(p.lo, float), np.array(p.hi, float)) for p in parts if p.marks is None or m in p.marks]
        if boxes and w:
            total += w * _box_union_volume(boxes)
    return total


def sin_integral(gamma: float, orientation) -> float:
    """int |sin(gamma - t)| drho(t) by quadrature (uniform) or atom sum."""
    if orientation == "uniform":
        kink = gamma % math.pi
        val, _ = quad(lambda t: abs(math.sin(gamma - t)), 0.0, math.pi, points=[kink], epsabs=1e-13, epsrel=1e-13, limit=200)
        return val / math.pi
    return sum(p * abs(math.sin(gamma - t)) for t, p in orientation.items())


def _rods_overlap_area(model: ThinRods, gamma: float, other: float) -> float:
    """Area of centres y whose rod with angle ``other`` meets the rod (0, gamma)."""
    a1, a2 = rod_endpoints(Particle((0.0, 0.0), gamma), model.half_length)
    b1, b2 = rod_endpoints(Particle((0.0, 0.0), other), model.half_length)
    pts = [(p[0] - q[0], p[1] - q[1]) for p in (a1, a2) for q in (b1, b2)]
    return MultiPoint(pts).convex_hull.area


def _rods_mass(model: ThinRods, gamma: float) -> float:
    if model.orientation == "uniform":
        kink = gamma % math.pi
        val, _ = quad(
            lambda t: _rods_overlap_area(model, gamma, t), 0.0, math.pi, points=[kink], epsabs=1e-13, epsrel=1e-13, limit=200
        )
        return model.lam * val / math.pi
    return sum(model.lam * p * _rods_overlap_area(model, gamma, float(t)) for t, p in model.orientation.items())


def _sup_over_angle(fn, grid: int = 721) -> float:
    """sup of fn on [0, pi): grid search then bounded Brent refinement around the best cells."""
    gs = np.linspace(0.0, math.pi, grid, endpoint=False)
    vals = np.array([fn(float(g)) for g in gs])
    best = float(vals.max())
    step = math.pi / grid
    for i in np.argsort(vals)[-3:]:
        g = float(gs[i])
        res = minimize_scalar(lambda x: -fn(x), bounds=(g - step, g + step), method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def _peierls_generic(model: Peierls, lmax: int | None = None) -> float:
    """Exact sup over catalog contours of (1/|g|) sum over contours meeting g of |g'| exp(-2 beta |g'|).

    Placements of shape s' meeting g are the translations in V(g) - V(s').
    """
    cat = model.catalog
    lmax = cat.lmax if lmax is None else lmax
    shapes = [s for s in cat.shapes() if s.length <= lmax]
    best = 0.0
    for g in shapes:
        total = 0.0
        for s in shapes:
            shifts = {(a[0] - b[0], a[1] - b[1]) for a in g.vertices for b in s.vertices}
            total += len(shifts) * s.length * math.exp(-2 * model.beta * s.length)
        best = max(best, total / g.length)
    return best


def diluteness_coefficient(model: GasModel, q=None, use_envelope: bool = False, lmax: int | None = None) -> DilutenessReport:
    """Generic evaluation of the q-diluteness coefficient by integrating nu over I (or V).

    ``q`` is None or "constant" for a constant size function and "length" for
    contours (q = |gamma|). Contour models are evaluated over their finite
    catalog and the result is the truncated sup.
    """
    relation = "envelope" if use_envelope else "impact"
    q_id = "constant" if q in (None, "constant") else q
    factor = math.exp(-model.delta_E)
    intensity = model.intensity

    if isinstance(model, Peierls):
        if q_id != "length":
            raise NoClosedForm("contour coefficients use q = |gamma|")
        alpha = _peierls_generic(model, lmax)
        return DilutenessReport(factor * alpha, "length", use_envelope, "generic-catalog", False, {"lmax": lmax or model.lmax})
    if q_id != "constant":
        raise NoClosedForm(f"size function {q!r} not supported for {model.family}")
    if isinstance(model, ThinRods) and not model.lattice and not use_envelope:
        alpha = _sup_over_angle(lambda g: _rods_mass(model, g))
        return DilutenessReport(factor * alpha, q_id, use_envelope, "generic-quadrature")

    marks = intensity.marks
    if not isinstance(marks, DiscreteMarks):
        raise NoClosedForm(f"no generic integrator for {model!r}")
    best = 0.0
    origin = tuple(0 for _ in range(model.dim)) if isinstance(intensity, AtomicLattice) and intensity.spacing is None else tuple(
        0.0 for _ in range(model.dim)
    )
    for m in marks.marks:
        region = model.relation_region(Particle(origin, m), relation)
        if isinstance(intensity, AtomicLattice):
            mass = intensity.mass(region)
        elif isinstance(intensity, UniformContinuum):
            mass = _continuum_box_mass(region, marks)
        else:
            raise NoClosedForm(f"no generic integrator for {model!r}")
        best = max(best, mass)
    return DilutenessReport(factor * best, q_id, use_envelope, "generic-integrator")
