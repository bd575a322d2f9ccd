"""Batch driver: ``python -m dilutegas <command> ...``.

Commands: coeff, sample, couple, validate, contours, dynamics. Every output
file gets one companion manifest ``<file>.manifest`` (key = value text). Exit
codes: 0 success, 1 usage or spec error, 2 clan cap exceeded, 3 strict
diluteness failure. Replica r uses seed derive_seed(seed, r).
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config_space import Box, Particle, ParticleConfiguration, encode_mark, write_configurations
from .contours import enumerate_contours
from .coupling import coupled_sample, identity_run, stabilization_epsilon, wr_discretization_run, wr_fugacity_run
from .diluteness import closed_form_for, diluteness_coefficient, peierls_lhs
from .errors import ClanCapExceeded, DiluteGasError, NoClosedForm, SpecError
from .ffg_sampler import DEFAULT_CAP, finite_volume_sample, forward_dynamics, perfect_sample_details
from .free_process import derive_seed
from .models import Peierls
from .specfile import build_model, load_spec

__all__ = ["main", "write_manifest", "read_manifest", "parse_window", "replica_samples"]

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_STRICT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _real(v) -> str:
    return format(v, ".16e") if isinstance(v, float) else str(v)


def write_manifest(path, fields: dict) -> Path:
    out = Path(str(path) + ".manifest")
    with open(out, "w") as fp:
        for k, v in fields.items():
            fp.write(f"{k} = {_real(v)}\n")
    return out


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def parse_window(text: str, lattice: bool) -> Box:
    """``"x0,y0:x1,y1"``: a closed box with corners lo and hi."""
    try:
        lo, hi = text.split(":")
        conv = int if lattice else float
        return Box(tuple(conv(v) for v in lo.split(",")), tuple(conv(v) for v in hi.split(",")), lattice=lattice)
    except ValueError as exc:
        raise UsageError(f"bad window {text!r}; expected x0,y0:x1,y1") from exc


def _histogram(values) -> str:
    return " ".join(f"{k}:{v}" for k, v in sorted(Counter(values).items()))


def _alpha_fields(model) -> dict:
    try:
        report = diluteness_coefficient(model, "length" if isinstance(model, Peierls) else None)
        return {"alpha": report.alpha, "alpha_method": report.method, "verdict": report.verdict}
    except NoClosedForm:
        return {"alpha": "n/a", "alpha_method": "none", "verdict": "unknown"}


def _base_manifest(args, model, seed) -> dict:
    return {
        "tool_version": __version__,
        "command": args.command,
        "spec": str(getattr(args, "spec", "")),
        "seed": seed,
        "model_hash": model.model_hash() if model is not None else "n/a",
        "cell_size": getattr(model, "intensity", None) and getattr(model.intensity, "cell_size", "n/a"),
        "lmax": getattr(model, "lmax", "n/a"),
        "cap": getattr(args, "cap", "n/a"),
    }


# -- replicas ------------------------------------------------------------------


def _one_replica(spec: dict, window_text: str, seed: int, r: int, cap: int, finite: bool):
    model = build_model(spec)
    window = parse_window(window_text, model.lattice)
    s = derive_seed(seed, r)
    if finite:
        res = finite_volume_sample(model, window, None, s, cap, details=True)
    else:
        res = perfect_sample_details(model, window, s, cap)
    return res.config, res.clan.size, res.clan.depth()


def replica_samples(spec: dict, window_text: str, replicas: int, seed: int, cap: int = DEFAULT_CAP, finite: bool = False, workers: int = 1) -> list:
    """Per-replica (config, clan size, clan depth), ordered by replica index."""
    jobs = [(spec, window_text, seed, r, cap, finite) for r in range(replicas)]
    if workers > 1 and replicas > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_one_replica, *zip(*jobs)))
    return [_one_replica(*j) for j in jobs]


# -- commands ------------------------------------------------------------------


def cmd_coeff(args) -> int:
    model = build_model(load_spec(args.spec))
    q = "length" if isinstance(model, Peierls) else None
    try:
        closed = closed_form_for(model, args.envelope)
    except NoClosedForm:
        closed = None
    generic = diluteness_coefficient(model, q, args.envelope)
    alpha = closed if closed is not None else generic.alpha
    print(f"family        {model.family}")
    print(f"closed_form   {_real(closed) if closed is not None else 'n/a'}")
    print(f"generic       {_real(generic.alpha)}")
    verdict = "heavily diluted" if alpha < 1 else "not heavily diluted"
    print(f"verdict       {verdict}")
    if args.strict and alpha >= 1:
        return EXIT_STRICT
    return EXIT_OK


def cmd_sample(args) -> int:
    spec = load_spec(args.spec)
    model = build_model(spec)
    parse_window(args.window, model.lattice)
    t0 = time.perf_counter()
    results = replica_samples(spec, args.window, args.replicas, args.seed, args.cap, args.finite_volume, args.workers)
    with open(args.out, "w") as fp:
        write_configurations(fp, [(r, 0.0, c) for r, (c, _, _) in enumerate(results)])
    fields = _base_manifest(args, model, args.seed)
    fields.update(_alpha_fields(model))
    fields.update(
        {
            "window": args.window,
            "replicas": args.replicas,
            "mode": "finite-volume" if args.finite_volume else "infinite-volume",
            "clan_size_histogram": _histogram(s for _, s, _ in results),
            "clan_depth_histogram": _histogram(d for _, _, d in results),
            "eps_grid": "",
            "wall_clock": time.perf_counter() - t0,
        }
    )
    write_manifest(args.out, fields)
    return EXIT_OK


def _coupled_run(args, spec, model):
    grid = [float(v) for v in args.eps_grid.split(",")] if args.eps_grid else None
    if args.family == "identity":
        return identity_run(model, grid or (0.5, 0.25, 0.0))
    if args.family == "wr-fugacity":
        if spec["family"] != "discrete-wr":
            raise UsageError("wr-fugacity needs a discrete-wr spec")
        lam = spec.get("lam", spec.get("lam_plus"))
        return wr_fugacity_run(lam, spec.get("k", 1), spec.get("d", 2), grid or (0.2, 0.1, 0.05, 0.02, 0.01, 0.0))
    if args.family == "wr-discretization":
        if spec["family"] not in ("shrunken-wr", "continuum-wr"):
            raise UsageError("wr-discretization needs a shrunken-wr or continuum-wr spec")
        lam = spec.get("lam", spec.get("lam_plus"))
        r0 = spec.get("r0", spec.get("r"))
        return wr_discretization_run(lam, r0, spec.get("d", 2), grid, spec.get("cell_size", 1.0))
    raise UsageError(f"unknown family {args.family!r}")


def cmd_couple(args) -> int:
    spec = load_spec(args.spec)
    model = build_model(spec)
    run = _coupled_run(args, spec, model)
    window = parse_window(args.window, run.base.lattice)
    t0 = time.perf_counter()
    records, report, sizes, flagged = [], [], [], 0
    for r in range(args.replicas):
        cs = coupled_sample(run, window, derive_seed(args.seed, r), args.cap)
        for eps in run.grid:
            records.append((r, eps, cs.outputs[eps]))
        star = stabilization_epsilon(cs)
        report.append((r, "none-on-grid" if star is None else _real(star), int(cs.flags.get("negligible", False))))
        sizes.append(cs.clan.size)
        flagged += bool(cs.flags.get("negligible"))
    with open(args.out, "w") as fp:
        write_configurations(fp, records)
    fields = _base_manifest(args, run.base, args.seed)
    fields.update(_alpha_fields(run.base))
    fields.update(
        {
            "family": args.family,
            "window": args.window,
            "replicas": args.replicas,
            "eps_grid": ",".join(_real(e) for e in run.grid),
            "clan_size_histogram": _histogram(sizes),
            "negligible_flagged": flagged,
            "wall_clock": time.perf_counter() - t0,
        }
    )
    write_manifest(args.out, fields)
    if args.report:
        with open(args.report, "w") as fp:
            w = csv.writer(fp, lineterminator="\n")
            w.writerow(["replica", "eps_star", "negligible"])
            w.writerows(report)
        write_manifest(args.report, fields)
    return EXIT_OK


def cmd_validate(args) -> int:
    from . import oracle
    from .models import DiscreteWR
    from .config_space import SiteSet

    if args.suite == "oracle-wr":
        model = DiscreteWR(0.05, 0.05, 1, 2)
        volume = SiteSet([(0, 0), (0, 1), (1, 0), (1, 1)])
        exact = oracle.enumerate_gibbs(model, volume)
        samples = [finite_volume_sample(model, volume, None, derive_seed(args.seed, r)) for r in range(args.samples)]
        tv = oracle.tv_distance(samples, exact)
        empty = sum(c.is_empty() for c in samples) / max(1, len(samples))
        print(f"tv            {_real(tv)}")
        print(f"p_empty       {_real(empty)}")
        print(f"p_empty_exact {_real(1 / (2 * 1.05**4 - 1))}")
        return EXIT_OK if tv <= 0.01 else EXIT_STRICT
    if args.suite == "contour-identity":
        worst = max(oracle.check_contour_identity(3, b) for b in (0.5, 0.8, 1.2))
        print(f"discrepancy   {_real(worst)}")
        return EXIT_OK if worst <= 1e-10 else EXIT_STRICT
    raise UsageError(f"unknown suite {args.suite!r}")


def cmd_contours(args) -> int:
    if args.lmax < 4 or args.lmax % 2:
        raise UsageError("lmax must be even and at least 4")
    catalog = enumerate_contours(args.lmax)
    print("length count")
    for l in range(4, args.lmax + 1, 2):
        print(f"{l} {len(catalog.by_length.get(l, ()))}")
    if args.beta is not None:
        lhs = peierls_lhs(args.beta, args.lmax, catalog)
        print(f"peierls_sum   {_real(lhs['value'])}")
        print(f"tail_estimate {_real(lhs['tail_estimate'])}")
        print(f"conclusive    {lhs['conclusive']}")
    return EXIT_OK


def cmd_dynamics(args) -> int:
    spec = load_spec(args.spec)
    model = build_model(spec)
    volume = parse_window(args.volume, model.lattice)
    t0 = time.perf_counter()
    initial = ParticleConfiguration(window=volume)
    if args.start == "exact":
        initial = finite_volume_sample(model, volume, None, derive_seed(args.seed, "initial"), args.cap)
    traj = forward_dynamics(model, volume, None, initial, args.horizon, args.seed)
    with open(args.out, "w") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["time", "kind", "coords", "mark"])
        for p, m in initial.entries:
            for _ in range(m):
                w.writerow([_real(0.0), "initial", " ".join(_real(v) for v in p.location), encode_mark(p.mark)])
        for ev in traj.events:
            w.writerow([_real(ev.time), ev.kind, " ".join(_real(v) for v in ev.particle.location), encode_mark(ev.particle.mark)])
    fields = _base_manifest(args, model, args.seed)
    fields.update({"volume": args.volume, "horizon": args.horizon, "events": len(traj.events), "wall_clock": time.perf_counter() - t0})
    write_manifest(args.out, fields)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="python -m dilutegas", description="Perfect simulation of diluted gas models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("coeff", help="diluteness coefficient of a spec")
    c.add_argument("spec")
    c.add_argument("--strict", action="store_true")
    c.add_argument("--envelope", action="store_true")

    s = sub.add_parser("sample", help="perfect samples on a window")
    s.add_argument("spec")
    s.add_argument("--window", required=True)
    s.add_argument("--replicas", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    s.add_argument("--finite-volume", action="store_true", help="sample the kernel on the window with empty boundary")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)

    k = sub.add_parser("couple", help="coupled samples along an epsilon grid")
    k.add_argument("spec")
    k.add_argument("--family", required=True, choices=["identity", "wr-fugacity", "wr-discretization"])
    k.add_argument("--eps-grid", default=None)
    k.add_argument("--window", required=True)
    k.add_argument("--replicas", type=int, default=1)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--cap", type=int, default=DEFAULT_CAP)
    k.add_argument("--out", required=True)
    k.add_argument("--report", default=None)

    v = sub.add_parser("validate", help="run a validation suite")
    v.add_argument("suite", choices=["oracle-wr", "contour-identity"])
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("contours", help="contour counts and the Peierls sum")
    t.add_argument("--lmax", type=int, default=8)
    t.add_argument("--beta", type=float, default=None)

    d = sub.add_parser("dynamics", help="forward birth and death dynamics in a volume")
    d.add_argument("spec")
    d.add_argument("--volume", required=True)
    d.add_argument("--horizon", type=float, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--cap", type=int, default=DEFAULT_CAP)
    d.add_argument("--start", choices=["empty", "exact"], default="empty")
    d.add_argument("--out", required=True)
    return p


COMMANDS = {
    "coeff": cmd_coeff,
    "sample": cmd_sample,
    "couple": cmd_couple,
    "validate": cmd_validate,
    "contours": cmd_contours,
    "dynamics": cmd_dynamics,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        return COMMANDS[args.command](args)
    except (UsageError, SpecError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClanCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DiluteGasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
