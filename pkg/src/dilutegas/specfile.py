"""Model specification files.

A spec is plain ``key = value`` text; ``#`` starts a comment and blank lines
are ignored. Unknown keys are rejected. Recognised keys:

    family        discrete-wr | continuum-wr | shrunken-wr | generalized-wr | thin-rods | peierls
    d             dimension (default 2)
    lam           common fugacity (sets both types for WR families)
    lam_plus      fugacity of + particles
    lam_minus     fugacity of - particles
    k             lattice exclusion radius (discrete-wr)
    r             exclusion radius (continuum-wr)
    r0            opposite-type radius (shrunken-wr)
    eps           lattice spacing of the shrunken model; 0 is the continuum
    delta         envelope inflation (shrunken-wr, thin-rods)
    h, j_plus, j_minus
                  step functions as "b1:v1, b2:v2, ..." (value v_i on (b_{i-1}, b_i]); "inf" for exclusion
    half_length   rod half length l
    orientation   "uniform" or "angle:prob, angle:prob, ..."
    lattice       true | false (rods centred on Z^2)
    cell_size     side of the continuum partition cells
    beta          inverse temperature (peierls)
    lmax          longest contour kept (peierls)
    delta_E       override of the uniform leap bound
"""
from __future__ import annotations

import math
from pathlib import Path

from .errors import SpecError
from .models import ContinuumWR, DiscreteWR, GasModel, GeneralizedWR, Peierls, ShrunkenWR, StepFunction, ThinRods

__all__ = ["KEYS", "parse_spec", "load_spec", "build_model", "format_spec"]

KEYS = {
    "family": str,
    "d": int,
    "lam": float,
    "lam_plus": float,
    "lam_minus": float,
    "k": int,
    "r": float,
    "r0": float,
    "eps": float,
    "delta": float,
    "h": str,
    "j_plus": str,
    "j_minus": str,
    "half_length": float,
    "orientation": str,
    "lattice": str,
    "cell_size": float,
    "beta": float,
    "lmax": int,
    "delta_E": float,
}

FAMILIES = ("discrete-wr", "continuum-wr", "shrunken-wr", "generalized-wr", "thin-rods", "peierls")


def parse_spec(text: str) -> dict:
    spec: dict = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise SpecError(f"line {n}: unknown key {key!r}")
        if key in spec:
            raise SpecError(f"line {n}: duplicate key {key!r}")
        try:
            spec[key] = KEYS[key](value)
        except ValueError as exc:
            raise SpecError(f"line {n}: bad value for {key}: {value!r}") from exc
    if spec.get("family") not in FAMILIES:
        raise SpecError(f"family must be one of {', '.join(FAMILIES)}")
    return spec


def load_spec(path) -> dict:
    return parse_spec(Path(path).read_text())


def format_spec(spec: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in spec.items())


def _pairs(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        a, _, b = item.partition(":")
        if not _:
            raise SpecError(f"expected a:b pairs, got {item!r}")
        out.append((float(a), math.inf if b.strip() == "inf" else float(b)))
    return out


def _step(text: str | None) -> StepFunction:
    if text is None or text.strip() in ("", "0"):
        return StepFunction.zero()
    pairs = _pairs(text)
    return StepFunction([b for b, _ in pairs], [v for _, v in pairs])


def _flag(text: str | None) -> bool:
    if text is None:
        return False
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise SpecError(f"lattice must be true or false, got {text!r}")


def _need(spec: dict, *keys):
    missing = [k for k in keys if k not in spec]
    if missing:
        raise SpecError(f"{spec['family']} needs {', '.join(missing)}")


def _fugacities(spec: dict) -> tuple:
    lam = spec.get("lam")
    lp = spec.get("lam_plus", lam)
    lm = spec.get("lam_minus", lam)
    if lp is None or lm is None:
        raise SpecError("give lam or both lam_plus and lam_minus")
    return lp, lm


def build_model(spec: dict) -> GasModel:
    family = spec["family"]
    d = spec.get("d", 2)
    cell = spec.get("cell_size", 1.0)
    if family == "discrete-wr":
        model = DiscreteWR(*_fugacities(spec), spec.get("k", 1), d)
    elif family == "continuum-wr":
        _need(spec, "r")
        model = ContinuumWR(*_fugacities(spec), spec["r"], d, cell)
    elif family == "shrunken-wr":
        _need(spec, "lam", "r0")
        model = ShrunkenWR(spec["lam"], spec["r0"], d, spec.get("eps", 0.0), spec.get("delta", 0.0), cell)
    elif family == "generalized-wr":
        model = GeneralizedWR(
            *_fugacities(spec), _step(spec.get("h")), _step(spec.get("j_plus")), _step(spec.get("j_minus")), d, cell
        )
    elif family == "thin-rods":
        _need(spec, "lam", "half_length")
        text = spec.get("orientation", "uniform")
        orientation = "uniform" if text == "uniform" else dict(_pairs(text))
        model = ThinRods(spec["lam"], spec["half_length"], orientation, _flag(spec.get("lattice")), cell, spec.get("delta", 0.0))
    else:
        _need(spec, "beta")
        model = Peierls(spec["beta"], spec.get("lmax", 8))
    if "delta_E" in spec:
        model.delta_E = spec["delta_E"]
    return model
