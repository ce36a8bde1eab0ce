"""Named factories for sequences, schemes, systems, and integer sets.

Everything the CLI can reference by name lives here.  Factories take the
parameter dict straight from the config file; adding an entry to one of the
tables below makes it addressable from configs and visible in `avglab list`.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import CatalogError
from .ergodic import ArcUnion, CircleRotation, CyclicSet, CyclicSystem
from .patterns import (
    IntegerSet,
    blocks_set,
    congruence_set,
    random_set,
    set_from_file,
    squares_set,
)
from .sequences import Sequence
from .weights import WeightScheme, builtin_scheme, exp_pow_scheme, power_scheme

TWO_PI = 2.0 * math.pi


# --- sequences -------------------------------------------------------------

def _constant(params):
    c = params.get("value", 1.0)
    if isinstance(c, (list, tuple)):
        c = complex(c[0], c[1])
    return Sequence(lambda n: c, name=f"constant({c})", bound=abs(c))


def _exp_log_phase(params):
    return Sequence(
        lambda n: complex(math.cos(TWO_PI * math.log(n)), math.sin(TWO_PI * math.log(n))),
        name="exp_log_phase",
        bound=1.0,
        vector_fn=lambda ns: np.exp(1j * TWO_PI * np.log(ns.astype(float))),
    )


def _alternating(params):
    return Sequence(lambda n: float((-1) ** n), name="alternating", bound=1.0,
                    vector_fn=lambda ns: np.where(ns % 2 == 0, 1.0, -1.0))


def _indicator_even(params):
    return Sequence(lambda n: float(n % 2 == 0), name="indicator_even", bound=1.0,
                    vector_fn=lambda ns: (ns % 2 == 0).astype(float))


def _power(params):
    c = float(params.get("exponent", 1.5))
    return Sequence(lambda n: float(n) ** c, name=f"power({c})",
                    vector_fn=lambda ns: ns.astype(float) ** c)


def _log_seq(params):
    return Sequence(lambda n: math.log(n), name="log",
                    vector_fn=lambda ns: np.log(ns.astype(float)))


def _inverse(params):
    return Sequence(lambda n: 1.0 / n, name="inverse", bound=1.0,
                    vector_fn=lambda ns: 1.0 / ns.astype(float))


def _pm1(params):
    seed = int(params.get("seed", 0))
    block = 1 << 14
    blocks: list[np.ndarray] = []
    rng = np.random.default_rng(seed)

    def ensure(n):
        while len(blocks) * block < n:
            blocks.append(rng.integers(0, 2, size=block) * 2.0 - 1.0)

    def fn(n):
        ensure(n)
        return float(blocks[(n - 1) // block][(n - 1) % block])

    return Sequence(fn, name=f"pm1(seed={seed})", bound=1.0)


SEQUENCES = {
    "constant": _constant,
    "exp_log_phase": _exp_log_phase,
    "alternating": _alternating,
    "indicator_even": _indicator_even,
    "power": _power,
    "log": _log_seq,
    "inverse": _inverse,
    "pm1": _pm1,
}


def make_sequence(spec) -> Sequence:
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name")
    if name not in SEQUENCES:
        raise CatalogError(f"unknown sequence {name!r}")
    return SEQUENCES[name](spec)


# --- schemes ---------------------------------------------------------------

def make_scheme(spec) -> WeightScheme:
    if isinstance(spec, str):
        return builtin_scheme(spec)
    name = spec.get("name")
    if name == "exp_pow":
        return exp_pow_scheme(float(spec.get("a", 0.5)), float(spec.get("c", 1.0)))
    if name == "power":
        return power_scheme(float(spec.get("c", 1.0)))
    return builtin_scheme(name)


# --- systems and measurable sets -------------------------------------------

def make_system(spec):
    kind = spec.get("kind")
    if kind == "rotation":
        return CircleRotation(float(spec.get("alpha", math.sqrt(2) - 1)))
    if kind == "cyclic":
        return CyclicSystem(int(spec["q"]), int(spec.get("step", 1)))
    raise CatalogError(f"unknown system kind {kind!r}")


def make_measurable_set(spec, system):
    if isinstance(system, CircleRotation):
        arcs = spec.get("arcs", [[0.0, 0.25]])
        return ArcUnion.of(*[tuple(a) for a in arcs])
    if isinstance(system, CyclicSystem):
        if "range" in spec:
            lo, hi = spec["range"]
            return CyclicSet.of(range(lo, hi + 1), system.q)
        return CyclicSet.of(spec.get("elements", [0]), system.q)
    raise CatalogError("unsupported system for measurable set")


# --- integer sets for pattern scans ----------------------------------------

def make_integer_set(spec, n_max: int) -> IntegerSet:
    name = spec.get("name")
    if name == "blocks":
        return blocks_set(n_max)
    if name == "congruence":
        return congruence_set(n_max, int(spec["q"]), spec.get("residues", [0]))
    if name == "random":
        return random_set(n_max, float(spec.get("density", 0.5)),
                          int(spec.get("seed", 0)))
    if name == "squares":
        return squares_set(n_max)
    if name == "file":
        return set_from_file(spec["path"], n_max)
    if name == "full":
        return IntegerSet.full(n_max)
    raise CatalogError(f"unknown integer set {name!r}")


SET_GENERATORS = ["blocks", "congruence", "random", "squares", "file", "full"]
SYSTEM_KINDS = ["rotation", "cyclic"]
