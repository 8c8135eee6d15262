"""Count-sketch plans for compressing feature vectors.

A plan hashes each of the d input coordinates to one of d' buckets and
flips its sign with probability 1/2:

    sk(x)_j = sum over i with h_i = j of s_i * x_i

Inner products are preserved in expectation over plans. Plans are fully
determined by (d, d', seed); serialized plans carry only those plus the
generator name, and h, s are regenerated on load. The generator is pinned
to a counter-based algorithm so plans reproduce across platforms: buckets
are drawn first as integers uniform on [1, d'], then signs from uniform
bits, both from one Philox stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError

RNG_NAME = "philox4x64"


@dataclass(frozen=True)
class SketchPlan:
    """Bucket and sign assignments for one sketch projection.

    buckets holds 1-based bucket indices. seed is None only for hand-built
    plans, which cannot be serialized.
    """

    input_dim: int
    output_dim: int
    buckets: np.ndarray
    signs: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise InputError("plan dimensions must be positive")
        if self.output_dim > self.input_dim:
            raise InputError(
                f"output dim {self.output_dim} exceeds input dim {self.input_dim}"
            )
        b = np.array(self.buckets, dtype=np.int64)
        s = np.array(self.signs, dtype=np.float64)
        if b.shape != (self.input_dim,) or s.shape != (self.input_dim,):
            raise InputError("buckets and signs must both have length d")
        if b.min() < 1 or b.max() > self.output_dim:
            raise InputError("bucket indices must lie in 1..d'")
        if not np.all(np.isin(s, (-1.0, 1.0))):
            raise InputError("signs must be +1 or -1")
        b.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "buckets", b)
        object.__setattr__(self, "signs", s)


def make_plan(d: int, d_prime: int, seed: int) -> SketchPlan:
    """Draw a plan from the seeded counter-based generator."""
    if not isinstance(d, (int, np.integer)) or not isinstance(d_prime, (int, np.integer)):
        raise InputError("dimensions must be integers")
    if d < 1 or d_prime < 1:
        raise InputError("dimensions must be positive")
    if d_prime > d:
        raise InputError(f"output dim {d_prime} exceeds input dim {d}")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InputError(f"seed must be a nonnegative integer, got {seed}")
    gen = np.random.Generator(np.random.Philox(seed))
    buckets = gen.integers(1, d_prime + 1, size=d)
    signs = np.where(gen.integers(0, 2, size=d) == 1, 1.0, -1.0)
    return SketchPlan(int(d), int(d_prime), buckets, signs, int(seed))


def apply(plan: SketchPlan, x) -> np.ndarray:
    """Project a length-d vector to length d'."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (plan.input_dim,):
        raise InputError(
            f"vector length {x.shape} does not match plan input dim {plan.input_dim}"
        )
    out = np.zeros(plan.output_dim)
    np.add.at(out, plan.buckets - 1, plan.signs * x)
    return out


def plan_json(plan: SketchPlan) -> str:
    if plan.seed is None:
        raise InputError("hand-built plans have no seed and cannot be serialized")
    doc = {
        "d": plan.input_dim,
        "d_prime": plan.output_dim,
        "seed": plan.seed,
        "rng_name": RNG_NAME,
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def plan_from_json(text: str) -> SketchPlan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"plan is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("plan JSON must be an object")
    missing = {"d", "d_prime", "seed", "rng_name"} - set(doc)
    if missing:
        raise InputError(f"plan JSON is missing keys: {sorted(missing)}")
    if doc["rng_name"] != RNG_NAME:
        raise InputError(
            f"plan was drawn with generator {doc['rng_name']!r}; "
            f"this build supports {RNG_NAME!r}"
        )
    for key in ("d", "d_prime", "seed"):
        if not isinstance(doc[key], int):
            raise InputError(f"plan key {key!r} must be an integer")
    return make_plan(doc["d"], doc["d_prime"], doc["seed"])
