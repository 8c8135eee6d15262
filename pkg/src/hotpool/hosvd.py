"""Shared-factor HOSVD of super-symmetric tensors and core normalization.

A super-symmetric order-r tensor T factors as T = G x_1 U x_2 U ... x_r U
with a single orthonormal factor U (d x d') and core G (d' x ... x d').
U comes from the eigenvectors of the mode-1 Gram matrix M1 M1^T, truncated
at the rank cutoff d * eps * lambda_max.

Core coefficients of a pooled tensor live in [-kappa, kappa] with
kappa = (1/sqrt(r))^r, which calibrates the signed saturation map
detector_likelihood and apply_epn_core.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .spectral import PnSpec, sym_eig
from .tensor import DenseTensor, FeatureSet, check_supersymmetric, inner, unfold

# soft ceiling on |coefficient| - kappa before clamping warns
KAPPA_EXCESS_TOL = 1e-9

# unit-norm tolerance for direction vectors
_UNIT_TOL = 1e-8


def kappa_for_order(r: int) -> float:
    """Peak core magnitude (1/sqrt(r))^r for unit-norm inputs."""
    if r < 2:
        raise InputError(f"order must be >= 2, got {r}")
    return float(r ** (-r / 2.0))


@dataclass(frozen=True)
class HosvdFactors:
    """Core tensor, shared factor matrix, and the order's kappa."""

    core: np.ndarray
    factor: np.ndarray
    kappa: float

    def __post_init__(self):
        for name in ("core", "factor"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def order(self) -> int:
        return self.core.ndim

    @property
    def rank(self) -> int:
        return self.factor.shape[1]


def _mode_contract(a: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Contract axis `axis` of a with the first axis of mat."""
    out = np.tensordot(a, mat, axes=([axis], [0]))
    return np.moveaxis(out, -1, axis)


def hosvd_supersym(t: DenseTensor) -> HosvdFactors:
    """Factor a super-symmetric tensor with one shared orthonormal basis."""
    if t.order < 2:
        raise InputError("hosvd needs order >= 2")
    if not (t.supersymmetric or check_supersymmetric(t)):
        raise DomainError("tensor is not super-symmetric")
    m1 = unfold(t, 1)
    gram = m1 @ m1.T
    eig = sym_eig(gram)
    d = t.dims[0]
    top = max(float(eig.values[0]), 0.0)
    rcut = d * np.finfo(np.float64).eps * top
    dprime = int(np.sum(eig.values > rcut))
    u = eig.vectors[:, :dprime]
    core = t.data
    for axis in range(t.order):
        core = _mode_contract(core, u, axis)
    return HosvdFactors(core, u, kappa_for_order(t.order))


def reconstruct(f: HosvdFactors) -> DenseTensor:
    """Map a core back to the ambient space through the shared factor."""
    if f.factor.ndim != 2:
        raise InputError("factor must be a matrix")
    d, dprime = f.factor.shape
    if any(s != dprime for s in f.core.shape):
        raise InputError(
            f"core dims {f.core.shape} do not match factor rank {dprime}"
        )
    if dprime == 0:
        return DenseTensor(np.zeros((d,) * f.order), supersymmetric=True)
    out = f.core
    for axis in range(f.order):
        out = _mode_contract(out, f.factor.T, axis)
    return DenseTensor(out, supersymmetric=True)


def _unit(vec, name: str) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    if v.ndim != 1:
        raise InputError(f"{name} must be a vector")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise DomainError(f"{name} must have unit norm")
    return v


def core_coefficient(features: FeatureSet, u, v, w) -> float:
    """Third-order pooled coefficient along directions u, v, w.

    Computed from the raw vectors: (1/N) sum_n <phi_n,u><phi_n,v><phi_n,w>.
    Weights and the stored mean do not enter here.
    """
    u = _unit(u, "u")
    v = _unit(v, "v")
    w = _unit(w, "w")
    phi = features.vectors
    if phi.shape[1] != u.shape[0] or v.shape[0] != u.shape[0] or w.shape[0] != u.shape[0]:
        raise InputError("direction vectors must match the feature dimension")
    return float(np.mean((phi @ u) * (phi @ v) * (phi @ w)))


def detector_likelihood(lam: float, kappa: float, n: float) -> float:
    """Signed saturation sgn(lam) * (1 - (1 - |lam|/kappa)^n).

    |lam| is clamped to kappa; an excess beyond KAPPA_EXCESS_TOL triggers a
    warning because it means the coefficient was not produced by unit-norm
    directions.
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not n >= 1:
        raise DomainError(f"exponent must be >= 1, got {n}")
    lam = float(lam)
    mag = abs(lam)
    if mag > kappa:
        if mag - kappa > KAPPA_EXCESS_TOL:
            warnings.warn(
                f"coefficient magnitude {mag:.6g} exceeds kappa {kappa:.6g}; clamped",
                RuntimeWarning,
                stacklevel=2,
            )
        mag = kappa
    return float(np.sign(lam) * (1.0 - (1.0 - mag / kappa) ** n))


def apply_epn_core(f: HosvdFactors, spec: PnSpec) -> HosvdFactors:
    """Normalize core coefficients with an odd (sign-preserving) map.

    maxexp uses the signed saturation sgn(x)*(1-(1-|x|/kappa)^eta) and
    requires |coefficients| <= kappa up to KAPPA_EXCESS_TOL. sigme applies
    tanh(eta' x / (2 kappa)) and needs no clamping. Even maps would erase
    coefficient signs, so other kinds are rejected.
    """
    if spec.kind not in ("maxexp", "sigme"):
        raise DomainError(
            f"core normalization needs an odd operator (maxexp or sigme), got {spec.kind}"
        )
    x = f.core / f.kappa
    if spec.kind == "maxexp":
        excess = float(np.max(np.abs(f.core))) - f.kappa if f.core.size else 0.0
        if excess > KAPPA_EXCESS_TOL:
            raise DomainError(
                f"core coefficient exceeds kappa by {excess:.3e}; "
                "inputs were not unit normalized"
            )
        x = np.clip(x, -1.0, 1.0)
        out = np.sign(x) * (1.0 - (1.0 - np.abs(x)) ** spec.param)
    else:
        out = np.tanh(0.5 * spec.param * x)
    return HosvdFactors(out, f.factor, f.kappa)


def tpe_dot(gx: DenseTensor, gy: DenseTensor) -> float:
    """Inner product of two normalized pooled tensors."""
    return inner(gx, gy)


def tpe_dot_factored(fx: HosvdFactors, fy: HosvdFactors) -> float:
    """Same inner product evaluated in factored form.

    Equals sum over core index pairs of the cores weighted by products of
    C = Ux^T Uy, one factor per mode, so it never forms the ambient tensors.
    """
    if fx.order != fy.order:
        raise InputError(f"order mismatch: {fx.order} vs {fy.order}")
    if fx.factor.shape[0] != fy.factor.shape[0]:
        raise InputError("factors live in different ambient dimensions")
    c = fx.factor.T @ fy.factor
    out = fy.core
    for axis in range(fy.order):
        out = np.moveaxis(np.tensordot(out, c, axes=([axis], [1])), -1, axis)
    return float(np.dot(fx.core.ravel(), out.ravel()))


def tpe_distance(gx: DenseTensor, gy: DenseTensor) -> float:
    """Frobenius distance between two normalized pooled tensors."""
    if gx.dims != gy.dims:
        raise InputError(f"shape mismatch: {gx.dims} vs {gy.dims}")
    return float(np.linalg.norm((gx.data - gy.data).ravel()))
