"""End-to-end acceptance checks for the package's headline guarantees.

Each test prints one scoreboard line of the form

    [acceptance] <name>: PASS|FAIL (<measured numbers>)

before asserting, so a full run with `pytest tests/test_acceptance.py -s`
gives one line per guarantee. The pushforward check is expected to fail its
second clause; see the comment inside it.
"""

import time

import numpy as np

from hotpool import (
    FeatureSet,
    PnSpec,
    analysis,
    apply_epn_core,
    bound_gaps,
    detector_likelihood,
    epn_matrix,
    hosvd_supersym,
    pool,
    reconstruct,
    tpe_dot_factored,
)
from hotpool.gradients import (
    core_coefficient_grad,
    eig_value_grad,
    eig_vector_grad,
    epn_matrix_vjp,
    finite_diff_oracle,
    unfolded_factor_vjp,
)
from hotpool.hosvd import core_coefficient
from hotpool.sketch import apply as sketch_apply
from hotpool.sketch import make_plan
from hotpool.spectral import sym_eig


def _report(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)


def _gapped_spd(tag, d, lo=0.1, hi=0.95, min_gap=0.05):
    """SPD draw whose eigenvalues are pairwise separated by at least min_gap."""
    for bump in range(200):
        rng = np.random.default_rng((9000, tag, bump))
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        vals = np.sort(rng.uniform(lo, hi, size=d))[::-1]
        if np.diff(vals[::-1]).min() > min_gap:
            return (q * vals) @ q.T, rng
    raise AssertionError(f"no well-separated draw found for tag {tag}")


def _rel(analytic, numeric):
    return float(
        np.linalg.norm(np.asarray(analytic) - np.asarray(numeric))
        / max(np.linalg.norm(np.asarray(numeric)), 1e-300)
    )


def test_saturating_envelope_certification():
    t0 = time.perf_counter()
    rep = analysis.verify_maxexp_bound()
    dt = time.perf_counter() - t0
    min_gap = min(r["min_gap"] for r in rep.detail)
    excess = max(r["window_max_gap"] - r["eps2"] for r in rep.detail)
    ok = rep.certified and min_gap >= -1e-12 and excess <= 1e-9 and dt < 5.0
    _report(
        "saturating-envelope-certification",
        ok,
        f"eta 1..64, min gap {min_gap:.3e}, worst ceiling excess {excess:.3e}, {dt:.2f}s",
    )
    assert min_gap >= -1e-12
    assert excess <= 1e-9
    assert rep.certified
    assert dt < 5.0


# frozen from an mpmath evaluation at 50 digits
ETA2_EPS1 = 0.045926544928064685
ETA2_EPS2 = 0.060507658124963474


def test_gap_ordering_and_oracle():
    etas = [1.0, 1.5, 2.0] + [float(2**k) for k in range(2, 11)]
    pairs = {eta: bound_gaps(eta) for eta in etas}
    ordered = all(e1 <= e2 for e1, e2 in pairs.values())
    d1 = abs(pairs[2.0][0] - ETA2_EPS1)
    d2 = abs(pairs[2.0][1] - ETA2_EPS2)
    ok = ordered and d1 < 1e-10 and d2 < 1e-10
    _report(
        "gap-ordering-and-oracle",
        ok,
        f"eps1 <= eps2 for {len(etas)} eta values; "
        f"eta=2 oracle deltas {d1:.2e}, {d2:.2e}",
    )
    assert ordered
    assert d1 < 1e-10
    assert d2 < 1e-10


def test_power_envelope_certification():
    rep = analysis.verify_gamma_bound()
    min_gap = min(r["min_gap"] for r in rep.detail)
    tangency = max(abs(r["tangency_gap"]) for r in rep.detail)
    ok = rep.certified and min_gap >= -1e-12 and tangency < 1e-9
    _report(
        "power-envelope-certification",
        ok,
        f"4 time constants, min gap {min_gap:.3e}, worst tangency gap {tangency:.3e}",
    )
    assert min_gap >= -1e-12
    assert tangency < 1e-9
    assert rep.certified


def test_decay_ode_residuals():
    r_sat = analysis.verify_maxexp_ode()
    r_pow = analysis.verify_gamma_ode()
    ok = (
        r_sat["pass"]
        and r_pow["pass"]
        and r_sat["max_residual"] < 1e-8
        and r_pow["max_residual"] < 1e-12
    )
    _report(
        "decay-ode-residuals",
        ok,
        f"saturating {r_sat['max_residual']:.3e} < 1e-08, "
        f"power {r_pow['max_residual']:.3e} < 1e-12",
    )
    assert r_sat["pass"] and r_sat["max_residual"] < 1e-8
    assert r_pow["pass"] and r_pow["max_residual"] < 1e-12


def test_hosvd_roundtrip():
    dims = (4, 6, 8, 10)
    worst_rel = 0.0
    worst_energy = 0.0
    for seed in range(50):
        d = dims[seed % 4]
        rng = np.random.default_rng(seed)
        t = pool(FeatureSet(rng.normal(size=(2 * d, d))), 3)
        factors = hosvd_supersym(t)
        back = reconstruct(factors)
        scale = np.linalg.norm(t.data)
        worst_rel = max(worst_rel, np.linalg.norm(back.data - t.data) / scale)
        energy_gap = abs(np.sum(factors.core**2) - np.sum(t.data**2)) / scale**2
        worst_energy = max(worst_energy, energy_gap)
    ok = worst_rel < 1e-9 and worst_energy < 1e-9
    _report(
        "hosvd-roundtrip",
        ok,
        f"50 tensors, d in {dims}, worst rel err {worst_rel:.3e}, "
        f"worst energy gap {worst_energy:.3e}",
    )
    assert worst_rel < 1e-9
    assert worst_energy < 1e-9


def test_tpe_consistency():
    worst = 0.0
    for seed in range(20):
        d = (4, 5, 6)[seed % 3]
        rng = np.random.default_rng((100, seed))
        fa = hosvd_supersym(pool(FeatureSet(rng.normal(size=(2 * d, d))), 3))
        fb = hosvd_supersym(pool(FeatureSet(rng.normal(size=(2 * d, d))), 3))
        na = apply_epn_core(fa, PnSpec("sigme", 6))
        nb = apply_epn_core(fb, PnSpec("sigme", 6))
        dense = float(np.sum(reconstruct(na).data * reconstruct(nb).data))
        factored = tpe_dot_factored(na, nb)
        worst = max(worst, abs(dense - factored))
    ok = worst < 1e-9
    _report("tpe-consistency", ok, f"20 pairs, worst dense/factored gap {worst:.3e}")
    assert worst < 1e-9


def test_detector_curve():
    thetas = np.linspace(0.0, np.pi / 2, 15709)
    curve = analysis.detector_curve(thetas, 20.0, 2.0)
    resp = curve[:, 1]
    window = (thetas >= 0.15) & (thetas <= np.pi / 2 - 0.15)
    window_min = float(resp[window].min())
    left, right = float(resp[0]), float(resp[-1])
    at_zero = detector_likelihood(0.0, 2.0, 20)
    # the right grid endpoint is the float nearest pi/2, where cos is ~6e-17
    # rather than 0, so the response there is ~2e-15; the exact-zero claim
    # is checked at the zero-coefficient point itself
    ok = window_min >= 0.99 and left == 0.0 and abs(right) < 1e-12 and at_zero == 0.0
    _report(
        "detector-curve",
        ok,
        f"window min {window_min:.6f} >= 0.99, endpoints {left:.1e} / {right:.1e}",
    )
    assert window_min >= 0.99
    assert left == 0.0
    assert abs(right) < 1e-12
    assert at_zero == 0.0


def test_pushforward_whitening():
    rng = np.random.default_rng(42)
    samples = rng.beta(2.0, 5.0, size=100_000)
    samples = samples / samples.max()
    t = analysis.t_of_eta(64.0)
    _, m_sat = analysis.pushforward_spectrum(samples, PnSpec("maxexp", 64.0), bins=10)
    _, m_hdp = analysis.pushforward_spectrum(samples, PnSpec("hdp", t), bins=10)
    top_sat = float(m_sat[-1])
    top_hdp = float(m_hdp[-1])
    gap = abs(top_sat - top_hdp)
    ok = top_sat >= 0.8 and gap <= 0.05
    _report(
        "pushforward-whitening",
        ok,
        f"saturating top bin {top_sat:.5f} (>= 0.8), decay top bin {top_hdp:.5f}, "
        f"gap {100 * gap:.2f}pp (<= 5pp)",
    )
    assert top_sat >= 0.8
    # The 5-point clause fails for this distribution: the exact-CDF gap
    # between the two top-bin masses is 6.2 points (Monte-Carlo sigma is
    # about 0.09 points), so this assert documents a real shortfall rather
    # than a flaky seed.
    assert gap <= 0.05


def _grad_eig_value(seed, d):
    x, _ = _gapped_spd(seed, d)
    oracle = finite_diff_oracle(lambda m: np.float64(sym_eig(m).values[0]), x)
    return _rel(eig_value_grad(x, 1), oracle.jac)


def _grad_eig_vector(seed, d):
    x, _ = _gapped_spd(seed + 50, d)
    i = 1 + seed % d
    j = 1 + (2 * seed + 1) % d
    oracle = finite_diff_oracle(
        lambda m: np.float64(sym_eig(m).vectors[i - 1, j - 1]), x
    )
    return _rel(eig_vector_grad(x, i, j), oracle.jac)


_VJP_SPECS = (
    PnSpec("gamma", 0.7),
    PnSpec("maxexp", 4),
    PnSpec("asinhe", 0.9),
    PnSpec("sigme", 4),
    PnSpec("hdp", 0.3),
)


def _grad_epn_vjp(seed, d):
    x, rng = _gapped_spd(seed + 100, d)
    spec = _VJP_SPECS[seed % len(_VJP_SPECS)]
    up = rng.normal(size=(d, d))
    up = 0.5 * (up + up.T)
    oracle = finite_diff_oracle(lambda m: epn_matrix(m, spec), x)
    return _rel(epn_matrix_vjp(x, spec, up), oracle.vjp(up))


def _factor_tensor(seed, d):
    """Pooled tensor whose mode-1 gram has well-separated eigenvalues."""
    for bump in range(200):
        rng = np.random.default_rng((9500, seed, bump))
        t = pool(FeatureSet(rng.normal(size=(2 * d, d))), 3)
        m1 = t.data.reshape(d, -1, order="F")
        vals = sym_eig(m1 @ m1.T).values
        if np.diff(vals[::-1]).min() > 1e-3 * vals[0]:
            return t, rng
    raise AssertionError(f"no well-separated pooled draw for seed {seed}")


def _grad_factor_vjp(seed, d):
    t, rng = _factor_tensor(seed, d)
    upstream = rng.normal(size=(d, d))
    analytic = unfolded_factor_vjp(t, upstream).data

    def loss(data):
        m1 = data.reshape(d, -1, order="F")
        return float(np.sum(upstream * sym_eig(m1 @ m1.T).vectors))

    h = 1e-6
    fd = np.zeros((d, d, d))
    for idx in np.ndindex(d, d, d):
        plus = t.data.copy()
        plus[idx] += h
        minus = t.data.copy()
        minus[idx] -= h
        fd[idx] = (loss(plus) - loss(minus)) / (2 * h)
    return _rel(analytic, fd)


def _grad_core(seed, d):
    rng = np.random.default_rng((9700, seed))
    phi = rng.normal(size=(max(4, d), d))
    q, _ = np.linalg.qr(rng.normal(size=(d, 3)))
    u, v, w = q[:, 0], q[:, 1], q[:, 2]
    analytic = core_coefficient_grad(FeatureSet(phi), u, v, w)
    h = 1e-6
    fd = np.zeros_like(phi)
    for n in range(phi.shape[0]):
        for k in range(d):
            plus = phi.copy()
            plus[n, k] += h
            minus = phi.copy()
            minus[n, k] -= h
            fd[n, k] = (
                core_coefficient(FeatureSet(plus), u, v, w)
                - core_coefficient(FeatureSet(minus), u, v, w)
            ) / (2 * h)
    return _rel(analytic, fd)


def test_gradient_finite_difference_suite():
    ops = {
        "eig_value_grad": _grad_eig_value,
        "eig_vector_grad": _grad_eig_vector,
        "epn_vjp": _grad_epn_vjp,
        "factor_vjp": _grad_factor_vjp,
        "core_grad": _grad_core,
    }
    worst = {}
    for name, runner in ops.items():
        errs = [runner(seed, (4, 5, 6)[seed % 3]) for seed in range(20)]
        worst[name] = max(errs)
    ok = all(v < 1e-4 for v in worst.values())
    _report(
        "gradient-finite-difference-suite",
        ok,
        "worst rel err per op: "
        + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()),
    )
    for name, value in worst.items():
        assert value < 1e-4, name


def test_sketch_unbiasedness():
    rng = np.random.default_rng(7)
    x = rng.normal(size=64)
    y = x + 0.2 * rng.normal(size=64)
    target = float(x @ y)
    total = 0.0
    n_plans = 10_000
    for seed in range(n_plans):
        plan = make_plan(64, 16, seed)
        total += float(sketch_apply(plan, x) @ sketch_apply(plan, y))
    mean = total / n_plans
    rel = abs(mean - target) / abs(target)
    ok = rel <= 0.02
    _report(
        "sketch-unbiasedness",
        ok,
        f"mean {mean:.4f} vs target {target:.4f} over {n_plans} plans, "
        f"rel err {rel:.4f} <= 0.02",
    )
    assert rel <= 0.02


def test_spectral_equivariance():
    kinds = (
        PnSpec("gamma", 0.5),
        PnSpec("maxexp", 4),
        PnSpec("asinhe", 0.9),
        PnSpec("sigme", 6),
        PnSpec("hdp", 0.3),
        PnSpec("grassmann", 2),
    )
    d = 6
    worst = 0.0
    for seed in range(10):
        x, _ = _gapped_spd(seed + 300, d)
        rot_rng = np.random.default_rng((9900, seed))
        r, _ = np.linalg.qr(rot_rng.normal(size=(d, d)))
        rx = r @ x @ r.T
        for spec in kinds:
            gap = np.max(np.abs(epn_matrix(rx, spec) - r @ epn_matrix(x, spec) @ r.T))
            worst = max(worst, float(gap))
    ok = worst < 1e-9
    _report(
        "spectral-equivariance",
        ok,
        f"6 operator kinds, 10 rotations, worst conjugation gap {worst:.3e}",
    )
    assert worst < 1e-9
