"""Command-line drive for pooling, normalization, verification, and figures.

Exit codes are a stable contract: 0 success, 1 verification failure,
2 input error, 3 domain violation, 4 degenerate spectrum. Every command is
deterministic given its flags and seed, and re-runs write byte-identical
output files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, gradients, hosvd, io, sketch, spectral, tensor
from .errors import DegenerateSpectrumError, DomainError, InputError

_JSON_KW = {"sort_keys": True, "indent": 2}


def _parse_spec(text: str) -> spectral.PnSpec:
    kind, sep, param = text.partition(":")
    if not sep or not param:
        raise InputError(f"spec must look like kind:param, got {text!r}")
    try:
        value = float(param)
    except ValueError:
        raise InputError(f"spec parameter {param!r} is not a number") from None
    return spectral.PnSpec(kind.strip().lower(), value)


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(text)
        if not text.endswith("\n"):
            f.write("\n")


def _csv_line(cells) -> str:
    out = []
    for c in cells:
        if c is None:
            out.append("")
        elif isinstance(c, str):
            out.append(c)
        elif isinstance(c, bool):
            out.append("true" if c else "false")
        elif isinstance(c, (int, np.integer)):
            out.append(str(int(c)))
        else:
            out.append(repr(float(c)))
    return ",".join(out)


def _write_csv(path, header, rows) -> None:
    lines = []
    if header:
        lines.append(_csv_line(header))
    lines.extend(_csv_line(row) for row in rows)
    _write_text(path, "\n".join(lines))


def _write_svg(path, xs, series, title: str) -> None:
    """Minimal polyline plot; series is a list of (name, ys) pairs."""
    width, height, pad = 640.0, 400.0, 45.0
    xs = np.asarray(xs, dtype=np.float64)
    all_y = np.concatenate([np.asarray(ys, dtype=np.float64)[np.isfinite(ys)]
                            for _, ys in series])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

    def sx(v):
        return pad + (v - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{pad:.1f}" y1="{height - pad:.1f}" x2="{width - pad:.1f}" '
        f'y2="{height - pad:.1f}" stroke="black"/>',
        f'<line x1="{pad:.1f}" y1="{pad:.1f}" x2="{pad:.1f}" '
        f'y2="{height - pad:.1f}" stroke="black"/>',
    ]
    for k, (lo, hi, fx, fy, anchor) in enumerate((
        (x_lo, x_hi, sx, lambda _: height - pad + 16.0, "middle"),
        (y_lo, y_hi, lambda _: pad - 6.0, sy, "end"),
    )):
        for v in (lo, hi):
            x = fx(v) if k == 0 else pad - 6.0
            y = fy(v) if k == 1 else height - pad + 16.0
            parts.append(
                f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" '
                f'font-family="sans-serif" font-size="11">{v:.4g}</text>'
            )
    for k, (name, ys) in enumerate(series):
        ys = np.asarray(ys, dtype=np.float64)
        keep = np.isfinite(ys)
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs[keep], ys[keep]))
        color = palette[k % len(palette)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{width - pad + 4:.1f}" y="{pad + 14 * k + 10:.1f}" '
                     f'font-family="sans-serif" font-size="11" fill="{color}">'
                     f'{name}</text>')
    parts.append("</svg>")
    _write_text(path, "\n".join(parts))


def cmd_pool(args) -> int:
    features = io.read_features_csv(args.input)
    if args.center:
        features = tensor.FeatureSet(
            features.vectors, features.weights, features.vectors.mean(axis=0)
        )
    pooled = tensor.pool(features, args.order)
    io.write_tensor(args.out, pooled)
    print(f"pooled {features.count} vectors of dim {features.dim} "
          f"into an order-{args.order} tensor: {args.out}")
    return 0


def cmd_epn(args) -> int:
    t = io.read_tensor(args.input)
    spec = _parse_spec(args.spec)
    if t.order == 2:
        out = spectral.epn_matrix(t.data, spec, normalize=args.normalize)
        io.write_tensor(args.out, tensor.DenseTensor(out))
    elif t.order == 3:
        factors = hosvd.hosvd_supersym(t)
        normalized = hosvd.apply_epn_core(factors, spec)
        io.write_tensor(args.out, hosvd.reconstruct(normalized))
    else:
        raise InputError(f"normalization supports orders 2 and 3, got {t.order}")
    print(f"applied {spec.kind}:{spec.param:g} to {args.input}: {args.out}")
    return 0


def cmd_distance(args) -> int:
    a = io.read_tensor(args.a)
    b = io.read_tensor(args.b)
    # both metrics are the Frobenius distance; "tpe" names its use on
    # spectrally normalized tensors
    value = hosvd.tpe_distance(a, b)
    print(f"{value:.12g}")
    return 0


def _emit_bound_report(report, out_prefix) -> None:
    print(analysis.report_json(report))
    if out_prefix:
        _write_text(f"{out_prefix}.json", analysis.report_json(report))
        header, rows = analysis.report_csv_rows(report)
        _write_csv(f"{out_prefix}.csv", header, rows)


def _emit_ode_report(report, out_prefix) -> None:
    print(analysis.ode_report_json(report))
    if out_prefix:
        _write_text(f"{out_prefix}.json", analysis.ode_report_json(report))
        rows = report["rows"]
        header = list(rows[0].keys())
        _write_csv(f"{out_prefix}.csv", header, [[r[k] for k in header] for r in rows])


def cmd_verify(args) -> int:
    which = args.theorem
    if which == "2":
        etas = range(1, args.eta_max + 1)
        report = analysis.verify_maxexp_bound(etas, args.lam_step, args.t_scale)
        _emit_bound_report(report, args.out)
        return 0 if report.certified else 1
    if which == "3":
        report = analysis.verify_gamma_bound(None, args.lam_step, args.t_scale)
        _emit_bound_report(report, args.out)
        return 0 if report.certified else 1
    if which == "combined":
        report = analysis.verify_combined_bound(None, args.lam_step, args.t_scale)
        _emit_bound_report(report, args.out)
        return 0 if report.certified else 1
    if which == "4":
        report = analysis.verify_maxexp_ode(h=args.h, coeff_scale=args.t_scale)
        _emit_ode_report(report, args.out)
        return 0 if report["pass"] else 1
    if which == "5":
        report = analysis.verify_gamma_ode(coeff_scale=args.t_scale)
        _emit_ode_report(report, args.out)
        return 0 if report["pass"] else 1
    # gaps
    eps1, eps2 = analysis.bound_gaps(args.eta)
    doc = {"eta": args.eta, "eps1": eps1, "eps2": eps2}
    print(json.dumps(doc, **_JSON_KW))
    if args.out:
        _write_text(f"{args.out}.json", json.dumps(doc, **_JSON_KW))
    return 0 if eps1 <= eps2 + 1e-15 else 1


def _draw_spd(rng, d: int) -> np.ndarray:
    """SPD draw with spectrum inside (0.2, 0.95): valid for every kind."""
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    lam = np.sort(rng.uniform(0.2, 0.95, size=d))[::-1]
    return (q * lam) @ q.T


def _gradcheck_matrix(args, runner) -> dict:
    rng = np.random.default_rng(args.seed)
    if args.input:
        x = io.read_matrix_csv(args.input)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise InputError(f"{args.input}: expected a square matrix")
        d = x.shape[0]
    else:
        d = args.d
        x = _draw_spd(rng, d)
    return runner(x, d, rng)


def _run_eig_value(args) -> dict:
    def runner(x, d, rng):
        analytic = gradients.eig_value_grad(x, 1)
        oracle = gradients.finite_diff_oracle(
            lambda m: float(spectral.sym_eig(m).values[0]), x
        )
        rel = float(np.linalg.norm(analytic - oracle.jac)
                    / max(np.linalg.norm(oracle.jac), 1e-300))
        return {"rel_err": rel, "threshold": 1e-6, "d": d}

    return _gradcheck_matrix(args, runner)


def _run_eig_vector(args) -> dict:
    def runner(x, d, rng):
        i, j = 1, min(2, d)
        analytic = gradients.eig_vector_grad(x, i, j)
        oracle = gradients.finite_diff_oracle(
            lambda m: float(spectral.sym_eig(m).vectors[i - 1, j - 1]), x
        )
        rel = float(np.linalg.norm(analytic - oracle.jac)
                    / max(np.linalg.norm(oracle.jac), 1e-300))
        return {"rel_err": rel, "threshold": 1e-5, "d": d}

    return _gradcheck_matrix(args, runner)


def _run_epn_vjp(args) -> dict:
    spec = _parse_spec(args.spec or "sigme:4")

    def runner(x, d, rng):
        upstream = rng.normal(size=(d, d))
        analytic = gradients.epn_matrix_vjp(x, spec, upstream)
        oracle = gradients.finite_diff_oracle(lambda m: spectral.epn_matrix(m, spec), x)
        numeric = oracle.vjp(upstream)
        rel = float(np.linalg.norm(analytic - numeric)
                    / max(np.linalg.norm(numeric), 1e-300))
        return {"rel_err": rel, "threshold": 1e-5, "d": d, "spec": f"{spec.kind}:{spec.param:g}"}

    return _gradcheck_matrix(args, runner)


def _run_factor_vjp(args) -> dict:
    rng = np.random.default_rng(args.seed)
    d = args.d
    features = tensor.FeatureSet(rng.normal(size=(2 * d, d)))
    t = tensor.pool(features, 3)
    upstream = rng.normal(size=(d, d))
    analytic = gradients.unfolded_factor_vjp(t, upstream)

    def loss(data):
        m1 = data.reshape(d, -1, order="F")
        eig = spectral.sym_eig(m1 @ m1.T)
        return float(np.sum(upstream * eig.vectors))

    h = 1e-6
    a_dirs = []
    f_dirs = []
    for _ in range(5):
        direction = rng.normal(size=t.dims)
        direction /= np.linalg.norm(direction)
        a_dirs.append(float(np.sum(analytic.data * direction)))
        f_dirs.append((loss(t.data + h * direction) - loss(t.data - h * direction))
                      / (2.0 * h))
    a_vec = np.asarray(a_dirs)
    f_vec = np.asarray(f_dirs)
    rel = float(np.linalg.norm(a_vec - f_vec) / max(np.linalg.norm(f_vec), 1e-300))
    return {"rel_err": rel, "threshold": 1e-4, "d": d}


def _run_core_grad(args) -> dict:
    rng = np.random.default_rng(args.seed)
    d = args.d
    features = tensor.FeatureSet(rng.normal(size=(max(4, d), d)))
    q, _ = np.linalg.qr(rng.normal(size=(d, 3)))
    u, v, w = q[:, 0], q[:, 1], q[:, 2]
    analytic = gradients.core_coefficient_grad(features, u, v, w)
    h = 1e-6
    numeric = np.zeros_like(analytic)
    base = features.vectors
    for n in range(base.shape[0]):
        for j in range(d):
            plus = base.copy()
            minus = base.copy()
            plus[n, j] += h
            minus[n, j] -= h
            numeric[n, j] = (
                hosvd.core_coefficient(tensor.FeatureSet(plus), u, v, w)
                - hosvd.core_coefficient(tensor.FeatureSet(minus), u, v, w)
            ) / (2.0 * h)
    rel = float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-300))
    return {"rel_err": rel, "threshold": 1e-7, "d": d}


_GRADCHECK_OPS = {
    "eig_value_grad": _run_eig_value,
    "eig_vector_grad": _run_eig_vector,
    "epn_vjp": _run_epn_vjp,
    "factor_vjp": _run_factor_vjp,
    "core_grad": _run_core_grad,
}


def cmd_gradcheck(args) -> int:
    if args.op not in _GRADCHECK_OPS:
        raise InputError(
            f"unknown op {args.op!r}; choose from {sorted(_GRADCHECK_OPS)}"
        )
    if args.d < 2 or args.d > 32:
        raise InputError(f"d must be in 2..32, got {args.d}")
    result = _GRADCHECK_OPS[args.op](args)
    doc = {
        "op": args.op,
        "d": result["d"],
        "seed": args.seed,
        "rel_err": result["rel_err"],
        "threshold": result["threshold"],
        "pass": result["rel_err"] < result["threshold"],
    }
    if "spec" in result:
        doc["spec"] = result["spec"]
    print(json.dumps(doc, **_JSON_KW))
    return 0 if doc["pass"] else 1


def _figure_fig1(args) -> tuple[list, list, list, str]:
    eta = args.eta if args.eta is not None else 64.0
    rng = np.random.default_rng(args.seed)
    samples = rng.beta(2.0, 5.0, size=args.n)
    samples = samples / samples.max()
    t = analysis.t_of_eta(eta)
    edges, maxexp_mass = analysis.pushforward_spectrum(
        samples, spectral.PnSpec("maxexp", eta), bins=args.bins
    )
    _, hdp_mass = analysis.pushforward_spectrum(
        samples, spectral.PnSpec("hdp", t), bins=args.bins
    )
    header = ["bin_low", "bin_high", "maxexp_mass", "hdp_mass"]
    rows = [
        [edges[i], edges[i + 1], maxexp_mass[i], hdp_mass[i]]
        for i in range(len(maxexp_mass))
    ]
    centers = 0.5 * (edges[:-1] + edges[1:])
    series = [("maxexp", maxexp_mass), ("hdp", hdp_mass)]
    print(json.dumps({
        "top_bin_maxexp": float(maxexp_mass[-1]),
        "top_bin_hdp": float(hdp_mass[-1]),
        "top_bin_difference": float(abs(maxexp_mass[-1] - hdp_mass[-1])),
        "t": t,
    }, **_JSON_KW))
    return header, rows, [centers, series], "spectrum pushforward"


def _figure_fig2(args) -> tuple[list, list, list, str]:
    eta = args.eta if args.eta is not None else 8.0
    lam = np.round(np.arange(-1000, 1001) * 1e-3, 12)
    nonneg = lam >= 0.0
    specs = {
        "gamma": spectral.PnSpec("gamma", args.gamma),
        "maxexp": spectral.PnSpec("maxexp", eta),
        "asinhe": spectral.PnSpec("asinhe", args.gamma_prime),
        "sigme": spectral.PnSpec("sigme", args.eta_prime),
        "hdp": spectral.PnSpec("hdp", args.hdp_t),
    }
    cols = {}
    for name, spec in specs.items():
        values = np.full(lam.shape, np.nan)
        if name in ("asinhe", "sigme"):
            values = spectral.pn_scalar(lam, spec)
        else:
            values[nonneg] = spectral.pn_scalar(lam[nonneg], spec)
        cols[name] = values
    header = ["lambda"] + list(specs)
    rows = []
    for k, x in enumerate(lam):
        row = [x]
        for name in specs:
            v = cols[name][k]
            row.append(None if math.isnan(v) else v)
        rows.append(row)
    series = [(name, cols[name]) for name in specs]
    return header, rows, [lam, series], "operator profiles"


def _figure_fig4b(args) -> tuple[list, list, list, str]:
    eta = args.eta if args.eta is not None else 20.0
    n = int(round(math.pi / 2 / args.theta_step)) + 1
    thetas = np.linspace(0.0, math.pi / 2, n)
    curve = analysis.detector_curve(thetas, eta, args.kappa)
    header = ["theta", "response"]
    rows = [[row[0], row[1]] for row in curve]
    series = [("response", curve[:, 1])]
    return header, rows, [curve[:, 0], series], "detection response"


def cmd_figure(args) -> int:
    builders = {"fig1": _figure_fig1, "fig2": _figure_fig2, "fig4b": _figure_fig4b}
    if args.which not in builders:
        raise InputError(f"unknown figure {args.which!r}; choose from {sorted(builders)}")
    header, rows, (xs, series), title = builders[args.which](args)
    _write_csv(args.out, header, rows)
    print(f"wrote {args.which} data: {args.out}")
    if args.svg:
        _write_svg(args.svg, xs, series, title)
        print(f"wrote {args.which} plot: {args.svg}")
    return 0


def cmd_sketch(args) -> int:
    features = io.read_features_csv(args.input)
    if args.plan:
        with open(args.plan) as f:
            plan = sketch.plan_from_json(f.read())
        if plan.input_dim != features.dim:
            raise InputError(
                f"plan input dim {plan.input_dim} does not match CSV dim {features.dim}"
            )
    else:
        if args.dprime is None:
            raise InputError("pass --dprime (or --plan to reuse a stored plan)")
        plan = sketch.make_plan(features.dim, args.dprime, args.seed)
    sketched = np.stack([sketch.apply(plan, row) for row in features.vectors])
    has_weights = not np.all(features.weights == 1.0)
    out_features = tensor.FeatureSet(sketched, features.weights if has_weights else None)
    io.write_features_csv(args.out, out_features, include_weights=has_weights)
    plan_path = args.plan or f"{args.out}.plan.json"
    if not args.plan:
        _write_text(plan_path, sketch.plan_json(plan))
    print(f"sketched {features.count} rows from dim {plan.input_dim} "
          f"to {plan.output_dim}: {args.out} (plan: {plan_path})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hotpool",
        description="Higher-order tensor pooling with spectral power normalization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="pool a feature CSV into a tensor file")
    p.add_argument("input", help="feature CSV (optional trailing weight column)")
    p.add_argument("-r", "--order", type=int, default=3, choices=(2, 3, 4))
    p.add_argument("--center", action="store_true",
                   help="subtract the column mean before pooling")
    p.add_argument("--out", required=True, help="output tensor file")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("epn", help="spectrally normalize a pooled tensor")
    p.add_argument("input", help="tensor file of order 2 or 3")
    p.add_argument("--spec", required=True, help="operator as kind:param, "
                   "e.g. gamma:0.5, maxexp:20, sigme:4, hdp:0.2, grassmann:2")
    p.add_argument("--normalize", action="store_true",
                   help="trace-normalize the spectrum first (order 2 only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_epn)

    p = sub.add_parser("distance", help="distance between two tensor files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric", choices=("tpe", "frobenius"), default="tpe")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("verify", help="certify bounds and decay equations")
    p.add_argument("--theorem", required=True,
                   choices=("2", "3", "4", "5", "gaps", "combined"))
    p.add_argument("--eta", type=float, default=2.0,
                   help="eta for --theorem gaps")
    p.add_argument("--eta-max", type=int, default=64,
                   help="sweep eta = 1..eta-max for --theorem 2")
    p.add_argument("--lam-step", type=float, default=analysis.DEFAULT_LAM_STEP)
    p.add_argument("--t-scale", type=float, default=1.0,
                   help="detune the time constant (anything but 1 should fail)")
    p.add_argument("--h", type=float, default=1e-6,
                   help="finite-difference step for --theorem 4")
    p.add_argument("--out", help="prefix for .json and .csv reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gradcheck", help="check an analytic gradient numerically")
    p.add_argument("--op", required=True, help=f"one of {sorted(_GRADCHECK_OPS)}")
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="operator for epn_vjp (default sigme:4)")
    p.add_argument("--input", help="matrix CSV to use instead of a random draw")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("figure", help="emit figure data as CSV (optionally SVG)")
    p.add_argument("--which", required=True, choices=("fig1", "fig2", "fig4b"))
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="also render a line plot")
    p.add_argument("--seed", type=int, default=42, help="fig1 sample seed")
    p.add_argument("--n", type=int, default=100_000, help="fig1 sample count")
    p.add_argument("--bins", type=int, default=10, help="fig1 histogram bins")
    p.add_argument("--eta", type=float, default=None,
                   help="saturation exponent (fig1 default 64, fig4b default 20)")
    p.add_argument("--kappa", type=float, default=2.0, help="fig4b coefficient scale")
    p.add_argument("--theta-step", type=float, default=1e-4, help="fig4b grid step")
    p.add_argument("--gamma", type=float, default=0.5, help="fig2 power exponent")
    p.add_argument("--gamma-prime", type=float, default=1.0, help="fig2 asinhe parameter")
    p.add_argument("--eta-prime", type=float, default=25.0, help="fig2 sigme parameter")
    p.add_argument("--hdp-t", type=float, default=0.2, help="fig2 decay time constant")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("sketch", help="count-sketch a feature CSV")
    p.add_argument("input")
    p.add_argument("--dprime", type=int, help="output dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plan", help="reuse a stored plan JSON instead of drawing one")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sketch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateSpectrumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
