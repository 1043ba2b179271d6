"""Command-line front end.

Subcommands wire the library into reproducible experiments: every output
file gets a JSON sidecar with the resolved configuration, the seed, and
content hashes of any inputs, so identical invocations produce byte-identical
results.  Exit codes: 0 success, 1 usage error, 2 numeric failure
(CFL violation or a degenerate parameter set), 3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import estimators as est
from . import impact as imp
from . import sim
from . import stationary as st
from .errors import CflError, DegenerateParametersError
from .params import CdfSpec, ModelParams, SigmaSpec, load_params, validate_assumptions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3


def _default_params() -> ModelParams:
    return ModelParams(
        alpha=10.0, gamma=1.0, theta=0.2,
        F=CdfSpec.uniform(1.2), sigma=SigmaSpec.assumption1(1.0),
    )


def _resolve_params(args) -> ModelParams:
    if args.config:
        return load_params(args.config)
    return _default_params()


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sidecar(path: Path, args, extra: dict | None = None) -> None:
    meta = {
        "command": args.command,
        "config": str(args.config) if args.config else None,
        "seed": args.seed,
        "format": args.format,
        "options": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "config", "seed", "format", "out", "func")
            and not callable(v)
        },
    }
    if extra:
        meta.update(extra)
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, sort_keys=True))


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    params = _resolve_params(args)
    report = validate_assumptions(params)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_stationary(args) -> int:
    params = _resolve_params(args)
    thetas = [float(t) for t in args.theta.split(",")]
    out = _outdir(args)
    uniform = params.F.kind == "uniform"
    if args.closed_form_only and not uniform:
        print("closed form requires the uniform offset distribution", file=sys.stderr)
        return EXIT_USAGE
    for th in thetas:
        tag = f"theta{th:g}"
        if args.closed_form_only or uniform:
            if th >= 1.0:
                print(
                    f"closed form is undefined at theta={th} (divides by 1 - theta)",
                    file=sys.stderr,
                )
                return EXIT_NUMERIC
            cf = st.closed_form_uniform(params.F.a, params.alpha, th, args.n)
            fpath = out / f"f_closed_{tag}.csv"
            cf.to_csv(fpath)
            _sidecar(fpath, args, {"theta": th, "kind": "closed-form"})
        if args.closed_form_only:
            continue
        f = st.solve_stationary_f(params, th, args.n)
        fpath = out / f"f_{tag}.csv"
        f.to_csv(fpath)
        _sidecar(fpath, args, {"theta": th, "kind": "f"})
        dens = st.psi(params, args.n) if th == 0.0 else st.chi(params, th, args.n)
        dpath = out / (f"psi.csv" if th == 0.0 else f"chi_{tag}.csv")
        dens.to_csv(dpath)
        _sidecar(dpath, args, {"theta": th, "kind": dens.kind})
    return EXIT_OK


def cmd_impact(args) -> int:
    params = _resolve_params(args)
    if args.q_max <= 0:
        print("--q-max must be positive", file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args)
    qg = np.linspace(0.0, args.q_max, args.points)
    rest = st.psi(params, args.n)
    during = st.chi(params, args.theta, args.n)
    refs = {
        "alpha_psi_wing": params.alpha * st.wing(rest),
        "alpha_chi_wing": params.alpha * st.wing(during),
    }
    if args.method == "mc":
        means, ses = [], []
        for q in qg:
            m, s = imp.mc_impact(params, args.theta, float(q), args.paths, args.seed, dq=args.dq)
            means.append(m)
            ses.append(s)
        curve = imp.ImpactCurve(
            q=qg, impact=np.array(means), theta=args.theta, method="mc", se=np.array(ses)
        )
    else:
        curve = imp.impact_curve(params, args.theta, qg, n=args.n)
    path = out / "impact.csv"
    curve.to_csv(path)
    _sidecar(path, args, refs)
    mpath = out / "impact_marginal.csv"
    imp.marginal_impact_curve(params, args.theta, qg, n=args.n).to_csv(mpath)
    _sidecar(mpath, args, refs)
    if args.format == "json":
        curve.to_json(out / "impact.json", refs)
    return EXIT_OK


def cmd_resilience(args) -> int:
    params = _resolve_params(args)
    if args.v_max <= 0:
        print("--v-max must be positive", file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args)
    vg = np.linspace(0.0, args.v_max, args.points)
    curve = imp.resilience_curve(params, args.theta, vg, n=args.n)
    path = out / "resilience.csv"
    curve.to_csv(path)
    _sidecar(path, args)
    if args.format == "json":
        curve.to_json(out / "resilience.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _resolve_params(args)
    out = _outdir(args)
    if args.kind == "finite":
        path = sim.simulate_finite(params, args.lam, args.T, args.x0, args.seed)
        ppath = out / "path.csv"
        path.to_csv(ppath)
        _sidecar(ppath, args, {"trades": path.n_trades, "arrivals": int(path.t.size)})
        stream = sim.synth_lob_events(path, sim.SyntheticLobConfig(), args.seed + 1)
        epath = out / "events.csv"
        est.events_to_csv(stream.events, epath)
        _sidecar(epath, args, {"events": len(stream), "skipped": stream.skipped})
    elif args.kind in ("diffusion-x", "diffusion-y"):
        fn = sim.simulate_diffusion_X if args.kind == "diffusion-x" else sim.simulate_diffusion_Y
        d = fn(params, args.x0, args.T, args.dq, args.seed, theta=args.theta)
        dpath = out / "diffusion.csv"
        d.to_csv(dpath)
        _sidecar(dpath, args)
    else:
        rates = [float(r) for r in args.rates.split(",")]
        agents, agg = sim.simulate_multi_agent(params, rates, args.T, args.x0, args.seed)
        apath = out / "path_aggregate.csv"
        agg.to_csv(apath)
        _sidecar(apath, args, {"per_agent_trades": [a.n_trades for a in agents]})
        for j, a in enumerate(agents):
            a.to_csv(out / f"path_agent{j}.csv")
    return EXIT_OK


def cmd_estimate(args) -> int:
    inp = Path(args.input)
    if not inp.exists():
        print(f"input file not found: {inp}", file=sys.stderr)
        return EXIT_USAGE
    stream = est.load_events(inp)
    open_ns, close_ns = (int(s) for s in args.session.split(","))
    filtered = est.filter_events(stream, (open_ns, close_ns))
    try:
        if args.estimator == "continuous":
            dens = est.estimate_continuous(filtered, K=args.bins)
        elif args.estimator == "weighted":
            dens = est.estimate_weighted(filtered, w=args.w, K=args.bins)
        else:
            dens = est.estimate_weighted_uniform(filtered, w=args.w, K=args.bins)
    except est.EmptySampleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    out = _outdir(args)
    path = out / "density.csv"
    dens.to_csv(path)
    _sidecar(path, args, {"input_sha256": _hash_file(inp), "filter_report": filtered.filter_report})
    if args.format == "json":
        dens.to_json(out / "density.json", {"filter_report": filtered.filter_report})
    return EXIT_OK


def _verify_concavity(params, out: dict) -> bool:
    f0 = st.wing(st.solve_stationary_f(params, 0.0, 1000))
    out["f_theta_1"] = {"0": f0}
    ok = True
    for th in (0.05, 0.1, 0.2):
        fth = st.wing(st.solve_stationary_f(params, th, 1000))
        out["f_theta_1"][str(th)] = fth
        ok = ok and fth < f0
    _, g1 = st.dtheta_f_at_zero(params, 1000)
    out["dtheta_f_at_one"] = g1
    return ok and g1 < 0.0


def _verify_marginal(params, out: dict) -> bool:
    theta = 0.2
    aw_psi = params.alpha * st.wing(st.psi(params, 2000))
    aw_chi = params.alpha * st.wing(st.chi(params, theta, 2000))
    q1, q2 = 2.5e-5, 1e-4
    # the spatial error at these tiny horizons is first order in the grid
    # spacing; extrapolate it out with a coarse/fine pair before taking slopes
    coarse = imp.impact_curve(params, theta, [q1, q2], n=3000).impact
    fine = imp.impact_curve(params, theta, [q1, q2], n=6000).impact
    extr = 2.0 * fine - coarse
    s1, s2 = extr[0] / q1, extr[1] / q2
    # the chord slope approaches its limit like sqrt(Q); extrapolate that out
    slope0 = (np.sqrt(q2) * s1 - np.sqrt(q1) * s2) / (np.sqrt(q2) - np.sqrt(q1))
    mc = imp.marginal_impact_curve(params, theta, [4.0], n=800)
    out["slope_at_zero"] = {"measured": slope0, "reference": aw_psi,
                            "rel_err": abs(slope0 - aw_psi) / aw_psi}
    out["slope_at_infinity"] = {"measured": float(mc.impact[0]), "reference": aw_chi,
                                "rel_err": abs(mc.impact[0] - aw_chi) / aw_chi}
    return out["slope_at_zero"]["rel_err"] < 0.05 and out["slope_at_infinity"]["rel_err"] < 0.05


def _verify_convergence(params, out: dict, seed: int) -> bool:
    from scipy.stats import ks_2samp

    theta, v, npaths = 0.2, 0.5, 2000
    ref = sim.diffusion_terminals(params, "X", 0.5, v, 2.5e-4, npaths, seed, theta=theta)
    kss = []
    for lam in (1e2, 1e3, 1e4):
        samples = _business_clock_samples(params, theta, lam, v, npaths, seed + int(lam))
        kss.append(float(ks_2samp(samples, ref).statistic))
    out["ks_by_lambda"] = dict(zip(["1e2", "1e3", "1e4"], kss))
    return kss[0] > kss[1] > kss[2] and kss[2] < 0.05


def _business_clock_samples(params, theta, lam, v, npaths, seed):
    """Terminal price of npaths finite-activity markets read on the clock of
    a theta-fraction agent at volume v."""
    rate1 = theta * lam
    accrual = theta * params.gamma * float(
        params.F.cdf(np.array(0.0)) + params.F.cdf(np.array(-1.0))
    )
    T = 3.0 * v / accrual
    children = np.random.SeedSequence(seed).spawn(npaths)
    vals = np.empty(npaths)
    for i, child in enumerate(children):
        s = int(child.generate_state(1, dtype=np.uint64)[0]) % (2**63)
        agents, agg = sim.simulate_multi_agent(
            params, [rate1, lam - rate1], T, 0.5, s
        )
        a1 = agents[0]
        t1 = a1.t[a1.side != 0]
        cv1 = agg.delta * np.searchsorted(t1, agg.t, side="right")
        vals[i] = sim.business_clock(agg, [v], clock_volumes=cv1).x[0]
    return vals


def _verify_multiagent(params, out: dict, seed: int) -> bool:
    from scipy.stats import chi2

    lam, T = 1e4, 20.0
    single = sim.simulate_finite(params, lam, T, 0.5, seed)
    _, multi = sim.simulate_multi_agent(params, [0.2 * lam, 0.3 * lam, 0.5 * lam], T, 0.5, seed + 1)
    stat, df = 0.0, 0
    for k in range(10):
        cells = []
        for path in (single, multi):
            sel = (path.side != 0) & ((path.x_pre % 1.0) >= k / 10) & ((path.x_pre % 1.0) < (k + 1) / 10)
            buys = int(np.sum(path.side[sel] == 1))
            sells = int(np.sum(path.side[sel] == -1))
            cells.append((buys, sells))
        tab = np.array(cells, dtype=float)
        if tab.sum() < 40 or np.any(tab.sum(axis=0) == 0):
            continue
        exp = np.outer(tab.sum(axis=1), tab.sum(axis=0)) / tab.sum()
        stat += float(((tab - exp) ** 2 / exp).sum())
        df += 1
    pval = float(chi2.sf(stat, df))
    out["chi2"] = {"stat": stat, "df": df, "p": pval}
    return pval > 0.01


def _verify_estimators(params, out: dict, seed: int) -> bool:
    import math

    path = sim.simulate_finite(params.with_theta(1.0), 1e4, 50.0, 0.3, seed)
    cfg = sim.SyntheticLobConfig(depth=None, depth_mu=math.log(40 * path.delta), depth_sigma=0.5)
    stream = sim.synth_lob_events(path, cfg, seed + 1)
    fs = est.filter_events(stream)
    ref = st.psi(params, 1000)
    dists = {}
    for name, dens in (
        ("weighted", est.estimate_weighted(fs, 0.5)),
        ("weighted_uniform", est.estimate_weighted_uniform(fs, 0.5)),
        ("continuous", est.estimate_continuous(fs)),
    ):
        dists[name] = dens.l1_distance(ref.values, ref.x)
    out["l1_to_stationary"] = dists
    out["trades"] = path.n_trades
    return all(d < 0.1 for d in dists.values())


def cmd_verify(args) -> int:
    params = _resolve_params(args)
    checks = {
        "concavity": lambda o: _verify_concavity(params, o),
        "marginal": lambda o: _verify_marginal(params, o),
        "convergence": lambda o: _verify_convergence(params, o, args.seed),
        "multiagent": lambda o: _verify_multiagent(params, o, args.seed),
        "estimators": lambda o: _verify_estimators(params, o, args.seed),
    }
    report: dict = {"which": args.which, "results": {}}
    passed = True
    for name in ([args.which] if args.which != "all" else list(checks)):
        detail: dict = {}
        ok = checks[name](detail)
        report["results"][name] = {"pass": bool(ok), **detail}
        passed = passed and ok
    report["pass"] = bool(passed)
    text = json.dumps(report, indent=2, default=float)
    print(text)
    if args.out:
        out = _outdir(args)
        (out / "verify.json").write_text(text)
    return EXIT_OK if passed else EXIT_VERIFY


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="impactlab",
        description="Microstructural price-impact model: simulation, densities, impact curves, estimators.",
    )
    ap.add_argument("--config", default=None, help="parameter file (key = value)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1, help="reserved; results never depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model assumptions on the configured parameters")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stationary", help="emit stationary densities for a theta list")
    p.add_argument("--theta", default="0,0.2,0.4,0.6")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--closed-form-only", action="store_true")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("impact", help="expected impact curve")
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--q-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--method", choices=["pde", "mc"], default="pde")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--dq", type=float, default=1e-4)
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("resilience", help="post-order resilience curve")
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--v-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--n", type=int, default=400)
    p.set_defaults(func=cmd_resilience)

    p = sub.add_parser("simulate", help="simulate paths and synthetic event streams")
    p.add_argument("--kind", choices=["finite", "multi", "diffusion-x", "diffusion-y"], default="finite")
    p.add_argument("--lambda", dest="lam", type=float, default=1e4)
    p.add_argument("--rates", default="2000,3000,5000", help="per-agent rates for --kind multi")
    p.add_argument("--T", type=float, default=10.0, help="horizon (time or volume)")
    p.add_argument("--x0", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--dq", type=float, default=1e-3)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the stationary density from a trade-event CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", choices=["continuous", "weighted", "weighted-uniform"], default="continuous")
    p.add_argument("--w", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--session", default=f"{est.DEFAULT_SESSION[0]},{est.DEFAULT_SESSION[1]}")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="run a verification suite and report pass/fail")
    p.add_argument("which", choices=["convergence", "concavity", "marginal", "multiagent", "estimators", "all"])
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CflError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except DegenerateParametersError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
