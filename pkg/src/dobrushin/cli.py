"""Command-line front end.

Every subcommand prints header-first CSV (or JSON with ``--format json``)
to stdout, or to ``--out``.  A file output gets a sidecar
``<out>.manifest.json`` recording the arguments and an output hash, and
``dobrushin replay <manifest>`` reruns it and checks the bytes match.

Exit status: 0 on success, 2 on invalid input, 1 on internal errors or
failed verification.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__, acceptance, converse, divergence, mc, noise, special
from .curve import DobrushinCurve, parse_cost

OUT_DIR_ENV = "DOBRUSHIN_OUT_DIR"


class UsageError(ValueError):
    pass


@dataclass
class Table:
    header: list[str]
    rows: list[list]
    title: str = ""
    meta: dict = field(default_factory=dict)


# -- argument helpers ------------------------------------------------------

def parse_grid(text: str, default: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """'start:stop:count' (inclusive, linear), 'lo:hi:countL' (10^lo..10^hi) or a bare count."""
    parts = text.strip().split(":")
    try:
        if len(parts) == 1:
            lo, hi, cnt = default[0], default[1], parts[0]
        elif len(parts) == 3:
            lo, hi, cnt = float(parts[0]), float(parts[1]), parts[2]
        else:
            raise ValueError
        log = cnt.endswith(("L", "l"))
        n = int(cnt[:-1] if log else cnt)
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use start:stop:count or lo:hi:countL") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError(f"bad grid {text!r}: need a positive count and finite ends")
    return np.logspace(lo, hi, n) if log else np.linspace(lo, hi, n)


def _int_grid(text: str, default: tuple[float, float]) -> np.ndarray:
    g = np.unique(np.rint(parse_grid(text, default)).astype(np.int64))
    return g


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _load_dist(path: str):
    try:
        with open(path) as fh:
            return divergence.dist_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read distribution {path!r}: {exc}") from None


def _noise(text: str):
    try:
        return noise.parse_noise(text)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read noise {text!r}: {exc}") from None


def _cfg(args) -> mc.SimConfig:
    return mc.SimConfig(args.seed, args.trials, args.workers)


# -- subcommands -----------------------------------------------------------

def cmd_theta(args):
    model = _noise(args.noise)
    x = parse_grid(args.grid, (0.0, 10.0))
    if np.any(x < 0):
        raise UsageError("shifts must be nonnegative")
    curve = DobrushinCurve(model, parse_cost("power:2"), 1.0)
    rows = [[float(v), float(model.theta(v)), float(curve.theta_lb(v)), float(curve.theta_c(v))]
            for v in x]
    return Table(["x", "theta", "theta_lb", "theta_c"], rows, f"theta for {args.noise}")


def cmd_curve(args):
    c = DobrushinCurve(_noise(args.noise), parse_cost(args.cost), args.budget)
    t = parse_grid(args.grid, (0.0, 1.0))
    lo, up = np.atleast_1d(c.lower(t)), np.atleast_1d(c.upper(t))
    rows = [[float(a), float(b), float(u)] for a, b, u in zip(t, lo, up)]
    return Table(["t", "lower", "upper"], rows,
                 f"TV curve, {args.noise}, {args.cost}, a={args.budget:g}")


def _divergence_value(P, Q, name: str) -> float:
    key, _, arg = name.partition(":")
    if key == "tv":
        return divergence.tv(P, Q)
    if key == "egamma":
        return divergence.e_gamma(P, Q, float(arg or 1.0))
    if key == "w1":
        return divergence.w1_distance(P, Q)
    return divergence.f_divergence(P, Q, divergence.parse_fdiv(name))


def cmd_divergence(args):
    P, Q = _load_dist(args.p), _load_dist(args.q)
    if args.noise:
        model = _noise(args.noise)
        P, Q = divergence.convolve(P, model), divergence.convolve(Q, model)
    header = ["divergence", "value"]
    if args.integral:
        header += ["integral", "abs_err"]
    rows = []
    for name in args.div.split(","):
        name = name.strip().lower()
        try:
            row = [name, _divergence_value(P, Q, name)]
            if args.integral and name.partition(":")[0] in ("tv", "egamma", "w1"):
                row += [math.nan, math.nan]
            elif args.integral:
                r = divergence.integral_representation(P, Q, name)
                row += [r["integral"], r["abs_err"]]
        except KeyError:
            raise UsageError(f"unknown divergence {name!r}") from None
        rows.append(row)
    return Table(header, rows)


def cmd_decay(args):
    model, cost = _noise(args.noise), parse_cost(args.cost)
    ns = _int_grid(args.n_grid, (1, 1000))
    if ns[0] < 1:
        raise UsageError("stage counts must be at least 1")
    res = converse.t_decay(model, cost, args.budget, int(ns[-1]))
    header = ["n", "t", "bound"]
    if args.rate_lemma:
        header += ["rate_lemma", "rate_lemma_half"]
    rows = []
    for n in ns:
        row = [int(n), float(res.t[n - 1]), min(1.0, float(res.bound[n - 1]))]
        if args.rate_lemma:
            row += [converse.decay_rate_bound(model, cost, args.budget, n),
                    converse.decay_rate_bound(model, cost, args.budget, n, half_factor=True)]
        rows.append(row)
    return Table(header, rows, f"T-information decay, {args.noise}, {args.cost}")


def cmd_mi(args):
    ns = parse_grid(args.n_grid, (1, 8))
    if np.any(ns <= 1):
        raise UsageError("stage counts must exceed 1")
    gauss, power2 = noise.Gaussian(1.0), parse_cost("power:2")
    header = ["n", "T_bound", "mi_bound"]
    if args.alphabet:
        header.append("mi_finite")
    rows = []
    for n in ns:
        T = converse.t_information_bound(gauss, power2, args.d * args.E, float(n))
        row = [float(n), T, converse.mi_bound_chain(args.d, args.E, float(n), T)]
        if args.alphabet:
            row.append(converse.mi_bound_finite(T, args.alphabet))
        rows.append(row)
    return Table(header, rows, f"information after n AWGN stages, d={args.d}, E={args.E:g}")


def cmd_circuit(args):
    snr = parse_grid(args.snr_grid, (-2, 2))
    if np.any(snr <= 0) or args.k < 1:
        raise UsageError("need SNR values > 0 and k >= 1")
    rows = [[r["P"], r["t_star"], r["error_lb"]] for r in mc.circuit_curve(snr, args.k)]
    return Table(["P", "t_star", "error_lb"], rows, f"noisy circuit, fan-in {args.k}")


def cmd_tree(args):
    design = converse.tree_design(args.mu, args.t)
    if args.simulate:
        return mc.simulate_tree(design, args.depth, _cfg(args))
    rows = []
    for n in range(1, args.depth + 1):
        m = converse.tree_moments(design, n)
        rows.append([n, m.mean, m.second_moment_ub, m.second_moment_exact, m.tv_lb, m.tv_lb_exact])
    return Table(["n", "mean_pm", "second_moment_ub", "second_moment_exact", "tv_lb",
                  "tv_lb_exact"], rows,
                 f"tree relays, mu={args.mu:g}, t={args.t:g}", {"design": design.to_dict()})


def cmd_control(args):
    ns = _int_grid(args.n_grid, (1, 20))
    if ns[0] < 1:
        raise UsageError("stage counts must be at least 1")
    gauss, power2 = noise.Gaussian(1.0), parse_cost("power:2")
    rows = []
    for n in ns:
        lin = converse.linear_control_corr(args.sigma0_sq, args.E, int(n))
        bound = math.nan
        if n >= 2:
            T = converse.t_information_bound(gauss, power2, args.E, float(n))
            bound = converse.corr_bound_gaussian(converse.mi_bound_chain(1, args.E, float(n), T))
        rows.append([int(n), lin, bound])
    return Table(["n", "rho2_linear", "rho2_bound"], rows, "squared correlation through n stages")


def cmd_relay(args):
    cfg = _cfg(args)
    if args.scheme == "binary":
        return mc.simulate_relay_binary(args.n, args.p, cfg)
    return mc.simulate_relay_linear(args.sigma0_sq, args.E, args.n, cfg)


def cmd_clt(args):
    ns = _int_grid(args.n, (1, 100))
    rows = []
    for n in ns:
        r = mc.clt_tv_exact(int(n), args.sigma)
        rows.append([r.n, r.sigma, r.tv_exact, r.w1_exact, r.w1_bound, r.clt_bound,
                     r.bound_chain_ok])
    return Table(["n", "sigma", "tv_exact", "w1_exact", "w1_bound", "clt_bound", "chain_ok"],
                 rows, f"smoothed CLT, sigma={args.sigma:g}")


def cmd_probe(args):
    return mc.renyi_noncontraction_probe(args.alpha, args.t, args.a, tuple(_floats(args.q)))


def cmd_verify(args):
    numbers = None
    if args.only:
        numbers = {int(v) for v in _floats(args.only)}
    run = lambda: acceptance.run(numbers, full=args.full, echo=lambda s: print(s, flush=True))
    if args.inject_fault == "qfunc":
        with special.corrupted_qfunc():
            results = run()
    else:
        results = run()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    for r in failed:
        print(f"failed criterion {r.number}: {r.name}", file=sys.stderr)
    return 1 if failed else 0


def cmd_replay(args):
    try:
        with open(args.manifest) as fh:
            man = json.load(fh)
        argv, want = list(man["argv"]), man["sha256"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest!r}: {exc}") from None
    if "--out" in argv:
        i = argv.index("--out")
        argv = argv[:i] + argv[i + 2:]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "replay.out")
        status = main(argv + ["--out", path, "--no-manifest"])
        if status != 0:
            return status
        with open(path, "rb") as fh:
            got = hashlib.sha256(fh.read()).hexdigest()
    if got != want:
        print(f"replay mismatch: {got} != {want}", file=sys.stderr)
        return 1
    print(f"replay ok: {want}")
    return 0


# -- output ----------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def render(result, fmt: str) -> str:
    if isinstance(result, mc.SimReport):
        if fmt == "json":
            return result.to_json()
        rows = [[k, e.value, math.nan if e.se is None else e.se]
                for k, e in sorted(result.estimates.items())]
        result = Table(["estimate", "value", "se"], rows)
    if fmt == "json":
        recs = [{h: _jsonable(v) for h, v in zip(result.header, r)} for r in result.rows]
        body = {"columns": result.header, "rows": recs}
        if result.meta:
            body["meta"] = result.meta
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    for r in result.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _resolve_out(path: str | None) -> str | None:
    if path is None or path == "-":
        return None
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    return path


def _manifest(args, argv: list[str], out: str, text: str) -> dict:
    import scipy
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "out", "format", "figure", "no_manifest")}
    return {"subcommand": args.command, "params": params, "seed": params.get("seed"),
            "output": out, "format": args.format, "argv": argv,
            "sha256": hashlib.sha256(text.encode()).hexdigest(),
            "versions": {"dobrushin": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__}}


# -- parser ----------------------------------------------------------------

def _add_io(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help=f"output file (relative paths resolve under ${OUT_DIR_ENV})")
    p.add_argument("--no-manifest", action="store_true", help="skip the sidecar manifest")
    p.add_argument("--figure", metavar="PATH", help="also render a PNG/PDF (needs matplotlib)")


def _add_sim(p, trials: int):
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dobrushin", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("theta", help="TV between noise and its shift, with envelope")
    p.add_argument("--noise", required=True, help="family:param, e.g. gaussian:1 or gridded:f.json")
    p.add_argument("--grid", default="0:10:101", help="shift grid")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("curve", help="(t, lower, upper) bounds on the TV Dobrushin curve")
    p.add_argument("--noise", required=True)
    p.add_argument("--cost", default="power:2", help="power:p, subexp:alpha or subgauss:alpha")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--grid", default="100", help="t grid; a bare count spans [0, 1]")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("divergence", help="divergences between two distribution files")
    p.add_argument("--p", required=True, help="JSON distribution file")
    p.add_argument("--q", required=True, help="JSON distribution file")
    p.add_argument("--div", default="tv",
                   help="comma list of tv, kl, chi2, hellinger2, renyi:A, egamma:G, w1")
    p.add_argument("--noise", help="convolve both inputs with this noise first")
    p.add_argument("--integral", action="store_true",
                   help="also evaluate the E_gamma integral representation")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("decay", help="T-information bound along a chain of noisy stages")
    p.add_argument("--noise", default="gaussian:1")
    p.add_argument("--cost", default="power:2")
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--n-grid", default="0:6:61L", help="stage counts (rounded to integers)")
    p.add_argument("--rate-lemma", action="store_true", help="add the closed-form rate bound")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("mi", help="mutual information bound after n AWGN relay stages")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--E", type=float, default=1.0)
    p.add_argument("--n-grid", default="1:8:50L")
    p.add_argument("--alphabet", type=int, help="also bound I for a source on this many values")
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("circuit", help="error lower bound for noisy fan-in-k circuits")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--snr-grid", default="-2:2:50L")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("tree", help="relays on a binary tree: moments or simulation")
    p.add_argument("--mu", type=float, default=10.0)
    p.add_argument("--t", type=float, default=0.6)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--simulate", action="store_true")
    _add_sim(p, 10_000)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("control", help="squared correlation through n stages")
    p.add_argument("--sigma0-sq", type=float, default=1.0)
    p.add_argument("--E", type=float, default=1.0)
    p.add_argument("--n-grid", default="1:20:20")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("relay", help="Monte Carlo relay chains")
    p.add_argument("--scheme", choices=("binary", "linear"), default="binary")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=2.0, help="moment order (binary scheme)")
    p.add_argument("--E", type=float, default=1.0, help="relay power (linear scheme)")
    p.add_argument("--sigma0-sq", type=float, default=1.0, help="source variance (linear scheme)")
    _add_sim(p, 100_000)
    p.set_defaults(func=cmd_relay)

    p = sub.add_parser("clt", help="exact smoothed CLT distance for Rademacher sums")
    p.add_argument("--n", default="100:100:1", help="sum lengths, a grid")
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("probe", help="f_alpha ratio after Gaussian smoothing of two-atom pairs")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--q", default="1e-2,1e-3,1e-4")
    p.set_defaults(func=cmd_probe)

    for p in sub.choices.values():
        _add_io(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fast", action="store_true", help="default; lighter determinism check")
    g.add_argument("--full", action="store_true")
    p.add_argument("--only", help="comma list of criterion numbers")
    p.add_argument("--inject-fault", choices=("qfunc",), help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="rerun a manifest and compare output bytes")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        simulated = args.func in (cmd_relay, cmd_probe) or getattr(args, "simulate", False)
        if getattr(args, "figure", None) and simulated:
            raise UsageError("--figure applies to tabular outputs only")
        result = args.func(args)
        if isinstance(result, int):
            return result
        text = render(result, args.format)
        out = _resolve_out(args.out)
        if out is None:
            sys.stdout.write(text)
        else:
            os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
            with open(out, "w", newline="") as fh:
                fh.write(text)
            if not args.no_manifest:
                with open(out + ".manifest.json", "w") as fh:
                    json.dump(_manifest(args, argv, out, text), fh, indent=2, sort_keys=True)
                    fh.write("\n")
        if args.figure:
            from .plotting import plot_table
            plot_table(result.header, result.rows, args.figure, result.title)
    except (UsageError, ValueError) as exc:
        print(f"dobrushin {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is a bug, not bad input
        print(f"dobrushin {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0
