"""Command-line front end: one subcommand per analysis, JSON run manifests."""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
from datetime import datetime, timezone
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .aluthge import convergence_report
from .classify import (
    m_convex_check, m_convex_target_binomial, moment_lil, pattern_recurrence,
    similarity_walk, structure_diagnostics, window_distance_profile,
)
from .dynamics import classify_dynamics, orbit_statistics
from .errors import GrammarError, HypothesisError, NonConvergenceError, RwslabError
from .hardy import classify_membership, lil_statistic, norm_monte_carlo, parse_sequence
from .rng import label_stream
from .shift import truncate
from .spectral import (
    adjoint_point_test, default_grid, numerical_range, predict_spectral_picture, smin_grid,
)
from .vonneumann import (
    n_spectrum_empirical, n_spectrum_exact, normal_domination_verdict, parse_modulus_set,
    parse_shift, shift_domination_verdict, tuples_up_to,
)
from .weightlaw import law_stats, parse_law, sample_weights

# ---------------------------------------------------------------- JSON output


def _fmt_float(x):
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def _encode(obj, indent, level):
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number, bool)) or v is None for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in seq) + "\n" + pad + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0)


# ------------------------------------------------------------------ helpers


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise GrammarError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise GrammarError(f"expected comma-separated integers, got {text!r}") from None


def _complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise GrammarError(f"not a complex number: {text!r}") from None


def _need_law(args):
    if not args.law:
        raise GrammarError(f"{args.command}: --law is required")
    return parse_law(args.law)


def _sample(args, law, length, trial=0):
    stream = label_stream(args.command, trial)
    return sample_weights(law, length, seed=args.seed, stream=stream)


class _Runner:
    """Order-preserving map over trials, threaded when ``threads > 1``."""

    def __init__(self, threads):
        self.threads = max(1, int(threads))

    def map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands


def cmd_stats(args, run):
    stats = law_stats(_need_law(args))
    return stats.as_dict(ps=args.p)


def cmd_sample(args, run):
    s = _sample(args, _need_law(args), args.length)
    return {"length": s.length, "stream": s.stream, "weights": s.weights}


def cmd_radii(args, run):
    return predict_spectral_picture(law_stats(_need_law(args))).as_dict()


def cmd_pseudospectrum(args, run):
    law = _need_law(args)
    sample = _sample(args, law, args.N - 1)
    shift = truncate(sample, args.N)
    pts = default_grid(law_stats(law).R, size=args.grid, margin=args.margin)
    # smin depends on |lambda| only: solve once per modulus, split across workers
    mods, inv = np.unique(np.abs(pts), return_inverse=True)
    chunks = [c for c in np.array_split(mods, run.threads) if c.size]
    parts = run.map(lambda c: smin_grid(shift, c), chunks)
    smin = np.concatenate([p.smin for p in parts])[inv.reshape(-1)]
    ok = np.concatenate([p.converged for p in parts])[inv.reshape(-1)]
    if not ok.all():
        raise NonConvergenceError(f"smallest singular value bisection failed at {int((~ok).sum())} grid points")
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(("re", "im", "smin"))
    for z, s in zip(pts, smin):
        w.writerow((format(z.real, ".17g"), format(z.imag, ".17g"), format(s, ".17g")))
    return {"N": args.N, "gridSize": args.grid, "points": int(pts.size),
            "minSmin": float(smin.min()), "maxSmin": float(smin.max())}, rows.getvalue()


def cmd_pointspec(args, run):
    law = _need_law(args)
    sample = _sample(args, law, args.N)
    res = adjoint_point_test(sample, _complex(args.lam), args.N)
    lps = res.log_partial_sums
    return {"lambda": _complex(args.lam), "verdict": res.verdict, "r0": res.r0,
            "logPartialSum": {"half": float(lps[args.N // 2 - 1]), "full": float(lps[-1])}}


def cmd_numrange(args, run):
    law = _need_law(args)
    shift = truncate(_sample(args, law, args.N - 1), args.N)
    nr = numerical_range(shift, K=args.K)
    return {"N": args.N, "numericalRadius": nr.radius, "R": law_stats(law).R}


def cmd_hardy(args, run):
    law = _need_law(args)
    if not args.sequence:
        raise GrammarError("hardy: --sequence is required")
    seq = parse_sequence(args.sequence)
    out = {"sequence": args.sequence,
           "classification": classify_membership(seq, law, ps=args.p).as_dict()}
    if args.trials:
        mc = norm_monte_carlo(seq, law, args.N, args.trials, seed=args.seed, map_fn=run.map)
        out["monteCarlo"] = {
            "N": mc.N,
            "divergentFraction": mc.divergent_fraction,
            "trials": [{"logPartialSums": t.log_partial_sums, "maxTermLog": t.max_term_log,
                        "tailMaxLog": t.tail_max_log, "divergent": t.divergent} for t in mc.trials],
        }
    return out


def cmd_lil(args, run):
    law = _need_law(args)
    if not args.sequence:
        raise GrammarError("lil: --sequence is required")
    hi, lo = lil_statistic(parse_sequence(args.sequence), law, n_max=args.nmax)
    return {"sequence": args.sequence, "nMax": args.nmax, "runningMax": hi, "runningMin": lo}


def cmd_vn(args, run):
    law = _need_law(args)
    if args.spectrum:
        n_in_t, t_in_n = normal_domination_verdict(law, parse_modulus_set(args.spectrum))
        return {"spectrum": args.spectrum, "N<T": n_in_t, "T<N": t_in_n}
    if not args.shift:
        raise GrammarError("vn: --shift or --spectrum is required")
    A = parse_shift(args.shift)
    dirs = ("A<T", "T<A") if args.direction == "both" else (args.direction,)
    return {"shift": A.describe(),
            **{d: shift_domination_verdict(A, law, d, s_max=args.smax).as_dict() for d in dirs}}


def cmd_nspectrum(args, run):
    if args.shift:
        spec = n_spectrum_exact(parse_shift(args.shift), args.n)
        return {"n": args.n, "size": len(spec), "tuples": [list(t) for t in sorted(spec.tuples)]}
    law = _need_law(args)
    if args.targets:
        targets = [_floats(t) for t in args.targets.split(";") if t.strip()]
    else:
        ess = law.ess_range()
        if not ess.is_discrete:
            raise GrammarError("nspectrum: --targets needed for a continuous law")
        targets = [t for t in tuples_up_to(ess.atoms, args.n) if len(t) == args.n]
    sample = _sample(args, law, args.length)
    rep = n_spectrum_empirical(sample, args.n, args.eps, targets)
    return {"n": args.n, "eps": args.eps, "coverage": rep.coverage,
            "witnesses": [{"tuple": list(k), "firstStart": v} for k, v in rep.witnesses.items()]}


def cmd_dynamics(args, run):
    return classify_dynamics(law_stats(_need_law(args))).as_dict()


def cmd_orbit(args, run):
    law = _need_law(args)

    def one(i):
        return orbit_statistics(_sample(args, law, args.N, trial=i), args.N).as_dict()

    return {"N": args.N, "trials": run.map(one, range(args.trials))}


def cmd_aluthge(args, run):
    law = _need_law(args)
    depths = _ints(args.depths)
    need = args.K + max(depths)
    length = max(need, min(args.sup_window or need, 10**7) + max(depths))

    def one(i):
        return convergence_report(_sample(args, law, length, trial=i), depths, args.K,
                                  sup_window=args.sup_window).as_dict()

    return {"K": args.K, "trials": run.map(one, range(args.trials))}


def cmd_classify(args, run):
    law = _need_law(args)
    sample = _sample(args, law, args.N)
    out = {"N": args.N, "structure": structure_diagnostics(
        sample, min(args.N, sample.length), law, trials=args.trials, seed=args.seed).as_dict()}
    if args.pattern:
        rep = pattern_recurrence(sample, _floats(args.pattern), args.tol)
        out["recurrence"] = {"pattern": list(rep.pattern), "hits": rep.count, "firstHit": rep.first_hit}
    if args.target:
        tgt = _floats(args.target)
        d = window_distance_profile(sample, tgt, args.N - len(tgt) + 1)
        out["windowDistance"] = {"target": list(tgt), "distance": d.distance, "argmin": d.argmin}
    if args.law_b:
        other = sample_weights(parse_law(args.law_b), args.N, seed=args.seed,
                               stream=label_stream(args.command, 1))
        out["similarityWalk"] = similarity_walk(sample, other, args.N)
    return out


def cmd_mconvex(args, run):
    law = _need_law(args)
    res = m_convex_check(law, args.m, args.trials, seed=args.seed)
    return {"m": res.m, "estimate": res.estimate, "stderr": res.stderr, "target": res.target,
            "targetBinomial": m_convex_target_binomial(law, args.m), "zScore": res.z_score}


def cmd_momentlil(args, run):
    law = _need_law(args)
    coeffs = [_complex(c) for c in args.coeffs.split(",")] if args.coeffs else None
    extra = 0 if coeffs is None else len(coeffs) - 1

    def one(i):
        s = _sample(args, law, args.k - 1 + extra + args.nmax, trial=i)
        r = moment_lil(s, k=args.k, coeffs=coeffs, n_max=args.nmax)
        return {"runningMax": r.run_max, "runningMin": r.run_min,
                "argmax": r.argmax, "argmin": r.argmin}

    return {"k": args.k, "nMax": args.nmax, "exploratory": coeffs is not None,
            "trials": run.map(one, range(args.trials))}


# ------------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--law", help="weight law, e.g. two_point:a=2,b=0.5,p=0.5")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the manifest (or CSV grid) here instead of stdout")
    common.add_argument("--config", help="key = value file supplying defaults for flags")
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get("RWSLAB_THREADS", "1") or 1))

    parser = argparse.ArgumentParser(prog="rwslab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rwslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("stats", cmd_stats, "closed-form radii and moments of a law")
    p.add_argument("--p", type=_floats, default=(1.0, 2.0))
    p = add("sample", cmd_sample, "draw a seeded weight sample")
    p.add_argument("--length", type=int, default=10)
    add("radii", cmd_radii, "predicted spectral picture")
    p = add("pseudospectrum", cmd_pseudospectrum, "smin(lambda I - T_N) on a grid (CSV)")
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--margin", type=float, default=0.5)
    p = add("pointspec", cmd_pointspec, "adjoint point-spectrum test at lambda")
    p.add_argument("--lam", default="0.5")
    p.add_argument("--N", type=int, default=10_000)
    p = add("numrange", cmd_numrange, "numerical radius of T_N")
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--K", type=int, default=64)
    for name, fn, help_ in (("hardy", cmd_hardy, "membership of a coefficient sequence"),
                            ("lil", cmd_lil, "LIL statistic of a coefficient sequence")):
        p = add(name, fn, help_)
        p.add_argument("--sequence")
        p.add_argument("--p", type=_floats, default=(1.0,))
        p.add_argument("--N", type=int, default=10**5)
        p.add_argument("--trials", type=int, default=0)
        p.add_argument("--nmax", type=int, default=10**6)
    p = add("vn", cmd_vn, "domination verdicts against a deterministic or normal operator")
    p.add_argument("--shift", help="prefix=..;period=.. or bilateral;period=..")
    p.add_argument("--spectrum", help="circle:r / disk:r / annulus:a,b / point:z joined by ;")
    p.add_argument("--direction", choices=("A<T", "T<A", "both"), default="both")
    p.add_argument("--smax", type=int, default=6)
    p = add("nspectrum", cmd_nspectrum, "exact or empirical n-spectrum")
    p.add_argument("--shift")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--targets", help="tuples separated by ;")
    p.add_argument("--length", type=int, default=10**5)
    add("dynamics", cmd_dynamics, "linear-dynamics verdicts for the backward shift")
    p = add("orbit", cmd_orbit, "orbit statistics per trial")
    p.add_argument("--N", type=int, default=10**5)
    p.add_argument("--trials", type=int, default=1)
    p = add("aluthge", cmd_aluthge, "iterated Aluthge transform convergence")
    p.add_argument("--depths", default="16,1024")
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--sup-window", dest="sup_window", type=int, default=10**5)
    p.add_argument("--trials", type=int, default=1)
    p = add("classify", cmd_classify, "recurrence, window distance and structure diagnostics")
    p.add_argument("--N", type=int, default=10**4)
    p.add_argument("--pattern")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--target")
    p.add_argument("--law-b", dest="law_b")
    p.add_argument("--trials", type=int, default=10_000)
    p = add("mconvex", cmd_mconvex, "Monte Carlo check of the m-convexity identity")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--trials", type=int, default=10**5)
    p = add("momentlil", cmd_momentlil, "moment LIL running extremes")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--coeffs")
    p.add_argument("--nmax", type=int, default=10**5)
    p.add_argument("--trials", type=int, default=1)
    return parser, sub


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise GrammarError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise GrammarError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


def _parse(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        subparser = sub.choices[args.command]
        known = {a.dest for a in subparser._actions}
        bad = sorted(set(cfg) - known - {"config"})
        if bad:
            raise GrammarError(f"config: unknown keys {bad}")
        subparser.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def _parameters(args):
    skip = {"func", "command", "law", "seed", "out", "config", "threads"}
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())
            if k not in skip}


def execute(argv):
    """Run one subcommand; returns ``(exit_code, manifest or None)``."""
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    except GrammarError as exc:
        print(f"rwslab: error: {exc}", file=sys.stderr)
        return 2, None
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        if args.threads < 1:
            raise GrammarError("--threads must be >= 1")
        payload = args.func(args, _Runner(args.threads))
    except (GrammarError, NonConvergenceError, HypothesisError, RwslabError) as exc:
        print(f"rwslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code, None
    except ValueError as exc:
        print(f"rwslab: invalid arguments: {exc}", file=sys.stderr)
        return 2, None
    grid = None
    if isinstance(payload, tuple):
        payload, grid = payload
    manifest = {
        "toolVersion": __version__,
        "command": args.command,
        "argv": list(argv),
        "law": args.law,
        "seed": args.seed,
        "parameters": _parameters(args),
        "startedAt": started.isoformat(),
        "duration": time.perf_counter() - t0,
        "results": payload,
    }
    text = dumps(manifest) + "\n"
    if grid is not None:
        if not args.out:
            print("rwslab: error: pseudospectrum needs --out for its CSV grid", file=sys.stderr)
            return 2, manifest
        with open(args.out, "w") as fh:
            fh.write(grid)
        with open(args.out + ".json", "w") as fh:
            fh.write(text)
    elif args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0, manifest


def main(argv=None):
    code, _ = execute(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
