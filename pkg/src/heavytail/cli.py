"""
Command-line front end.

Every subcommand prints JSON (or writes CSV for contours and simulation
tables).  Exit status is 0 on success, 2 on invalid input and 3 when a
numerical routine fails.
"""
import argparse
import csv
import json
import math
import sys

import numpy as np

from . import combine, confregion, divide_combine, netmeta, nulldist, sim
from .confregion import StudySummary1D, SubStudy
from .errors import NumericError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DIGITS = 9


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def fmt(x):
    """Round to 9 significant digits; non-finite values become strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{DIGITS}g}")
    if isinstance(x, np.ndarray):
        return [fmt(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    return x


def emit(payload, out=None):
    out = out or sys.stdout
    out.write(json.dumps(fmt(payload)) + "\n")


def cell(x):
    v = fmt(x)
    return "" if v is None else v


def write_csv(path, header, rows):
    f = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        wr = csv.writer(f)
        wr.writerow(header)
        for r in rows:
            wr.writerow([cell(v) for v in r])
    finally:
        if f is not sys.stdout:
            f.close()


def interval_json(ci):
    if ci.is_empty:
        return {"status": "EMPTY"}
    return {"status": "INTERVAL", "lo": ci.lo, "hi": ci.hi}


# --------------------------------------------------------------------------
# input parsing
# --------------------------------------------------------------------------

def floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise ValueError(f"cannot parse numbers from {text!r}")


def _opt_float(text, default):
    text = (text or "").strip()
    if text == "" or text.lower() in ("inf", "infinity"):
        return default
    return float(text)


def _rows(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def read_studies(path):
    """studies.csv: ``theta_hat,sigma_hat,df,weight``; blank df = inf, blank weights = equal."""
    rows = _rows(path)
    for col in ("theta_hat", "sigma_hat"):
        if col not in rows[0]:
            raise ValueError(f"{path}: missing column {col!r}")
    studies, weights = [], []
    for r in rows:
        studies.append(StudySummary1D(float(r["theta_hat"]), float(r["sigma_hat"]),
                                      _opt_float(r.get("df"), np.inf)))
        weights.append(_opt_float(r.get("weight"), None) if r.get("weight") else None)
    if all(w is None for w in weights):
        return studies, None
    if any(w is None for w in weights):
        raise ValueError(f"{path}: give a weight for every study or for none")
    return studies, weights


def read_substudies(path):
    """substudies.json: ``{d, substudies: [{P, xi, sigma, df, weight}]}``."""
    with open(path) as f:
        doc = json.load(f)
    d = int(doc["d"])
    subs, weights = [], []
    for i, s in enumerate(doc["substudies"]):
        xi = np.atleast_1d(np.asarray(s["xi"], dtype=float))
        P = s.get("P")
        P = np.eye(d) if P is None else np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[1] != d:
            raise ValueError(f"substudy {i}: P must have {d} columns")
        df = s.get("df")
        df = np.inf if df in (None, "inf", "") else float(df)
        subs.append(SubStudy(xi, s["sigma"], P, df))
        weights.append(s.get("weight"))
    if all(w is None for w in weights):
        return subs, None
    if any(w is None for w in weights):
        raise ValueError(f"{path}: give a weight for every substudy or for none")
    return subs, [float(w) for w in weights]


def read_matrix(path):
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    return X


def read_contrasts(path):
    """contrasts.csv: ``study,treat1,treat2,te,se_te[,df]``."""
    out = []
    for r in _rows(path):
        out.append(netmeta.Contrast(r["study"], r["treat1"], r["treat2"], float(r["te"]),
                                    float(r["se_te"]), _opt_float(r.get("df"), np.inf)))
    return out


def read_arms(path):
    """arms.csv: ``study,treatment,mean,sd,n``."""
    rows = [(r["study"], r["treatment"], r["mean"], r["sd"], r["n"]) for r in _rows(path)]
    return netmeta.expand_arms(rows)


def _level(x):
    x = float(x)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return x


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_combine(a):
    p = floats(a.p)
    w = floats(a.weights) if a.weights else None
    emit({"method": a.method, "statistic": combine.statistic(a.method, p, w),
          "global_p": combine.global_pvalue(a.method, p, w)})


def cmd_calibrate(a):
    if a.weights:
        w = floats(a.weights)
        if a.m is not None and a.m != len(w):
            raise ValueError(f"--m {a.m} but {len(w)} weights")
    elif a.m is not None:
        w = nulldist.Weights.equal(a.m).values
    else:
        raise ValueError("give --m or --weights")
    emit({"method": a.method, "alpha": a.alpha, "m": len(w),
          "threshold": combine.threshold(a.method, w, a.alpha)})


def _empty_diag(studies, w):
    return {"status": "EMPTY", "lower_bound": confregion.lower_bound_stat(studies, w)}


def cmd_interval(a):
    studies, w = read_studies(a.studies)
    if a.method == "cct":
        parts = confregion.cct_invert_grid(studies, w, a.level)
        if not parts:
            emit({"status": "EMPTY", "components": []})
        else:
            emit({"status": "UNION", "components": [list(p) for p in parts]})
        return
    if a.adaptive:
        subs = [SubStudy.from_1d(s) for s in studies]
        region, dropped = confregion.adaptive_nonempty(subs, a.method, w, a.level)
        ci = confregion.invert_1d(studies, a.method, region.weights, a.level)
        out = interval_json(ci)
        out["dropped"] = dropped
        emit(out)
        return
    ci = confregion.invert_1d(studies, a.method, w, a.level)
    emit(_empty_diag(studies, w) if ci.is_empty else interval_json(ci))


def _region_json(region):
    out = {"status": "EMPTY" if region.is_empty else "NONEMPTY", "method": region.kind,
           "level": region.level, "threshold": region.threshold,
           "min_score": region.min_score, "bounded": region.bounded}
    if not region.is_empty:
        out["point_estimate"] = region.point_estimate
    return out


def _region(a):
    subs, w = read_substudies(a.substudies)
    return confregion.build_region(subs, a.method, w, a.level)


def cmd_region(a):
    region = _region(a)
    out = _region_json(region)
    if a.contour:
        if region.is_empty:
            raise ValueError("cannot draw the contour of an empty region")
        pts = confregion.contour_2d(region, a.n_angles)
        write_csv(a.contour, ["x", "y"], pts)
        out["contour"] = a.contour
    if a.points:
        P = read_matrix(a.points)
        out["contains"] = [bool(confregion.contains(region, p)) for p in P]
    emit(out)


def _parse_fixed(text):
    out = {}
    for item in (text or "").split(","):
        if not item.strip():
            continue
        k, _, v = item.partition("=")
        if not _:
            raise ValueError(f"--fixed entries look like index=value, got {item!r}")
        out[int(k)] = float(v)
    return out


def cmd_slice(a):
    region = _region(a)
    free = [int(v) for v in a.free.split(",")]
    res = confregion.slice_region(region, _parse_fixed(a.fixed), free)
    if len(free) == 1:
        emit(interval_json(res))
        return
    if len(res) == 0:
        emit({"status": "EMPTY"})
        return
    if a.contour:
        write_csv(a.contour, ["x", "y"], res)
        emit({"status": "NONEMPTY", "contour": a.contour, "n": len(res)})
    else:
        emit({"status": "NONEMPTY", "polygon": res})


def cmd_simci(a):
    region = _region(a)
    out = _region_json(region)
    out["intervals"] = []
    for text in a.b:
        b = floats(text)
        ci = confregion.simultaneous_ci(region, b)
        out["intervals"].append(dict(interval_json(ci), b=b))
    emit(out)


def cmd_dac(a):
    X = read_matrix(a.samples)
    region = divide_combine.dac_region(X, a.d0, a.method, a.level)
    out = _region_json(region)
    out["blocks"] = divide_combine.coordinate_blocks(X.shape[1], a.d0).m
    if a.theta:
        out["covers"] = bool(divide_combine.dac_covers(X, a.d0, floats(a.theta), a.method, a.level))
    emit(out)


def cmd_netmeta(a):
    if bool(a.contrasts) == bool(a.arms):
        raise ValueError("give exactly one of --contrasts and --arms")
    cs = read_contrasts(a.contrasts) if a.contrasts else read_arms(a.arms)
    ref = a.reference or netmeta.default_reference(cs)
    d_fit = (netmeta.wls_fit(cs, ref) if a.method == "wls"
             else netmeta.hcct_fit(cs, ref, a.level, a.method))
    out = {"method": a.method, "reference": ref, "treatments": d_fit.treatments,
           "theta_hat": d_fit.theta_hat,
           "dropped": [f"{cs[j].study}:{cs[j].treat_a}-{cs[j].treat_b}"
                       for j in d_fit.dropped]}
    if a.pairwise:
        dirs = netmeta.pairwise_directions(d_fit.d)
        names = [ref] + d_fit.treatments
        if a.method == "wls":
            cis = netmeta.wls_simultaneous(d_fit, a.level, [b for _, _, b in dirs])
        else:
            cis = [confregion.simultaneous_ci(d_fit.region, b) for _, _, b in dirs]
        rows = []
        for (tag, idx, _), ci in zip(dirs, cis):
            i, j = (idx + 1, 0) if tag == "ref" else (idx[0] + 1, idx[1] + 1)
            rows.append(dict(interval_json(ci), comparison=f"{names[i]} - {names[j]}"))
        out["intervals"] = rows
    emit(out)


SIM_COLUMNS = ["experiment", "method", "corr", "m", "rho", "alpha", "level", "dist", "d",
               "n", "d0", "r", "s", "reps", "seed", "rate", "coverage", "mean_width",
               "empty_rate", "wls_coverage"]


def cmd_simulate(a):
    scale = sim.FULL if a.full_scale else sim.DESK
    rhos = floats(a.rho)
    rows = []
    for rho in rhos:
        row = dict.fromkeys(SIM_COLUMNS)
        row.update(experiment=a.experiment, method=a.method, rho=rho, seed=a.seed)
        if a.experiment in ("fpr", "power", "coverage"):
            m = a.m or scale["m"]
            reps = a.reps or scale["reps"]
            kind = a.corr if rho > 0 else "identity"
            spec = sim.CorrSpec(kind, m, rho)
            row.update(corr=kind, m=m, reps=reps)
            if a.experiment == "fpr":
                row.update(alpha=a.alpha, rate=sim.experiment_fpr(
                    a.method, spec, a.alpha, reps, a.seed, a.workers))
            elif a.experiment == "power":
                sig = sim.SignalSpec(a.r, a.s, m)
                row.update(alpha=a.alpha, r=a.r, s=a.s, rate=sim.experiment_power(
                    a.method, spec, sig, a.alpha, reps, a.seed, a.workers))
            else:
                res = sim.experiment_coverage_1d(spec, a.level, reps, a.seed, a.method, a.workers)
                row.update(level=a.level, coverage=res.coverage, mean_width=res.mean_width,
                           empty_rate=res.empty_rate)
        elif a.experiment == "dac":
            reps = a.reps or scale["reps_region"]
            row.update(corr="equi", dist=a.dist, d=a.d, n=a.n, d0=a.d0, level=a.level,
                       reps=reps, coverage=sim.experiment_dac(
                           a.dist, a.d, a.n, a.d0, rho, a.level, reps, a.seed, a.method,
                           a.workers))
        else:
            reps = a.reps or scale["reps_region"]
            res = sim.experiment_netmeta(rho, reps, a.seed, a.level, workers=a.workers)
            row.update(corr="equi", level=a.level, reps=reps, coverage=res.hcct,
                       wls_coverage=res.wls)
        rows.append([row[c] for c in SIM_COLUMNS])
    write_csv(a.out, SIM_COLUMNS, rows)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="heavytail",
                                 description="Heavy-tailed p-value combination and inference.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        return p

    def level(p):
        p.add_argument("--level", type=_level, default=0.95)

    def region_method(p, choices=("hcct", "ehmp", "cct")):
        p.add_argument("--method", choices=choices, default="hcct")

    p = add("combine", cmd_combine, "combine p-values into a global p-value")
    p.add_argument("--p", required=True, help="comma-separated p-values")
    p.add_argument("--weights", help="comma-separated weights (default equal)")
    p.add_argument("--method", choices=combine.KINDS, default="hcct")

    p = add("calibrate", cmd_calibrate, "critical value of the HCCT/EHMP statistic")
    p.add_argument("--m", type=int)
    p.add_argument("--weights")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=("hcct", "ehmp"), default="hcct")

    p = add("interval", cmd_interval, "confidence interval from scalar studies")
    p.add_argument("--studies", required=True)
    p.add_argument("--adaptive", action="store_true",
                   help="drop outlying studies until the interval is nonempty")
    level(p)
    region_method(p)

    for name, fn, help_ in (("region", cmd_region, "confidence region from sub-studies"),
                            ("slice", cmd_slice, "restrict a region to coordinates"),
                            ("simci", cmd_simci, "simultaneous intervals for b'theta")):
        p = add(name, fn, help_)
        p.add_argument("--substudies", required=True)
        level(p)
        region_method(p, ("hcct", "ehmp"))
        if name == "region":
            p.add_argument("--contour", help="write the 2-D boundary polygon to this CSV")
            p.add_argument("--n-angles", type=int, default=256)
            p.add_argument("--points", help="CSV of points to test for membership")
        elif name == "slice":
            p.add_argument("--fixed", default="", help="index=value pairs, e.g. 0=1.5,2=0")
            p.add_argument("--free", required=True, help="one or two free indices")
            p.add_argument("--contour", help="CSV path for a 2-D slice polygon")
        else:
            p.add_argument("--b", action="append", required=True,
                           help="comma-separated direction; repeat for several")

    p = add("dac", cmd_dac, "divide-and-combine region for a mean vector")
    p.add_argument("--samples", required=True)
    p.add_argument("--d0", type=int, required=True)
    p.add_argument("--theta", help="report whether this mean vector is covered")
    level(p)
    region_method(p, ("hcct", "ehmp"))

    p = add("netmeta", cmd_netmeta, "fixed-effects network meta-analysis")
    p.add_argument("--contrasts")
    p.add_argument("--arms")
    p.add_argument("--reference")
    p.add_argument("--pairwise", action="store_true", help="add all pairwise intervals")
    level(p)
    p.add_argument("--method", choices=("hcct", "ehmp", "wls"), default="hcct")

    p = add("simulate", cmd_simulate, "Monte-Carlo experiments, tidy CSV output")
    p.add_argument("--experiment", choices=("fpr", "coverage", "power", "dac", "netmeta"),
                   required=True)
    p.add_argument("--method", choices=combine.KINDS, default="hcct")
    p.add_argument("--rho", default="0", help="comma-separated correlations")
    p.add_argument("--corr", choices=("equi", "ar1"), default="equi")
    p.add_argument("--m", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    level(p)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--dist", choices=("normal", "lognormal"), default="normal")
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d0", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-scale", action="store_true",
                   help="use full-scale replicate counts (slow)")
    p.add_argument("--out", default="-", help="CSV path (default stdout)")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.fn(args)
    except (ArithmeticError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
