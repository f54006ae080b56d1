"""Command-line front end.

Every subcommand turns its arguments into a plain ``config`` dict, runs it,
and embeds the config in JSON output so ``rerun`` can reproduce the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import analysis, stability
from .errors import ConfigurationError, SingularityError, SolverDivergence
from .problems import PROBLEMS, get_problem
from .quadrature import (NAMED_FAMILIES, NodeFamily, lebesgue_max, make_rule, rule_from_nodes,
                         wn_constants)
from .sweeper import Provisional, SolveOptions, SweepKind, SweepScheme, integrate, preset

SCHEMES = [k.value for k in SweepKind]
FAMILIES = [f.value for f in NodeFamily]
PROVISIONALS = [p.value for p in Provisional]
BASES = [b.value for b in analysis.BaseRule]

PRESET_HELP = (
    "presets (--order q): M = q uniform nodes and the fewest corrections lifting "
    "the provisional order to q, e.g. explicit-sdc q=3 -> M=3, 2 corrections; "
    "trapezoid-sdc q=4 -> M=4, 1 correction"
)


# ---------------------------------------------------------------------------
# Argument parsing helpers


def _parse_int_range(text: str) -> list:
    """``"5"`` -> [5]; ``"2..20"`` -> [2, ..., 20]; ``"2,4,8"`` -> [2, 4, 8]."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"cannot parse integer range {text!r}") from None


def _parse_meshes(text: str) -> list:
    """``"4:512"`` -> doubling sequence 4, 8, ..., 512; or an explicit comma list."""
    text = str(text).strip()
    if ":" in text:
        try:
            lo, hi = (int(t) for t in text.split(":"))
        except ValueError:
            raise ConfigurationError(f"cannot parse mesh range {text!r}") from None
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"invalid mesh range {text!r}")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    return _parse_int_range(text)


def _parse_pair(text):
    if text is None:
        return None
    try:
        lo, hi = (float(t) for t in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"expected 'lo,hi', got {text!r}") from None
    return [lo, hi]


def _parse_number(text):
    if text is None:
        return None
    try:
        v = complex(str(text).replace(" ", ""))
    except ValueError:
        raise ConfigurationError(f"cannot parse number {text!r}") from None
    return v.real if v.imag == 0 else [v.real, v.imag]


def _to_number(v):
    if isinstance(v, list):
        return complex(v[0], v[1])
    return v


def _add_rule_args(p, with_m=True):
    p.add_argument("--family", default="uniform",
                   help=f"node family: {', '.join(FAMILIES)} (default uniform)")
    if with_m:
        p.add_argument("-M", dest="M", default=None, help="number of quadrature nodes")
    p.add_argument("--nodes", default=None,
                   help="comma-separated custom nodes in [0,1] (implies --family custom)")


def _add_scheme_args(p):
    p.add_argument("--scheme", default="explicit-sdc", help=f"sweep kind: {', '.join(SCHEMES)}")
    p.add_argument("--order", type=int, default=None, help=PRESET_HELP)
    p.add_argument("--corrections", type=int, default=None, help="number of correction sweeps")
    p.add_argument("--theta", type=float, default=1.0, help="implicit-sdc difference scaling")
    p.add_argument("--provisional", default=None,
                   help=f"provisional method: {', '.join(PROVISIONALS)}")
    p.add_argument("--newton-tol", dest="newton_tol", type=float, default=1e-12)
    p.add_argument("--newton-max-iter", dest="newton_max_iter", type=int, default=50)
    p.add_argument("--sweep-tol", dest="sweep_tol", type=float, default=None,
                   help="sweep until iterates change by less than this (overrides --corrections)")


def _add_problem_args(p):
    p.add_argument("--problem", default="linear", help=f"problem: {', '.join(PROBLEMS)}")
    p.add_argument("--lam", default=None, help="linear: lambda (complex allowed, e.g. -1+2j)")
    p.add_argument("--explicit-part", dest="explicit_part", default=None,
                   help="linear: portion of lambda treated explicitly by split schemes")
    p.add_argument("--eps", type=float, default=None, help="vdp: stiffness parameter")
    p.add_argument("--y0", default=None, help="initial value, comma-separated")
    p.add_argument("-T", dest="T", type=float, default=None, help="final time")


def _add_output_args(p):
    p.add_argument("--format", default="csv", help="output format: csv, json")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picard-sdc",
        description="Picard iteration and spectral deferred correction integrators.",
        epilog=(f"schemes: {', '.join(SCHEMES)}; families: {', '.join(FAMILIES)}; "
                f"provisionals: {', '.join(PROVISIONALS)}; bases: {', '.join(BASES)}; "
                f"problems: {', '.join(PROBLEMS)}. {PRESET_HELP}. "
                "Exit codes: 0 success, 1 solver divergence, 2 configuration error."),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quadrature", help="nodes, weights, W_n and Lagrange maxima")
    _add_rule_args(q)
    q.add_argument("--wn", action="store_true", help="also report W_n per subinterval")
    q.add_argument("--table1", action="store_true",
                   help="max |l_m| grid over -M range and all named families")
    _add_output_args(q)

    s = sub.add_parser("solve", help="integrate a problem and print the trajectory")
    _add_rule_args(s)
    _add_scheme_args(s)
    _add_problem_args(s)
    s.add_argument("--steps", type=int, default=100, help="number of uniform time steps")
    _add_output_args(s)

    c = sub.add_parser("converge", help="convergence study over doubling meshes")
    _add_rule_args(c)
    _add_scheme_args(c)
    _add_problem_args(c)
    c.add_argument("--meshes", default="4:512", help="'lo:hi' doubling range or comma list")
    c.add_argument("--norm", default="absolute", help="error norm: absolute, relative")
    _add_output_args(c)

    st = sub.add_parser("stability", help="|rho(z)| on a grid of z = lambda h")
    _add_rule_args(st)
    _add_scheme_args(st)
    st.add_argument("--re", default=None, help="real range 'lo,hi'")
    st.add_argument("--im", default=None, help="imaginary range 'lo,hi'")
    st.add_argument("--nx", type=int, default=401)
    st.add_argument("--ny", type=int, default=401)
    st.add_argument("--explicit-part", dest="explicit_part", default=None,
                    help="split schemes: explicit portion of z")
    _add_output_args(st)

    k = sub.add_parser("coeffs", help="correction-error coefficients per subinterval")
    _add_rule_args(k)
    k.add_argument("--base", default="trapezoid", help=f"base rule: {', '.join(BASES)}")
    _add_output_args(k)

    r = sub.add_parser("rerun", help="re-execute the config embedded in a JSON output")
    r.add_argument("config", help="JSON file written by another subcommand")
    r.add_argument("--output", "-o", default=None)
    return parser


# ---------------------------------------------------------------------------
# Config construction


def config_from_args(args) -> dict:
    cfg = {"command": args.command}
    if args.command == "rerun":
        return cfg
    fmt = args.format.lower()
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown format {args.format!r}; valid: csv, json")
    cfg["format"] = fmt

    family = NodeFamily.parse(args.family).value
    nodes = None
    if args.nodes is not None:
        try:
            nodes = [float(Fraction(t.strip())) for t in args.nodes.split(",")]
        except ValueError:
            raise ConfigurationError(f"cannot parse nodes {args.nodes!r}") from None
        family = NodeFamily.CUSTOM.value
    elif family == NodeFamily.CUSTOM.value:
        raise ConfigurationError("--family custom requires --nodes")
    cfg["family"] = family
    cfg["nodes"] = nodes

    if args.command == "quadrature":
        Ms = _parse_int_range(args.M) if args.M is not None else ([len(nodes)] if nodes else [3])
        cfg.update(M=Ms, wn=args.wn, table1=args.table1)
        return cfg

    if args.command == "coeffs":
        cfg["M"] = _single_m(args.M, nodes, 3)
        cfg["base"] = analysis.BaseRule.parse(args.base).value
        return cfg

    kind = SweepKind.parse(args.scheme)
    prov = Provisional.parse(args.provisional).value if args.provisional else None
    M = _single_m(args.M, nodes, None)
    corrections = args.corrections
    if args.order is not None:
        pM, pscheme = preset(kind, args.order, prov, args.theta)
        M = pM if M is None else M
        corrections = pscheme.corrections if corrections is None else corrections
    cfg["scheme"] = SweepScheme(kind, corrections or 0, args.theta, prov).describe()
    cfg["solver"] = {"newton_tol": args.newton_tol, "newton_max_iter": args.newton_max_iter,
                     "fixed_point_tol": args.sweep_tol}
    _options(cfg)
    cfg["M"] = 3 if M is None else M

    if args.command == "stability":
        cfg.update(re=_parse_pair(args.re), im=_parse_pair(args.im), nx=args.nx, ny=args.ny,
                   explicit_part=_parse_number(args.explicit_part) or 0.0)
        return cfg

    cfg["problem"] = _problem_config(args)
    cfg["T"] = args.T
    if args.command == "solve":
        cfg["steps"] = args.steps
    else:
        cfg["meshes"] = _parse_meshes(args.meshes)
        if args.norm not in ("absolute", "relative"):
            raise ConfigurationError(f"unknown norm {args.norm!r}; valid: absolute, relative")
        cfg["norm"] = args.norm
    return cfg


def _single_m(text, nodes, default):
    if nodes is not None:
        return len(nodes)
    if text is None:
        return default
    Ms = _parse_int_range(text)
    if len(Ms) != 1:
        raise ConfigurationError("this subcommand takes a single -M value")
    return Ms[0]


def _problem_config(args) -> dict:
    name = args.problem
    if name not in PROBLEMS:
        raise ConfigurationError(f"unknown problem {name!r}; valid problems: {', '.join(PROBLEMS)}")
    params = {}
    if name == "linear":
        params["lam"] = _parse_number(args.lam) if args.lam is not None else -1.0
        params["explicit_part"] = _parse_number(args.explicit_part) or 0.0
    elif args.lam is not None or args.explicit_part is not None:
        raise ConfigurationError("--lam/--explicit-part apply only to the linear problem")
    if name == "vdp" and args.eps is not None:
        params["eps"] = args.eps
    if args.y0 is not None:
        if name == "linear":
            raise ConfigurationError("the linear problem always starts from y0 = 1")
        try:
            params["y0"] = [float(t) for t in args.y0.split(",")]
        except ValueError:
            raise ConfigurationError(f"cannot parse --y0 {args.y0!r}") from None
    return {"name": name, "params": params}


# ---------------------------------------------------------------------------
# Execution


def _rule(cfg, M=None):
    if cfg.get("nodes"):
        return rule_from_nodes(cfg["nodes"])
    return make_rule(cfg["family"], cfg["M"] if M is None else M)


def _scheme(cfg) -> SweepScheme:
    s = cfg["scheme"]
    return SweepScheme(s["kind"], s["corrections"], s["theta"], s["provisional"])


def _options(cfg) -> SolveOptions:
    s = cfg["solver"]
    if s["newton_max_iter"] < 1:
        raise ConfigurationError("--newton-max-iter must be >= 1")
    return SolveOptions(newton_tol=s["newton_tol"], newton_max_iter=s["newton_max_iter"],
                        fixed_point_tol=s["fixed_point_tol"])


def _system(cfg):
    params = dict(cfg["problem"]["params"])
    for key in ("lam", "explicit_part"):
        if key in params:
            params[key] = _to_number(params[key])
    if "y0" in params:
        params["y0"] = tuple(params["y0"])
    return get_problem(cfg["problem"]["name"], **params)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(cfg, payload: dict) -> str:
    doc = {"schema_version": analysis.SCHEMA_VERSION, "config": cfg}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    return repr(float(x))


def run_quadrature(cfg) -> str:
    if cfg["table1"]:
        rows = analysis.table1_report(cfg["M"])
        names = [f.value for f in NAMED_FAMILIES]
        if cfg["format"] == "json":
            return _json(cfg, {"table1": [{"M": M, **vals} for M, vals in rows]})
        return _csv([[M] + [f"{vals[n]:.3f}" for n in names] for M, vals in rows], ["M"] + names)

    out_rows, payload = [], []
    for M in cfg["M"]:
        rule = _rule(cfg, M)
        lmax = lebesgue_max(rule)
        wn = wn_constants(rule) if cfg["wn"] else None
        entry = {"family": rule.family.value, "M": rule.M, "nodes": rule.nodes.tolist(),
                 "boundaries": rule.boundaries.tolist(), "weights": rule.weights.tolist(),
                 "lebesgue_max": lmax}
        if wn is not None:
            entry["wn"] = wn.tolist()
        payload.append(entry)
        for n in range(rule.N):
            row = [rule.family.value, rule.M, n + 1, _fmt(rule.boundaries[n]),
                   _fmt(rule.boundaries[n + 1])]
            row += [_fmt(w) for w in rule.weights[n]]
            row += [_fmt(wn[n]) if wn is not None else "", _fmt(lmax)]
            out_rows.append(row)
    if cfg["format"] == "json":
        return _json(cfg, {"rules": payload})
    width = max(len(r) for r in out_rows)
    M_max = width - 7
    header = ["family", "M", "n", "left", "right"] + [f"w{m + 1}" for m in range(M_max)]
    header += ["W_n", "lebesgue_max"]
    padded = [r[:-2] + [""] * (width - len(r)) + r[-2:] for r in out_rows]
    return _csv(padded, header)


def run_coeffs(cfg) -> str:
    rule = _rule(cfg)
    cc = analysis.correction_coefficients(rule, cfg["base"])
    orders = analysis.coefficient_order(cc, rule)
    fracs = cc.as_fractions()
    if cfg["format"] == "json":
        return _json(cfg, {
            "rule": rule.label,
            "base": cc.base.value,
            "coefficients": cc.coeffs.tolist(),
            "fractions": [[str(f) for f in row] for row in fracs],
            "order": orders,
        })
    header = ["n", "left", "right"] + [f"c{m + 1}" for m in range(rule.M)] + ["fraction", "h_power"]
    rows = []
    for n in range(rule.N):
        rows.append([n + 1, _fmt(rule.boundaries[n]), _fmt(rule.boundaries[n + 1])]
                    + [_fmt(c) for c in cc.coeffs[n]]
                    + [" ".join(str(f) for f in fracs[n]), orders[n]])
    return _csv(rows, header)


def run_solve(cfg) -> str:
    system, rule, scheme = _system(cfg), _rule(cfg), _scheme(cfg)
    T = system.T if cfg["T"] is None else cfg["T"]
    traj = integrate(rule, system, scheme, T, cfg["steps"], _options(cfg))
    if not np.all(np.isfinite(traj)):
        raise SolverDivergence("non-finite values in the trajectory")
    times = np.linspace(0.0, T, cfg["steps"] + 1)
    if np.iscomplexobj(traj):
        cols = [f"y{j + 1}_{part}" for j in range(traj.shape[1]) for part in ("re", "im")]
        flat = np.column_stack([c for j in range(traj.shape[1])
                                for c in (traj[:, j].real, traj[:, j].imag)])
    else:
        cols = [f"y{j + 1}" for j in range(traj.shape[1])]
        flat = traj
    if cfg["format"] == "json":
        return _json(cfg, {"t": times.tolist(), "y": flat.tolist(), "columns": cols})
    return _csv([[_fmt(t)] + [_fmt(v) for v in row] for t, row in zip(times, flat)], ["t"] + cols)


def run_converge(cfg) -> str:
    system, rule, scheme = _system(cfg), _rule(cfg), _scheme(cfg)
    rep = analysis.convergence_study(system, scheme, rule, cfg["T"], cfg["meshes"],
                                     _options(cfg), norm=cfg["norm"])
    if all(e is None for e in rep.errors):
        raise SolverDivergence("every mesh failed: " + "; ".join(rep.failures.values()))
    if cfg["format"] == "json":
        return _json(cfg, {"report": rep.to_dict()})
    return rep.to_csv()


def run_stability(cfg) -> str:
    grid = stability.scan_region(_scheme(cfg), _rule(cfg), cfg["re"], cfg["im"], cfg["nx"],
                                 cfg["ny"], _options(cfg), explicit_part=_to_number(cfg["explicit_part"]))
    if cfg["format"] == "json":
        doc = json.loads(grid.to_json())
        doc.pop("schema_version")
        return _json(cfg, doc)
    return grid.to_csv()


RUNNERS = {
    "quadrature": run_quadrature,
    "coeffs": run_coeffs,
    "solve": run_solve,
    "converge": run_converge,
    "stability": run_stability,
}


def execute(cfg: dict) -> str:
    try:
        runner = RUNNERS[cfg["command"]]
    except KeyError:
        raise ConfigurationError(f"unknown command {cfg.get('command')!r}") from None
    return runner(cfg)


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict) or "config" not in doc:
        raise ConfigurationError(f"{path} has no embedded config")
    if doc.get("schema_version") != analysis.SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return doc["config"]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config) if args.command == "rerun" else config_from_args(args)
        text = execute(cfg)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverDivergence, SingularityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
