"""Command-line front end: reproducible runs with machine-readable reports.

Subcommands: solve-disc, check-psh, boundary, validate-structure,
estimate-cp.  All floating-point output is printed with 12 significant
digits and reports carry no timestamps, so identical inputs produce
byte-identical output.  Exit codes: 0 success/converged, 2 for a
reported nonconvergence or failed check, 1 for input errors.
"""

import argparse
import os
import sys

import numpy as np

from . import boundary as bd
from . import cauchy as cg
from . import psh
from . import solver as sv
from . import structures as st
from .discgrid import DiscGrid


def _fmt(x):
    return "%.12g" % float(x)


def _parse_point(text, what):
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise SystemExit2("cannot parse %s: %r" % (what, text))
    if not vals or len(vals) % 2:
        raise SystemExit2("%s needs an even number of reals, got %r" % (what, text))
    return np.asarray(vals)


class SystemExit2(Exception):
    """Input error carrying a message for stderr (exit status 1)."""


# ----------------------------------------------------------------------
# config files: flat "key = value" lines with optional [section] headers

_CONFIG_KEYS = {
    "solver.inner_tol": float,
    "solver.outer_tol": float,
    "solver.max_inner": int,
    "solver.max_outer": int,
    "solver.safety_factor": float,
    "solver.auto_rescale": lambda s: s.lower() in ("1", "true", "yes"),
    "solver.sample_count": int,
    "solver.residual_tol": float,
    "solver.max_rescale_halvings": int,
    "sobolev.trial_count": int,
    "boundary.cauchy_tol": float,
    "boundary.mass_tol": float,
    "psh.tol": float,
    "psh.max_strength": float,
    "psh.rel_tol": float,
}


def load_config(path):
    values = {}
    section = ""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise SystemExit2("%s:%d: expected key = value" % (path, lineno))
            key, _, val = line.partition("=")
            key = key.strip()
            full = "%s.%s" % (section, key) if section else key
            if full not in _CONFIG_KEYS:
                raise SystemExit2("%s:%d: unknown config key %r" % (path, lineno, full))
            try:
                values[full] = _CONFIG_KEYS[full](val.strip())
            except ValueError:
                raise SystemExit2("%s:%d: bad value for %s" % (path, lineno, full))
    for key, val in values.items():
        if isinstance(val, float) and key.endswith(("tol", "_tol")) and val <= 0:
            raise SystemExit2("%s: tolerance %s must be positive" % (path, key))
    return values


def _solve_config(cfg_values):
    kwargs = {
        key.split(".", 1)[1]: val
        for key, val in cfg_values.items()
        if key.startswith("solver.")
    }
    return sv.SolveConfig(**kwargs)


# ----------------------------------------------------------------------
# shared context per invocation


class RunContext:
    def __init__(self, args):
        self.seed = args.seed
        self.out = args.out
        try:
            n_r, n_theta = (int(tok) for tok in args.resolution.split(","))
        except ValueError:
            raise SystemExit2("--resolution expects <n_r>,<n_theta>")
        self.n_r, self.n_theta = n_r, n_theta
        self.p = args.p
        self.config = load_config(args.config) if args.config else {}
        os.makedirs(self.out, exist_ok=True)

    def setting(self):
        trials = self.config.get("sobolev.trial_count", 16)
        return cg.default_setting(self.p, self.n_r, self.n_theta, trials)

    def write(self, name, text):
        path = os.path.join(self.out, name)
        with open(path, "w") as fh:
            fh.write(text)
        return path


def _header(ctx, command):
    return [
        "command %s" % command,
        "seed %d" % ctx.seed,
        "resolution %d %d" % (ctx.n_r, ctx.n_theta),
        "p %s" % _fmt(ctx.p),
    ]


# ----------------------------------------------------------------------
# solve-disc


def cmd_solve_disc(ctx, args):
    structure = st.load_structure(args.structure)
    a = st.real_to_complex(_parse_point(args.a, "--a"))
    b = st.real_to_complex(_parse_point(args.b, "--b"))
    if a.size != structure.dimension_n or b.size != structure.dimension_n:
        raise SystemExit2(
            "points must have %d complex components" % structure.dimension_n
        )
    setting = ctx.setting()
    cfg = _solve_config(ctx.config)
    sv.set_default_grid_shape(ctx.n_r, ctx.n_theta)
    lines = _header(ctx, "solve-disc")
    try:
        report = sv.solve_disc_through(structure, a, b, setting, cfg)
    except sv.NonconvergenceError as err:
        lines.append("converged false")
        for i, gap in enumerate(err.gap_history):
            lines.append("outer_gap %d %s" % (i, _fmt(gap)))
        text = "\n".join(lines) + "\n"
        ctx.write("solve_report.txt", text)
        sys.stdout.write(text)
        return 2
    except (sv.ContractionError, sv.IterateEscapeError) as err:
        lines += ["converged false", "reason %s" % err]
        text = "\n".join(lines) + "\n"
        ctx.write("solve_report.txt", text)
        sys.stdout.write(text)
        return 2
    lines += [
        "converged true",
        "residual_lp %s" % _fmt(report.residual_lp),
        "residual_tol %s" % _fmt(cfg.residual_tol),
        "outer_iterations %d" % report.outer_iterations,
        "inner_iterations %s" % " ".join(str(k) for k in report.inner_iterations),
        "q_used %s" % _fmt(report.q_used),
        "cp_used %s" % _fmt(report.cp_used),
        "rescale_factor %s" % _fmt(report.rescale_factor),
        "final_sobolev_norm %s" % _fmt(report.final_sobolev_norm),
    ]
    if report.contraction_rate_observed is not None:
        lines.append(
            "contraction_rate_observed %s" % _fmt(report.contraction_rate_observed)
        )
    for i, gap in enumerate(report.outer_gaps):
        lines.append("outer_gap %d %s" % (i, _fmt(gap)))
    text = "\n".join(lines) + "\n"
    ctx.write("solve_report.txt", text)
    report.u.save(os.path.join(ctx.out, "disc.grid"))
    sys.stdout.write(text)
    if report.residual_lp > cfg.residual_tol:
        return 2
    return 0


# ----------------------------------------------------------------------
# check-psh


def _make_function(args):
    if args.function == "chirka":
        pole = st.real_to_complex(_parse_point(args.pole, "--pole"))
        return psh.chirka_scalar_function(pole, args.strength)
    if args.function == "quadratic":
        return psh.ScalarFunction(
            evaluator=lambda x: np.sum(np.asarray(x) ** 2, axis=-1), smoothness="C0"
        )
    if args.function == "neg-quadratic":
        return psh.ScalarFunction(
            evaluator=lambda x: -np.sum(np.asarray(x) ** 2, axis=-1), smoothness="C0"
        )
    if args.function == "constant":
        return psh.ScalarFunction(
            evaluator=lambda x: np.zeros(np.asarray(x).shape[:-1]), smoothness="C0"
        )
    raise SystemExit2("unknown function %r" % args.function)


def _load_corpus(directory):
    if not os.path.isdir(directory):
        raise SystemExit2("disc corpus directory not found: %s" % directory)
    names = sorted(n for n in os.listdir(directory) if n.endswith(".grid"))
    if not names:
        raise SystemExit2("disc corpus is empty: %s" % directory)
    return names, [DiscGrid.load(os.path.join(directory, n)) for n in names]


def _pole_points(discs, args):
    if args.function != "chirka":
        return None
    pole = st.real_to_complex(_parse_point(args.pole, "--pole"))
    per_disc = []
    for disc in discs:
        target = pole[0] if disc.n_components <= 1 else pole
        zeros = bd.extract_zeros(disc, target)
        per_disc.append([z.location for z in zeros])
    return per_disc


def cmd_check_psh(ctx, args):
    names, discs = _load_corpus(args.discs)
    structure = st.load_structure(args.structure) if args.structure else None
    # log-pole compositions carry interpolation noise near the pole; smooth
    # functions are held to the sharp default
    default_tol = 5e-3 if args.function == "chirka" else 1e-6
    tol = ctx.config.get("psh.tol", args.tol if args.tol is not None else default_tol)
    clearance = 3.0 / discs[0].n_r if args.function == "chirka" else None
    lines = _header(ctx, "check-psh") + ["corpus %d discs" % len(discs)]

    if args.bisect:
        if args.function != "chirka":
            raise SystemExit2("--bisect requires --function chirka")
        pole = st.real_to_complex(_parse_point(args.pole, "--pole"))
        poles = _pole_points(discs, args)
        threshold = psh.find_psh_threshold(
            lambda s: psh.chirka_scalar_function(pole, s),
            discs,
            tol=tol,
            structure=structure,
            max_strength=ctx.config.get("psh.max_strength", 2.0 ** 16),
            rel_tol=ctx.config.get("psh.rel_tol", 0.02),
            pole_points_per_disc=poles,
            pole_clearance=clearance,
        )
        lines.append(
            "a_star %s" % ("unattained" if threshold is None else _fmt(threshold))
        )
        text = "\n".join(lines) + "\n"
        ctx.write("psh_report.txt", text)
        sys.stdout.write(text)
        return 0 if threshold is not None else 2

    func = _make_function(args)
    rejected = 0
    if structure is not None:
        kept = [
            (n, d)
            for n, d in zip(names, discs)
            if sv.residual_lp_norm(d, structure, ctx.p) <= 5e-3
        ]
        rejected = len(discs) - len(kept)
        if not kept:
            raise SystemExit2("no disc in the corpus passed the residual threshold")
        names, discs = [n for n, _ in kept], [d for _, d in kept]
    report = psh.check_psh_along_discs(
        func,
        discs,
        tol=tol,
        pole_points_per_disc=_pole_points(discs, args),
        pole_clearance=clearance,
    )
    lines.append("passes %s" % ("true" if report.passes else "false"))
    lines.append("worst_violation %s" % _fmt(report.worst_violation))
    lines.append("rejected %d" % rejected)
    for i, sub in enumerate(report.per_disc):
        lines.append(
            "disc %s violation %s center %s %s radius %s"
            % (
                names[i],
                _fmt(sub.worst_violation),
                _fmt(sub.worst_center.real),
                _fmt(sub.worst_center.imag),
                _fmt(sub.worst_radius),
            )
        )
    text = "\n".join(lines) + "\n"
    ctx.write("psh_report.txt", text)
    sys.stdout.write(text)
    return 0 if report.passes else 2


# ----------------------------------------------------------------------
# boundary


def _csv(rows, header):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def cmd_boundary(ctx, args):
    u = DiscGrid.load(args.grid)
    mode = args.mode
    cauchy_tol = ctx.config.get("boundary.cauchy_tol", args.cauchy_tol)
    summary = _header(ctx, "boundary") + ["mode %s" % mode]

    if mode == "trace":
        trace = bd.ray_trace(u, args.theta, args.nu, cauchy_tol=cauchy_tol)
        rows = []
        for t, val in trace.samples:
            row = [float(t)]
            for comp in np.atleast_1d(val):
                row += [float(comp.real), float(comp.imag)]
            rows.append(row)
        ncomp = max(1, u.n_components)
        header = ["t"] + sum(
            [["re_%d" % i, "im_%d" % i] for i in range(ncomp)], []
        )
        csv_text = _csv(rows, header)
        summary.append("truncated %s" % ("true" if trace.truncated else "false"))
        summary.append("cauchy_gap %s" % _fmt(trace.cauchy_gap))
        if trace.limit_estimate is None:
            summary.append("limit absent")
        else:
            summary.append(
                "limit %s"
                % " ".join(
                    "%s %s" % (_fmt(c.real), _fmt(c.imag))
                    for c in np.atleast_1d(trace.limit_estimate)
                )
            )
    elif mode == "ntlimit":
        alphas = [float(tok) for tok in args.alphas.split(",")]
        limit = bd.nontangential_limit(u, args.theta, alphas, cauchy_tol=cauchy_tol)
        header = ["theta", "exists"] + sum(
            [["re_%d" % i, "im_%d" % i] for i in range(max(1, u.n_components))], []
        )
        if limit is None:
            rows = [[float(args.theta), 0] + [0.0, 0.0] * max(1, u.n_components)]
            summary.append("limit absent")
        else:
            row = [float(args.theta), 1]
            for comp in np.atleast_1d(limit):
                row += [float(comp.real), float(comp.imag)]
            rows = [row]
            summary.append(
                "limit %s"
                % " ".join(
                    "%s %s" % (_fmt(c.real), _fmt(c.imag))
                    for c in np.atleast_1d(limit)
                )
            )
        csv_text = _csv(rows, header)
    elif mode in ("zeros", "blaschke"):
        point = st.real_to_complex(_parse_point(args.point, "--point"))
        target = point[0] if u.n_components <= 1 else point
        zeros = bd.extract_zeros(u, target)
        rows = [
            [float(z.location.real), float(z.location.imag), z.multiplicity,
             "true" if z.certified else "false"]
            for z in zeros
        ]
        csv_text = _csv(rows, ["re", "im", "multiplicity", "certified"])
        summary.append("zeros %d" % len(zeros))
        summary.append("blaschke_sum %s" % _fmt(bd.blaschke_sum(zeros)))
    elif mode == "riesz":
        if u.n_components > 0:
            raise SystemExit2("riesz mode needs a scalar grid")
        poles = []
        if args.poles:
            for tok in args.poles.split(";"):
                pt = _parse_point(tok, "--poles entry")
                poles.append(complex(pt[0], pt[1]))
        report = bd.riesz_diagnostics(
            u, poles, mass_tol=ctx.config.get("boundary.mass_tol", 0.05)
        )
        rows = [
            [float(z0.real), float(z0.imag), float(mass),
             "true" if cert else "false"]
            for z0, mass, cert in report.point_masses
        ]
        csv_text = _csv(rows, ["re", "im", "mass", "certified"])
        cell_rows = [
            [float(u.radii[j]), float(u.angles[k]), float(report.cell_masses[j, k])]
            for j in range(u.n_r)
            for k in range(u.n_theta)
        ]
        ctx.write(
            "boundary_riesz_cells.csv", _csv(cell_rows, ["r", "theta", "mass"])
        )
        summary += [
            "total_mass %s" % _fmt(report.cell_masses.sum()),
            "weighted_integral %s" % _fmt(report.weighted_integral),
            "representation_residual %s" % _fmt(report.representation_residual),
            "blaschke_sum %s" % _fmt(report.blaschke_sum),
            "boundary_mean %s" % _fmt(report.boundary_mean),
            "center_value %s" % _fmt(report.center_value),
        ]
    else:
        raise SystemExit2("unknown boundary mode %r" % mode)

    ctx.write("boundary_%s.csv" % mode, csv_text)
    text = "\n".join(summary) + "\n"
    ctx.write("boundary_%s.txt" % mode, text)
    sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------
# validate-structure and estimate-cp


def cmd_validate_structure(ctx, args):
    structure = st.load_structure(args.structure)
    report = st.validate_structure(structure, sample_count=args.samples)
    q = st.deficiency_sup_norm(structure, args.samples)
    lines = _header(ctx, "validate-structure") + [
        "dimension_n %d" % structure.dimension_n,
        "domain_radius %s" % _fmt(structure.domain_radius),
        "samples %d" % report.sample_count,
        "max_deviation %s" % _fmt(report.max_deviation),
        "tolerance %s" % _fmt(report.tolerance),
        "deficiency_sup %s" % _fmt(q),
        "valid %s" % ("true" if report.passes else "false"),
    ]
    text = "\n".join(lines) + "\n"
    ctx.write("structure_report.txt", text)
    sys.stdout.write(text)
    return 0 if report.passes else 2


def cmd_estimate_cp(ctx, args):
    setting = ctx.setting()
    lines = _header(ctx, "estimate-cp") + [
        "scale_constant %s" % _fmt(setting.scale_constant),
        "cp_estimate %s" % _fmt(setting.cp_estimate),
        "q_threshold_with_safety %s" % _fmt(1.0 / (16.0 * setting.cp_estimate)),
    ]
    text = "\n".join(lines) + "\n"
    ctx.write("cp_report.txt", text)
    sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------
# argument wiring


def _add_global_flags(sub):
    sub.add_argument("--config", default=None, help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=0, help="recorded in reports")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument(
        "--resolution", default="64,128", help="grid resolution <n_r>,<n_theta>"
    )
    sub.add_argument("--p", type=float, default=4.0, help="integrability exponent")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jholo",
        description="discs compatible with almost complex structures, and their"
        " boundary and plurisubharmonicity diagnostics",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("solve-disc", help="disc through two marked points")
    sp.add_argument("structure", help="structure file (acs v1)")
    sp.add_argument("--a", required=True, help="first point, 2n comma-separated reals")
    sp.add_argument("--b", required=True, help="second point, 2n comma-separated reals")
    _add_global_flags(sp)
    sp.set_defaults(func=cmd_solve_disc)

    sp = subs.add_parser("check-psh", help="subharmonicity along a disc corpus")
    sp.add_argument("--discs", required=True, help="directory of .grid files")
    sp.add_argument(
        "--function",
        default="chirka",
        choices=["chirka", "quadratic", "neg-quadratic", "constant"],
    )
    sp.add_argument("--pole", default="0,0", help="marked point for chirka")
    sp.add_argument("--strength", type=float, default=0.0)
    sp.add_argument("--structure", default=None, help="structure for residual checks")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument(
        "--bisect", action="store_true", help="find the smallest passing strength"
    )
    _add_global_flags(sp)
    sp.set_defaults(func=cmd_check_psh)

    sp = subs.add_parser("boundary", help="boundary diagnostics of a disc grid")
    sp.add_argument("grid", help="disc grid file")
    sp.add_argument(
        "--mode",
        required=True,
        choices=["trace", "ntlimit", "zeros", "blaschke", "riesz"],
    )
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--nu", type=float, default=0.0)
    sp.add_argument("--alphas", default="0.25,0.5,0.75")
    sp.add_argument("--cauchy-tol", type=float, default=1e-4, dest="cauchy_tol")
    sp.add_argument("--point", default="0,0", help="target point for zeros/blaschke")
    sp.add_argument("--poles", default="", help="pole candidates re,im;re,im;...")
    _add_global_flags(sp)
    sp.set_defaults(func=cmd_boundary)

    sp = subs.add_parser("validate-structure", help="check J^2 = -Id on samples")
    sp.add_argument("structure")
    sp.add_argument("--samples", type=int, default=256)
    _add_global_flags(sp)
    sp.set_defaults(func=cmd_validate_structure)

    sp = subs.add_parser("estimate-cp", help="calibrate the transform norm bound")
    _add_global_flags(sp)
    sp.set_defaults(func=cmd_estimate_cp)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = RunContext(args)
        return args.func(ctx, args)
    except SystemExit2 as err:
        sys.stderr.write("error: %s\n" % err)
        return 1
    except (st.StructureError, OSError, ValueError, sv.PointsTooFarError) as err:
        sys.stderr.write("error: %s\n" % err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
