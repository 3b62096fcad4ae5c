"""Command-line front end.

One subcommand per library entry point, CSV with a header row on stdout,
diagnostics on stderr.  Exit codes: 0 success, 1 precondition or domain
error, 2 verification failure, 64 usage error.

Every option can also come from a flat config file (one ``key = value``
per line, ``#`` comments allowed) named with --config; explicit flags
win over the file.  Identical invocations produce byte-identical CSV,
which is why the verify table carries no timing column (timings go to
stderr).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

from ._accel import set_threads
from .field import EnergyParams, load_field, save_field, topological_charge
from .fit import dirichlet_distance, rotation_tilt
from .minimize import MinimizeConfig, minimize, total_energy
from .profiles import (
    BPProfile,
    TruncatedProfile,
    bp_exact_constants,
    sample,
    truncated_energy_closed_form,
)
from .reduced import k_star, reduced_minimize
from .sphere import gap_report
from .verify import SUITES, run_suite

__all__ = ["RunConfig", "main"]

#: flag spelling in config files -> argparse destination
_CONFIG_KEYS = {
    "sigma": "sigma",
    "lambda": "lam",
    "K": "K",
    "rho": "rho",
    "theta": "theta",
    "L": "L",
    "box": "box",
    "n": "n",
    "max-iter": "max_iter",
    "grad-tol": "grad_tol",
    "threads": "threads",
    "seed": "seed",
    "suite": "suite",
    "input": "infile",
    "output": "outfile",
}

_TYPES = {
    "sigma": float, "lam": float, "K": float, "rho": float, "theta": float,
    "L": float, "box": float, "n": int, "max_iter": int, "grad_tol": float,
    "threads": int, "seed": int, "suite": str, "infile": str, "outfile": str,
}


@dataclass(frozen=True)
class RunConfig:
    """Merged options for one invocation: file values under the flags."""

    command: str
    options: dict

    def require(self, *names):
        missing = [n for n in names if self.options.get(n) is None]
        if missing:
            raise ValueError(
                f"{self.command}: missing required option(s): "
                + ", ".join(missing))


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors on exit code 64 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _emit(header, rows):
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def _read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            dest = _CONFIG_KEYS[key]
            values[dest] = _TYPES[dest](value.strip())
    return values


def _merge(args):
    """Config file under flags, then environment, into a RunConfig."""
    options = {k: v for k, v in vars(args).items()
               if k not in ("command", "config")}
    if args.config is not None:
        file_values = _read_config(args.config)
        for dest, value in file_values.items():
            if dest in options and options[dest] is None:
                options[dest] = value
    if options.get("threads") is None and os.environ.get("SKYR_THREADS"):
        options["threads"] = int(os.environ["SKYR_THREADS"])
    return RunConfig(command=args.command, options=options)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(cfg):
    opt = cfg.options
    cfg.require("outfile")
    rho = opt["rho"] if opt["rho"] is not None else 1.0
    theta = opt["theta"] if opt["theta"] is not None else 0.0
    box = opt["box"] if opt["box"] is not None else 20.0
    n = opt["n"] if opt["n"] is not None else 401
    if opt["L"] is not None:
        profile = TruncatedProfile(rho=rho, theta=theta, L=opt["L"])
    else:
        profile = BPProfile(rho=rho, theta=theta)
    fld = sample(profile, box, n)
    save_field(fld, opt["outfile"])
    _emit(["rho", "theta", "L", "box", "n", "h", "charge"],
          [[rho, theta, opt["L"] if opt["L"] is not None else math.inf,
            box, n, fld.h, topological_charge(fld)]])
    return 0


def _cmd_energy(cfg):
    opt = cfg.options
    cfg.require("infile", "sigma", "lam")
    fld = load_field(opt["infile"])
    b = total_energy(fld, EnergyParams(opt["sigma"], opt["lam"]))
    _emit(["exchange", "anisotropy", "dmi", "f_vol", "f_surf", "total"],
          [[b.exchange, b.anisotropy, b.dmi, b.f_vol, b.f_surf, b.total]])
    return 0


def _cmd_minimize(cfg):
    opt = cfg.options
    cfg.require("infile", "sigma", "lam")
    fld = load_field(opt["infile"])
    config = MinimizeConfig(
        max_iter=opt["max_iter"] if opt["max_iter"] is not None else 1000,
        grad_tol=opt["grad_tol"] if opt["grad_tol"] is not None else 1e-3,
    )
    final, report = minimize(fld, EnergyParams(opt["sigma"], opt["lam"]), config)
    if opt["outfile"] is not None:
        save_field(final, opt["outfile"])
    _emit(["iteration", "energy"], list(enumerate(report.trace)))
    print(f"iterations={report.iterations} converged={report.converged} "
          f"charge={report.charge} grad_norm={report.final_grad_norm:.3e}",
          file=sys.stderr)
    return 0


def _cmd_fit(cfg):
    opt = cfg.options
    cfg.require("infile")
    fld = load_field(opt["infile"])
    res = dirichlet_distance(fld)
    p = res.profile
    tilt = rotation_tilt(p.rotation())
    _emit(["rho", "theta", "x0_x", "x0_y", "distance_sq", "excess",
           "ratio", "tilt", "tilted", "converged"],
          [[p.rho, p.theta, p.x0[0], p.x0[1], res.distance_sq, res.excess,
            res.ratio, tilt, tilt > 0.05, res.converged]])
    return 0


def _cmd_charge(cfg):
    opt = cfg.options
    cfg.require("infile")
    fld = load_field(opt["infile"])
    _emit(["charge"], [[topological_charge(fld)]])
    return 0


def _cmd_reduced_min(cfg):
    opt = cfg.options
    cfg.require("sigma", "lam")
    K = opt["K"] if opt["K"] is not None else k_star()
    m = reduced_minimize(opt["sigma"], opt["lam"], K)
    _emit(["sigma", "lambda", "K", "rho0", "theta0_plus", "theta0_minus",
           "L0", "t0", "min_energy"],
          [[opt["sigma"], opt["lam"], K, m.rho0, m.theta0_plus,
            m.theta0_minus, m.L0, m.t0, m.min_energy]])
    return 0


def _cmd_bp_energy(cfg):
    opt = cfg.options
    if opt["L"] is None:
        c = bp_exact_constants()
        _emit(["dirichlet", "dmi", "f_vol", "f_surf"],
              [[c["dirichlet"], c["dmi"], c["f_vol"], c["f_surf"]]])
        return 0
    cfg.require("rho", "sigma", "lam")
    profile = TruncatedProfile(
        rho=opt["rho"],
        theta=opt["theta"] if opt["theta"] is not None else 0.0,
        L=opt["L"],
    )
    b = truncated_energy_closed_form(
        profile, EnergyParams(opt["sigma"], opt["lam"]))
    _emit(["exchange", "anisotropy", "dmi", "f_vol", "f_surf", "total"],
          [[b.exchange, b.anisotropy, b.dmi, b.f_vol, b.f_surf, b.total]])
    return 0


def _cmd_spectral(cfg):
    opt = cfg.options
    n_max = opt["n"] if opt["n"] is not None else 6
    report = gap_report(n_max=n_max, order=max(16, 2 * n_max + 2))
    _emit(["n", "multiplicity", "dirichlet", "eigenvalue", "ratio",
           "dirichlet_residual", "hessian_residual"],
          [[r.n, r.multiplicity, r.dirichlet, r.eigenvalue, r.ratio,
            r.dirichlet_residual, r.hessian_residual] for r in report.rows])
    print(f"gap={report.gap} at n={report.gap_level} "
          f"null_dimension={report.null_dimension}", file=sys.stderr)
    return 0


def _cmd_verify(cfg):
    opt = cfg.options
    suite = opt["suite"] if opt["suite"] is not None else "all"
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from "
                         + ", ".join(sorted(SUITES)))
    results = run_suite(suite, seed=opt["seed"])
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{r.criterion:2d}] {status} {r.name} ({r.seconds:.1f}s)",
              file=sys.stderr)
    _emit(["criterion", "name", "passed", "details"],
          [[r.criterion, r.name, r.passed, r.details] for r in results])
    return 0 if all(r.passed for r in results) else 2


_DISPATCH = {
    "sample": _cmd_sample,
    "energy": _cmd_energy,
    "minimize": _cmd_minimize,
    "fit": _cmd_fit,
    "charge": _cmd_charge,
    "reduced-min": _cmd_reduced_min,
    "bp-energy": _cmd_bp_energy,
    "spectral": _cmd_spectral,
    "verify": _cmd_verify,
}


def _add_flags(p, *names):
    for name in names:
        if name == "lambda":
            p.add_argument("--lambda", dest="lam", type=float, default=None,
                           help="anisotropy interpolation in [0, 1]")
        elif name in ("i", "o"):
            dest = "infile" if name == "i" else "outfile"
            p.add_argument(f"-{name}", dest=dest, default=None,
                           help="input field (SFLD)" if name == "i"
                           else "output field (SFLD)")
        else:
            dest = name.replace("-", "_")
            p.add_argument(f"--{name}", dest=dest, type=_TYPES[dest],
                           default=None)


def build_parser():
    parser = _Parser(prog="skyrm", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None,
                        help="flat key = value file; flags override it")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample", help="sample a profile onto a grid")
    _add_flags(p, "rho", "theta", "L", "box", "n", "o")

    p = sub.add_parser("energy", help="energy breakdown of a stored field")
    _add_flags(p, "i", "sigma", "lambda", "threads")

    p = sub.add_parser("minimize", help="projected gradient descent")
    _add_flags(p, "i", "o", "sigma", "lambda", "max-iter", "grad-tol",
               "threads")

    p = sub.add_parser("fit", help="Dirichlet distance to the profile family")
    _add_flags(p, "i")

    p = sub.add_parser("charge", help="topological charge of a stored field")
    _add_flags(p, "i")

    p = sub.add_parser("reduced-min", help="closed-form reduced minimum")
    _add_flags(p, "sigma", "lambda", "K")

    p = sub.add_parser("bp-energy",
                       help="closed-form profile energies (truncated if --L)")
    _add_flags(p, "rho", "theta", "L", "sigma", "lambda")

    p = sub.add_parser("spectral", help="Hessian spectrum table (--n caps n)")
    _add_flags(p, "n")

    p = sub.add_parser("verify", help="run an acceptance suite")
    _add_flags(p, "suite", "seed", "threads")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 64
    try:
        cfg = _merge(args)
        if cfg.options.get("threads") is not None:
            set_threads(cfg.options["threads"])
        return _DISPATCH[cfg.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"skyrm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
