"""Command line entry point.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""
import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from ._accel import set_threads
from .errors import ConfigError, NumericalError, SurfEprError

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _oracle(name, params):
    from . import oracles as o
    from .runner import charging_energy_GHz

    def spec(cls):
        try:
            return cls(**params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {name}: {exc}") from None

    table = {
        "elliptic-K": lambda: o.elliptic_K(params["k"]),
        "elliptic-E": lambda: o.elliptic_E(params["k"]),
        "cpc-capacitance": lambda: o.cpc_capacitance(spec(o.CpcSpec)),
        "cpc-psm": lambda: o.cpc_psm(spec(o.CpcSpec)),
        "cpc-psm-semi": lambda: o.cpc_psm_semi_analytic(spec(o.CpcSpec)),
        "gcpw-capacitance": lambda: o.gcpw_capacitance(spec(o.GcpwSpec)),
        "gcpw-psm-closed": lambda: o.gcpw_psm_closed_form(spec(o.GcpwSpec)),
        "gcpw-psm-semi": lambda: o.gcpw_psm_semi_analytic(spec(o.GcpwSpec)),
        "gcpw-psm-rows": lambda: o.gcpw_psm_reference_rows(),
        "image-series": lambda: o.image_series_substrate_pec(**params),
        "ec-ghz": lambda: charging_energy_GHz(params["C_fF"]),
    }
    if name not in table:
        raise ConfigError(f"unknown oracle {name!r}; choose from {sorted(table)}")
    try:
        return table[name]()
    except KeyError as exc:
        raise ConfigError(f"oracle {name} needs parameter {exc}") from None


def _parse_params(items):
    out = {}
    for it in items:
        if "=" not in it:
            raise ConfigError(f"oracle parameters are key=value, got {it!r}")
        k, v = it.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            raise ConfigError(f"parameter {k} must be numeric, got {v!r}") from None
    return out


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="directory for CSV/JSON artifacts")
    common.add_argument("--threads", type=int, metavar="N", default=argparse.SUPPRESS,
                        help="worker threads for compiled kernels")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed recorded with the run and used for any random probes")
    p = argparse.ArgumentParser(prog="surfepr", parents=[common],
                                description="Surface-integral electrostatics: capacitance and participation ratios")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name, hlp in (("cap", "capacitance matrix"), ("epr", "interface participation ratios"),
                      ("converge", "mesh-ladder convergence study"), ("sweep", "E_c-constrained pad sweep"),
                      ("greens-table", "build and export Green's tables")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("config", help="run config JSON")
        if name == "greens-table":
            s.add_argument("--format", choices=("npz", "csv"), default="npz")
    s = sub.add_parser("validate", parents=[common], help="oracle suite and solver fixtures")
    s.add_argument("--quick", action="store_true", help="skip the solver fixture")
    s = sub.add_parser("oracle", parents=[common], help="evaluate a reference formula")
    s.add_argument("name")
    s.add_argument("params", nargs="*", help="key=value")
    return p


def _print(obj):
    print(json.dumps(obj, indent=1, sort_keys=True, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def _dispatch(args):
    from . import runner

    out = getattr(args, "out", None)
    if args.cmd == "oracle":
        _print({"oracle": args.name, "params": _parse_params(args.params),
                "value": _oracle(args.name, _parse_params(args.params))})
        return EXIT_OK
    if args.cmd == "validate":
        rows = runner.run_validate(out, quick=args.quick)
        for r in rows:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}: {r['value']!r} (expected {r['expected']!r})")
        return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VALIDATION
    cfg = runner.RunConfig.load(args.config)
    if args.cmd == "cap":
        C = runner.run_cap(cfg, out)
        _print({"nets": list(C.names), "C_fF": C.C, "n_elements": C.meta["n_elements"]})
    elif args.cmd == "epr":
        rep = runner.run_epr(cfg, out)
        _print({"P": rep.ratios, "denominator_fF_V2": rep.denominator, "gamma_per_s": rep.meta.get("gamma_per_s")})
    elif args.cmd == "converge":
        rows = runner.run_convergence(cfg, out)
        _print(rows)
    elif args.cmd == "sweep":
        rows, opt = runner.run_sweep(cfg, out, log=lambda r: print(json.dumps(r), file=sys.stderr))
        _print({"optimum": opt, "points": len(rows)})
    elif args.cmd == "greens-table":
        tabs = runner.tables_for(cfg)
        if tabs is None:
            print("stackup has no scattered field; nothing to tabulate", file=sys.stderr)
            return EXIT_OK
        os.makedirs(out or ".", exist_ok=True)
        paths = []
        for s, t in sorted(tabs.tables.items()):
            path = os.path.join(out or ".", f"greens_s{s}.{args.format}")
            (t.save_npz if args.format == "npz" else t.save_csv)(path)
            paths.append(path)
        _print({"files": paths})
    return EXIT_OK


def main(argv=None):
    warnings.filterwarnings("ignore", module="numba")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if getattr(args, "threads", None):
        set_threads(args.threads)
    seed = getattr(args, "seed", None)
    if seed is not None:
        np.random.seed(seed)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SurfEprError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
