"""Command-line interface.

``rmtclt run --experiment NAME [options]`` runs a named experiment,
``rmtclt tables`` dumps the Chebyshev coefficient tables and
``rmtclt predict`` writes variance predictions.
Exit codes: 0 all checks pass, 1 some check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .chebyshev import coeff_matrix, inverse_coeff_matrix
from .ensembles import ConfigError, parse_key_values
from .experiments import EXPERIMENTS, PRESETS, ExperimentConfig, run
from .partitions import DomainError, SizeGuardError
from .statistics import BACKENDS, ResourceGuardError
from .theory import predict_variances

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (ConfigError, SizeGuardError, ResourceGuardError, DomainError, OSError)


def _add_ensemble_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--ensemble", choices=sorted(PRESETS), help="named ensemble preset")
    p.add_argument("--n", type=int, help="matrix size")
    p.add_argument("--gamma", type=float, help="sparsity exponent in [0, 1]")
    p.add_argument("--m-max", dest="m_max", type=int, help="largest Chebyshev degree")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtclt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    _add_ensemble_flags(r)
    r.add_argument("--replicates", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--backend", choices=BACKENDS)
    r.add_argument("--workers", type=int)

    t = sub.add_parser("tables", help="write the T and t coefficient tables as CSV")
    t.add_argument("--k-max", dest="k_max", type=int, default=10)
    t.add_argument("--out", required=True, help="output directory")

    pr = sub.add_parser("predict", help="write (m, V_limit, V_finite_n, source) rows")
    _add_ensemble_flags(pr)
    return parser


def _merged_config(args, run_keys) -> dict[str, str]:
    cfg = parse_key_values(Path(args.config).read_text()) if args.config else {}
    for key in run_keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = str(val)
    return cfg


def _write_matrix(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row"] + [str(j) for j in range(len(rows))])
        for i, row in enumerate(rows):
            w.writerow([i] + list(row))


def cmd_run(args) -> int:
    keys = ("experiment", "ensemble", "n", "gamma", "m_max", "out", "format",
            "replicates", "seed", "backend", "workers")
    cfg = ExperimentConfig.from_dict(_merged_config(args, keys))
    report = run(cfg)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: measured={c.measured:.6g} predicted={c.predicted:.6g} "
              f"tol={c.tolerance:.3g}")
    print(f"{report.experiment}: {'PASS' if report.passed else 'FAIL'} "
          f"({sum(c.passed for c in report.checks)}/{len(report.checks)} checks, "
          f"{report.wall_clock:.1f}s)")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_tables(args) -> int:
    if args.k_max < 0 or args.k_max > 200:
        raise ConfigError("k_max must lie in [0, 200]")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix(out / "T.csv", coeff_matrix(args.k_max))
    _write_matrix(out / "t.csv", inverse_coeff_matrix(args.k_max))
    print(f"wrote {out / 'T.csv'} and {out / 't.csv'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _merged_config(args, ("ensemble", "n", "gamma"))
    cfg.setdefault("experiment", "clt")
    for key in ("m_max", "out", "format"):
        if getattr(args, key, None) is not None:
            cfg[key] = str(getattr(args, key))
    ec = ExperimentConfig.from_dict(cfg)
    rows = predict_variances(ec.spec, ec.m_max)
    records = [{"m": p.m, "V_limit": p.limit, "V_finite_n": p.finite_n, "source": p.source}
               for p in rows]
    if ec.format == "json":
        text = json.dumps(records, indent=2) + "\n"
    else:
        lines = ["m,V_limit,V_finite_n,source"]
        lines += [f"{r['m']},{r['V_limit']!r},{'' if r['V_finite_n'] is None else repr(r['V_finite_n'])},"
                  f"{r['source']}" for r in records]
        text = "\n".join(lines) + "\n"
    if ec.out:
        out = Path(ec.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"predictions.{ec.format}").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and args.experiment is None and args.config is None:
        parser.error("run needs --experiment or --config")
    handler = {"run": cmd_run, "tables": cmd_tables, "predict": cmd_predict}[args.command]
    try:
        return handler(args)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
