"""Command-line front end: ``ivsens <command> [options]``.

Single analyses print a JSON document; grids (Table-style reproductions,
power curves) are written as CSV.  Every document carries a provenance
block with the full configuration, so a run can be repeated exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from collections import OrderedDict
from dataclasses import asdict, is_dataclass

import numpy as np

from . import __version__
from .core import DataError, MatchedPair, PairedDataset, SensitivityParams, effect_ratio_estimate, validate_dataset
from .design_sens import MixtureSpec, design_sensitivity, mixture_moments, table5
from .heterogeneity import omnibus_test
from .nonbipartite import pair_pairs
from .reference import sens_interval, sens_test, sensitivity_value
from .simulate import FriedmanConfig, PowerConfig, run_omnibus_size, run_power, run_table3
from .variance import build_q_groups, build_q_intercept, build_q_regression

REQUIRED = ("pair_id", "unit", "z", "d", "y")
ENGINE_FLAGS = {"conventional": "intercept", "regression": "regression", "pop": "pairs_of_pairs"}


class InputError(ValueError):
    pass


def _parse(value: str, kind, row: int, col: str):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise InputError(f"row {row}: cannot parse {col}={value!r}") from None


def _parse_binary(value: str, row: int, col: str) -> float:
    v = _parse(value, float, row, col)
    if v not in (0.0, 1.0):
        raise InputError(f"row {row}: {col} must be 0 or 1, got {value!r}")
    return v


def ingest(path, subgroup=None) -> PairedDataset:
    """Read a two-rows-per-pair CSV into a validated dataset.

    Columns: ``pair_id, unit, z, d, y``, covariates ``x_1 .. x_k`` and an
    optional ``subgroup``.  With ``subgroup`` set, only those pairs are kept.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED if c not in header]
        if missing:
            raise InputError(f"missing columns: {', '.join(missing)}")
        xcols = sorted((c for c in header if re.fullmatch(r"x_\d+", c)),
                       key=lambda c: int(c[2:]))
        has_sub = "subgroup" in header
        groups = OrderedDict()
        for row_no, rec in enumerate(reader, start=2):
            pid = (rec.get("pair_id") or "").strip()
            if not pid:
                raise InputError(f"row {row_no}: empty pair_id")
            unit = _parse(rec["unit"], int, row_no, "unit")
            if unit not in (1, 2):
                raise InputError(f"row {row_no}: unit must be 1 or 2, got {rec['unit']!r}")
            x = []
            for c in xcols:
                cell = (rec.get(c) or "").strip()
                if cell == "":
                    raise InputError(f"row {row_no}: missing covariate {c} (pair {pid!r})")
                x.append(_parse(cell, float, row_no, c))
            entry = {
                "row": row_no, "unit": unit,
                "z": _parse_binary(rec["z"], row_no, "z"),
                "d": _parse(rec["d"], float, row_no, "d"),
                "y": _parse(rec["y"], float, row_no, "y"),
                "x": tuple(x),
                "subgroup": (rec.get("subgroup") or "").strip() if has_sub else None,
            }
            groups.setdefault(pid, []).append(entry)
    pairs = []
    for pid, rows in groups.items():
        if len(rows) != 2:
            raise InputError(f"pair {pid!r} has {len(rows)} rows (expected 2; rows "
                             f"{', '.join(str(r['row']) for r in rows)})")
        rows.sort(key=lambda r: r["unit"])
        if rows[0]["unit"] == rows[1]["unit"]:
            raise InputError(f"pair {pid!r}: unit {rows[0]['unit']} appears twice")
        if rows[0]["subgroup"] != rows[1]["subgroup"]:
            raise InputError(f"pair {pid!r}: units disagree on subgroup")
        if subgroup is not None and rows[0]["subgroup"] != subgroup:
            continue
        pairs.append(MatchedPair(
            pair_id=pid,
            z=(rows[0]["z"], rows[1]["z"]), d=(rows[0]["d"], rows[1]["d"]),
            y=(rows[0]["y"], rows[1]["y"]), x=(rows[0]["x"], rows[1]["x"]),
            subgroup=rows[0]["subgroup"]))
    if not pairs:
        raise InputError("no pairs left" + (f" in subgroup {subgroup!r}" if subgroup else ""))
    return validate_dataset(PairedDataset.from_pairs(pairs, covariate_names=xcols))


def _design(data: PairedDataset, engine: str):
    kind = ENGINE_FLAGS[engine]
    if kind == "intercept":
        return build_q_intercept(data.n)
    if kind == "regression":
        return build_q_regression(data)
    return build_q_groups(pair_pairs(data.pair_means).groups())


def _clean(obj):
    """JSON-safe copy: dataclasses to dicts, numpy scalars to Python, infinities to strings."""
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _emit_json(doc: dict, out) -> None:
    text = json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(rows, out) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _provenance(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "fmt")}
    return {"version": __version__, "command": args.command, "config": cfg}


def cmd_estimate(args):
    data = ingest(args.input, args.subgroup)
    return {"lambda_hat": effect_ratio_estimate(data), "n": data.n,
            "mean_exposure_diff": float(np.mean(data.dd)), "k": data.k}


def _params(args, gamma=None) -> SensitivityParams:
    return SensitivityParams(gamma=args.gamma if gamma is None else gamma, alpha=args.alpha,
                             m_reps=args.reps, seed=args.seed)


def cmd_sensitivity(args):
    data = ingest(args.input, args.subgroup)
    q = _design(data, args.engine)
    side = args.side.replace("-", "_")
    res = sens_test(data, args.lambda0, _params(args), q=q, side=side)
    doc = {"result": res, "n": data.n}
    if args.gamma_max is not None:
        sv = sensitivity_value(data, args.lambda0, args.alpha, _params(args, 1.0), q=q,
                               side=side, gamma_max=args.gamma_max)
        doc["sensitivity_value"] = sv
    return doc


def cmd_interval(args):
    data = ingest(args.input, args.subgroup)
    q = _design(data, args.engine)
    ci = sens_interval(data, args.gamma, args.alpha, _params(args), q=q)
    return {"interval": ci, "lambda_hat": effect_ratio_estimate(data), "n": data.n}


def cmd_omnibus(args):
    data = ingest(args.input, args.subgroup)
    if data.k == 0:
        raise InputError("the omnibus test needs covariate columns x_1 .. x_k")
    q = build_q_regression(data) if args.f_engine == "regression" else _design(data, "pop")
    res = omnibus_test(data, beta=args.beta, alpha=args.alpha, q=q, m_reps=args.reps,
                       seed=args.seed, grid_size=args.grid)
    return {"result": res, "n": data.n}


def cmd_design_sens(args):
    if args.table5:
        return table5()
    spec = MixtureSpec.with_compliance(args.lam, args.sigma, args.compliance, args.noise,
                                       args.lambda0)
    mean, e_abs = mixture_moments(spec)
    return {"design_sensitivity": design_sensitivity(spec), "e_zeta": mean, "e_abs_zeta": e_abs,
            "spec": {"lambda": spec.lam, "sigma": spec.sigma, "p_c": spec.p_c,
                     "p_a": spec.p_a, "p_n": spec.p_n, "lambda0": spec.lambda0,
                     "noise": spec.noise}}


def cmd_simulate(args):
    if args.table3:
        configs = [FriedmanConfig(n=args.n, k=args.k, a=a, seed=args.seed + i)
                   for i, a in enumerate((1.0, 2.0))]
        return run_table3(configs, alpha=args.alpha, reps=args.reps, m_reps=args.m_reps)
    if args.power:
        gammas = tuple(float(g) for g in args.gammas.split(","))
        cfg = PowerConfig.septic_vs_nonseptic(args.n_septic, args.n_nonseptic, gammas=gammas,
                                              alpha=args.alpha, reps=args.reps,
                                              m_reps=args.m_reps, seed=args.seed)
        return run_power(cfg)
    if args.omnibus_size:
        rows = []
        for i, a in enumerate((1.0, 2.0)):
            cfg = FriedmanConfig(n=args.n, k=args.k, a=a, seed=args.seed + i)
            rows.append(run_omnibus_size(cfg, reps=args.reps, beta=args.beta, alpha=args.alpha,
                                         m_reps=args.m_reps))
        return rows
    raise InputError("simulate needs one of --table3, --power, --omnibus-size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivsens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--input", required=True, help="paired CSV file")
            p.add_argument("--subgroup", default=None, help="keep only this subgroup")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--reps", type=int, default=10_000, help="Monte Carlo draws M")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default: stdout)")

    p = sub.add_parser("estimate", help="effect-ratio point estimate")
    common(p)
    p.set_defaults(func=cmd_estimate, fmt="json")

    for name, func, helptext in (("sensitivity", cmd_sensitivity, "sensitivity test at gamma"),
                                 ("interval", cmd_interval, "sensitivity interval at gamma")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--lambda0", type=float, default=0.0)
        p.add_argument("--gamma", type=float, default=1.0)
        if name == "sensitivity":
            p.add_argument("--gamma-max", type=float, default=None,
                           help="also search the sensitivity value up to this gamma")
        p.add_argument("--engine", choices=sorted(ENGINE_FLAGS), default="conventional")
        if name == "sensitivity":
            p.add_argument("--side", choices=("greater", "less", "two-sided"), default="greater")
        p.set_defaults(func=func, fmt="json")

    p = sub.add_parser("omnibus", help="test of the proportional-dose model")
    common(p)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--f-engine", choices=("regression", "pop"), default="regression")
    p.set_defaults(func=cmd_omnibus, fmt="json")

    p = sub.add_parser("design-sens", help="design sensitivity of the mixture model")
    p.add_argument("--table5", action="store_true", help="emit the full 20-cell table as CSV")
    p.add_argument("--lam", type=float, default=4.1)
    p.add_argument("--sigma", type=float, default=8.9)
    p.add_argument("--compliance", type=float, default=1.0)
    p.add_argument("--noise", choices=("normal", "laplace"), default="normal")
    p.add_argument("--lambda0", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_design_sens, fmt="auto")

    p = sub.add_parser("simulate", help="simulation studies (CSV output)")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--table3", action="store_true")
    mode.add_argument("--power", action="store_true")
    mode.add_argument("--omnibus-size", action="store_true")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--m-reps", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n-septic", type=int, default=200)
    p.add_argument("--n-nonseptic", type=int, default=25)
    p.add_argument("--gammas", default="1,1.25,1.5,1.75,2,2.25,2.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate, fmt="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (InputError, DataError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.fmt == "csv" or (args.fmt == "auto" and isinstance(result, list)):
        _emit_csv(result, args.out)
    else:
        doc = dict(result)
        doc["provenance"] = _provenance(args)
        _emit_json(doc, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
