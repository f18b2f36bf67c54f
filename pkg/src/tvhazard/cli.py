"""Command-line surface: simulate, fit, evaluate, sweep, export.

Exit codes: 0 success, 2 validation/format error, 3 numerical failure,
4 I/O error.  Existing output files are never overwritten without --force.
All randomness flows from the --seed flag; two invocations with identical
inputs and seeds produce bitwise-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .baseline import fit_constant_additive
from .datagen import CampaignSpec, default_scenario, generate
from .formats import FormatError, read_model, read_observations, write_model, write_observations
from .likelihood import nll_dataset
from .penalty import PenaltyConfig
from .solver import NumericalError, SolverConfig, VarianceReduced, fit, nonzero_parameter_count
from .timeline import build_knot_set


def _refuse_overwrite(path, force):
    if path is not None and not force and os.path.exists(path):
        raise FileExistsError(f"refusing to overwrite {path} (use --force)")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def _parse_batch_mode(text):
    if text in (None, "", "full"):
        return None
    parts = text.split(":")
    if len(parts) == 3 and parts[0] == "svrg":
        try:
            return VarianceReduced(epoch_length=int(parts[1]), batch_size=int(parts[2]))
        except ValueError as e:
            raise FormatError(f"bad --batch-mode {text!r}: {e}") from e
    raise FormatError(f"bad --batch-mode {text!r}; expected 'full' or 'svrg:EPOCH_LEN:BATCH'")


def _solver_config(args):
    return SolverConfig(
        penalty=PenaltyConfig(gamma=args.gamma, monotone=args.monotone),
        max_iterations=args.max_iter,
        tolerance=args.tol,
        step_size=args.step_size,
        batch_mode=_parse_batch_mode(args.batch_mode),
        seed=args.seed,
        n_starts=args.n_starts,
    )


def _load_campaign_spec(path, seed):
    if path is None:
        return default_scenario(seed=seed)
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{e.lineno}: {e}") from e
    doc.pop("seed", None)  # the --seed flag is the single source of randomness
    try:
        doc["active"] = tuple(
            (j, tuple((t, v) for t, v in changes)) for j, changes in doc.get("active", ())
        )
        doc["scan_times"] = tuple(doc.get("scan_times", ()))
        return CampaignSpec(seed=seed, **doc)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: bad campaign spec: {e}") from e


def cmd_simulate(args):
    spec = _load_campaign_spec(args.spec, args.seed)
    truth_out = args.truth_out if args.truth_out is not None else args.out + ".truth.json"
    _refuse_overwrite(args.out, args.force)
    _refuse_overwrite(truth_out, args.force)
    truth, observations = generate(spec)
    write_observations(args.out, observations, d=spec.d, horizon=spec.horizon)
    write_model(truth_out, truth)
    print(f"wrote {len(observations)} observations to {args.out}; truth model to {truth_out}")
    return 0


def cmd_fit(args):
    _refuse_overwrite(args.out, args.force)
    report_out = args.report_out if args.report_out is not None else args.out + ".report.json"
    _refuse_overwrite(report_out, args.force)
    observations, header = read_observations(args.observations)
    if not observations:
        raise FormatError(f"{args.observations}: no observation records")
    knots = build_knot_set(observations, horizon=header["horizon"])
    result = fit(observations, _solver_config(args), knots=knots)
    write_model(args.out, result.model)
    _write_json(
        report_out,
        {
            "train_nll": result.train_nll,
            "iterations": result.objective_trace[-1][0],
            "converged": result.converged,
            "nonzero_parameter_count": result.nonzero_parameter_count,
            "objective_trace": [[i, f] for i, f in result.objective_trace],
        },
    )
    print(
        f"fit: converged={result.converged} train_nll={result.train_nll:.6f} "
        f"nonzero={result.nonzero_parameter_count} -> {args.out}"
    )
    return 0


def _check_dimensions(model, header, model_path, obs_path):
    if model.d != header["d"]:
        raise FormatError(
            f"dimension mismatch: model {model_path} has d={model.d}, "
            f"observations {obs_path} have d={header['d']}"
        )


def cmd_evaluate(args):
    model = read_model(args.model)
    observations, header = read_observations(args.observations)
    if not observations:
        raise FormatError(f"{args.observations}: no observation records")
    _check_dimensions(model, header, args.model, args.observations)
    total = nll_dataset(model, observations)
    report = {"n": len(observations), "total_nll": total, "mean_nll": total / len(observations)}
    if args.out is not None:
        _refuse_overwrite(args.out, args.force)
        _write_json(args.out, report)
    print(json.dumps(report, indent=1))
    return 0


def cmd_sweep(args):
    _refuse_overwrite(args.out, args.force)
    try:
        gammas = [float(g) for g in args.gammas.split(",") if g.strip() != ""]
    except ValueError as e:
        raise FormatError(f"bad --gammas {args.gammas!r}: {e}") from e
    if not gammas:
        raise FormatError("empty gamma grid")
    if not 0.0 < args.split < 1.0:
        raise FormatError(f"--split must be in (0, 1), got {args.split}")
    observations, header = read_observations(args.observations)
    if len(observations) < 2:
        raise FormatError("sweep needs at least 2 observations to split")

    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 3)))
    perm = rng.permutation(len(observations))
    n_train = max(1, min(len(observations) - 1, int(args.split * len(observations))))
    train = [observations[i] for i in perm[:n_train]]
    val = [observations[i] for i in perm[n_train:]]
    knots = build_knot_set(train, horizon=header["horizon"])

    rows = []
    for gamma in gammas:
        config = SolverConfig(
            penalty=PenaltyConfig(gamma=gamma, monotone=args.monotone),
            max_iterations=args.max_iter,
            tolerance=args.tol,
            step_size=args.step_size,
            seed=args.seed,
        )
        result = fit(train, config, knots=knots)
        val_nll = nll_dataset(result.model, val)
        rows.append(
            {
                "gamma": gamma,
                "train_nll": result.train_nll / len(train),
                "validation_nll": val_nll / len(val),
                "nonzero_parameter_count": result.nonzero_parameter_count,
            }
        )
        print(
            f"gamma={gamma:g} train={rows[-1]['train_nll']:.6f} "
            f"val={rows[-1]['validation_nll']:.6f} nonzero={rows[-1]['nonzero_parameter_count']}"
        )
    best = min(rows, key=lambda r: r["validation_nll"])
    table = {
        "split": args.split,
        "seed": args.seed,
        "n_train": len(train),
        "n_validation": len(val),
        "rows": rows,
        "best_gamma": best["gamma"],
    }
    if args.out is not None:
        _write_json(args.out, table)
    print(f"best gamma: {best['gamma']:g} (validation mean NLL {best['validation_nll']:.6f})")
    return 0


def cmd_export(args):
    _refuse_overwrite(args.out, args.force)
    model = read_model(args.model)
    if args.features is None:
        indices = [-1] + sorted(model.coefficients)
    else:
        try:
            indices = [int(j) for j in args.features.split(",") if j.strip() != ""]
        except ValueError as e:
            raise FormatError(f"bad --features {args.features!r}: {e}") from e
        for j in indices:
            if not -1 <= j < model.d:
                raise FormatError(f"feature index {j} outside [-1, {model.d})")
    B = model.knots.boundaries()
    ts = sorted({float(t) for t in B} | {0.5 * (a + b) for a, b in zip(B[:-1], B[1:])})
    zero = None
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["feature", "t", "value"])
        for j in indices:
            if j == -1:
                sf = model.intercept
            elif j in model.coefficients:
                sf = model.coefficients[j]
            else:
                sf = zero  # absent row: identically zero
            label = "intercept" if j == -1 else str(j)
            for t in ts:
                value = 0.0 if sf is None else sf(t)
                writer.writerow([label, repr(float(t)), repr(float(value))])
    print(f"wrote coefficient paths for {len(indices)} rows to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvhazard",
        description="Time-varying additive hazard regression with TV-penalized "
        "piecewise-constant coefficient paths.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic censored dataset + truth model")
    p.add_argument("--spec", default=None, help="campaign spec JSON (default: built-in scenario)")
    p.add_argument("--out", required=True, help="observation file to write (JSON lines)")
    p.add_argument("--truth-out", default=None, help="truth model path (default: OUT.truth.json)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the TV-penalized additive hazard model")
    p.add_argument("--observations", required=True)
    p.add_argument("--out", required=True, help="fitted model path")
    p.add_argument("--report-out", default=None, help="fit report path (default: OUT.report.json)")
    _fit_flags(p)
    p.add_argument("--batch-mode", default="full", help="'full' or 'svrg:EPOCH_LEN:BATCH'")
    p.add_argument("--n-starts", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="mean/total NLL of a model on an observation file")
    p.add_argument("--model", required=True)
    p.add_argument("--observations", required=True)
    p.add_argument("--out", default=None, help="also write the report JSON here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="gamma-grid sweep with a seeded train/validation split")
    p.add_argument("--observations", required=True)
    p.add_argument("--gammas", default="0,0.5,1,2,4,8,16", help="comma-separated gamma grid")
    p.add_argument("--split", type=float, default=0.7, help="train fraction")
    _fit_flags(p, gamma=False)
    p.add_argument("--out", default=None, help="sweep table JSON path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="coefficient paths as long-format CSV (feature, t, value)")
    p.add_argument("--model", required=True)
    p.add_argument("--features", default=None, help="comma-separated indices; -1 = intercept")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_export)
    return parser


def _fit_flags(p, gamma=True):
    if gamma:
        p.add_argument("--gamma", type=float, default=1.0, help="TV penalty weight")
    p.add_argument(
        "--monotone",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="constrain coefficient paths to be nondecreasing",
    )
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
