"""Command-line front door; every run leaves a CSV and a JSON manifest.

Subcommands: ``simulate`` sweeps the missingness study grid, ``fit``
estimates GEV parameters from an hourly CSV, ``return-levels`` adds
bootstrap standard errors under block filters, ``detide`` removes the
harmonic tide, and ``demo-missingness`` writes the small illustrative
datasets for the three deletion mechanisms.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np

from gevmiss import __version__
from gevmiss.blocking import (
    BlockSummary,
    FlaggedSeries,
    filter_summaries,
    nonempty,
    partition_calendar,
    partition_fixed,
)
from gevmiss.errors import ConfigError, DataError, NumericalError
from gevmiss.estimation import WeightedMaxima, fit_mle, fit_pwm
from gevmiss.missingness import MissingnessSpec, apply_mar, apply_mcar
from gevmiss.simstudy import ParentSpec, SimConfig, run_study, write_rows
from gevmiss.surge import DEFAULT_CONSTITUENTS, detide, fit_tide, ingest_csv, write_surge_csv
from gevmiss.uncertainty import BootstrapConfig, bootstrap_return_levels
from gevmiss.weights import EmpiricalCdf, weigh_blocks

logger = logging.getLogger(__name__)

SIM_CONFIG_KEYS = frozenset(
    {
        "parent",
        "rate",
        "df",
        "a",
        "b",
        "mechanism",
        "n",
        "k",
        "pbm",
        "pm",
        "apm",
        "mar_spread",
        "deterministic_counts",
        "replications",
        "seed",
        "cvm_step",
    }
)

DEMO_DRAWS = 75
DEMO_BLOCK = 15
DEMO_RATE = 0.2
DEMO_MCAR_PM = 0.3
DEMO_MAR_APM = 0.3
DEMO_MNAR_TOP = 0.25


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _resolve_seed(explicit: int | None, fallback: int | None = None) -> int:
    if explicit is not None:
        return explicit
    if fallback is not None:
        return fallback
    seed = int(np.random.SeedSequence().generate_state(1)[0])
    logger.warning("no seed given; drew %d (recorded in the manifest)", seed)
    return seed


def _resolve_jobs(requested: int | None) -> int:
    if requested:
        return requested
    env = os.environ.get("GEVMISS_JOBS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"GEVMISS_JOBS must be an integer, got {env!r}") from exc
    return 1


def _write_manifest(
    path: str,
    subcommand: str,
    config: dict,
    seed: int,
    outputs: list[str],
    started: str,
) -> None:
    payload = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": outputs,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, default=str)
        handle.write("\n")


def _manifest_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + "_manifest.json"


def _args_config(args: argparse.Namespace) -> dict:
    return {key: value for key, value in vars(args).items() if key != "func"}


# -- simulate -----------------------------------------------------------------


def _read_config(path: str) -> dict[str, str]:
    try:
        handle = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw: dict[str, str] = {}
    with handle:
        for lineno, line in enumerate(handle, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path} line {lineno}: expected key=value, got {text!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            if key in raw:
                raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
            raw[key] = value.strip()
    unknown = sorted(set(raw) - SIM_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config key(s) {unknown}")
    return raw


def _float_list(value: str, key: str) -> list[float]:
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"config key {key} must be comma-separated numbers, got {value!r}") from exc


def _int_list(value: str, key: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"config key {key} must be comma-separated integers, got {value!r}") from exc


def _float_or_none(raw: dict[str, str], key: str) -> float | None:
    if key not in raw:
        return None
    try:
        return float(raw[key])
    except ValueError as exc:
        raise ConfigError(f"config key {key} must be a number, got {raw[key]!r}") from exc


def _bool_key(raw: dict[str, str], key: str, default: bool) -> bool:
    if key not in raw:
        return default
    value = raw[key].lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ConfigError(f"config key {key} must be true or false, got {raw[key]!r}")


def _require(raw: dict[str, str], key: str) -> str:
    if key not in raw:
        raise ConfigError(f"config is missing required key {key!r}")
    return raw[key]


def _build_sim_configs(raw: dict[str, str], seed: int) -> list[SimConfig]:
    parent = ParentSpec(
        family=_require(raw, "parent"),
        rate=_float_or_none(raw, "rate"),
        df=_float_or_none(raw, "df") if "df" in raw else 5.0,
        a=_float_or_none(raw, "a"),
        b=_float_or_none(raw, "b"),
    )
    mechanism = _require(raw, "mechanism")
    n_list = _int_list(_require(raw, "n"), "n")
    k_list = _int_list(_require(raw, "k"), "k")
    replications = int(_float_or_none(raw, "replications") or 1000)
    cvm_step = _float_or_none(raw, "cvm_step") or 0.02
    mar_spread = _float_or_none(raw, "mar_spread") or 0.2
    deterministic = _bool_key(raw, "deterministic_counts", False)

    if mechanism == "mar":
        apm_list = _float_list(_require(raw, "apm"), "apm")
        combos = list(itertools.product(apm_list, k_list, n_list))
        configs = [
            SimConfig(
                parent=parent,
                n=n,
                k=k,
                spec=MissingnessSpec(
                    mechanism="mar",
                    apm=apm,
                    mar_spread=mar_spread,
                    deterministic_counts=deterministic,
                ),
                replications=replications,
                seed=seed,
                cvm_step=cvm_step,
            )
            for apm, k, n in combos
        ]
    else:
        pbm_list = _float_list(_require(raw, "pbm"), "pbm")
        pm_list = _float_list(_require(raw, "pm"), "pm")
        combos = list(itertools.product(pbm_list, pm_list, k_list, n_list))
        configs = [
            SimConfig(
                parent=parent,
                n=n,
                k=k,
                spec=MissingnessSpec(
                    mechanism=mechanism,
                    pbm=pbm,
                    pm=pm,
                    deterministic_counts=deterministic,
                ),
                replications=replications,
                seed=seed,
                cvm_step=cvm_step,
            )
            for pbm, pm, k, n in combos
        ]
    return configs


def cmd_simulate(args: argparse.Namespace) -> int:
    started = _now()
    raw = _read_config(args.config)
    config_seed = int(raw["seed"]) if "seed" in raw else None
    seed = _resolve_seed(args.seed, config_seed)
    configs = _build_sim_configs(raw, seed)
    jobs = _resolve_jobs(args.jobs)
    logger.info("running %d grid cell(s) with %d job(s)", len(configs), jobs)
    rows = run_study(configs, n_jobs=jobs)
    write_rows(rows, args.out)
    manifest = _manifest_path(args.out)
    _write_manifest(manifest, "simulate", dict(raw), seed, [args.out], started)
    logger.info("wrote %s and %s", args.out, manifest)
    return 0


# -- shared ingestion and blocking --------------------------------------------


def _load_series(args: argparse.Namespace) -> FlaggedSeries:
    return ingest_csv(
        args.input,
        timestamp_column=args.timestamp_column,
        value_column=args.value_column,
        timestamp_format=args.timestamp_format,
        missing_sentinel=args.missing_sentinel,
    )


def _block_series(series: FlaggedSeries, args: argparse.Namespace) -> list[BlockSummary]:
    if args.calendar:
        return partition_calendar(series)
    return partition_fixed(series, args.block_size)


def _add_series_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", required=True, help="input CSV path")
    sub.add_argument("--timestamp-column", default="timestamp")
    sub.add_argument("--value-column", default="level")
    sub.add_argument("--timestamp-format", default=None, help="strptime format; ISO-8601 when omitted")
    sub.add_argument("--missing-sentinel", default="", help="value field marking a missing entry")


def _add_blocking_arguments(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--block-size", type=int, help="fixed entries per block")
    group.add_argument("--calendar", action="store_true", help="one block per calendar year")


# -- fit ----------------------------------------------------------------------


def cmd_fit(args: argparse.Namespace) -> int:
    started = _now()
    seed = _resolve_seed(args.seed, 0)
    series = _load_series(args)
    summaries = _block_series(series, args)
    usable = nonempty(summaries)
    if not usable:
        raise DataError("no block has an observed entry")
    ecdf = EmpiricalCdf(series.observed_values()) if args.weights == "conditional" else None
    blocks = weigh_blocks(usable, args.weights, ecdf)
    data = WeightedMaxima.from_blocks(blocks)
    report = fit_mle(data) if args.method == "mle" else fit_pwm(data)

    params_path = args.out_prefix + "_params.csv"
    with open(params_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["method", "weights", "mu", "sigma", "xi", "converged", "objective", "iterations"]
        )
        writer.writerow(
            [
                args.method,
                args.weights,
                repr(report.params.mu),
                repr(report.params.sigma),
                repr(report.params.xi),
                int(report.converged),
                "" if report.objective is None else repr(report.objective),
                report.iterations,
            ]
        )

    weight_by_index = {b.index: b.weight for b in blocks}
    blocks_path = args.out_prefix + "_blocks.csv"
    with open(blocks_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["block", "n_obs", "n_miss", "observed_max", "weight"])
        for s in summaries:
            writer.writerow(
                [
                    s.index,
                    s.n_obs,
                    s.n_miss,
                    "" if s.observed_max is None else repr(s.observed_max),
                    "" if s.index not in weight_by_index else repr(weight_by_index[s.index]),
                ]
            )

    manifest = args.out_prefix + "_manifest.json"
    _write_manifest(manifest, "fit", _args_config(args), seed, [params_path, blocks_path], started)
    for note in report.warnings:
        logger.warning("%s", note)
    if not report.converged:
        logger.error("fit did not converge; outputs written for inspection")
        return 4
    logger.info("wrote %s and %s", params_path, blocks_path)
    return 0


# -- return levels ------------------------------------------------------------


def cmd_return_levels(args: argparse.Namespace) -> int:
    started = _now()
    seed = _resolve_seed(args.seed, 0)
    series = _load_series(args)
    summaries = _block_series(series, args)
    filtered = filter_summaries(summaries, args.filter)
    usable = nonempty(filtered)
    if len(usable) < args.min_k:
        raise DataError(
            f"{args.filter!r} filter left {len(usable)} usable blocks; "
            f"resampling requires at least {args.min_k}"
        )
    try:
        T_list = tuple(float(t) for t in args.T.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"--T must be comma-separated numbers, got {args.T!r}") from exc
    cfg = BootstrapConfig(B=args.bootstrap, min_k=args.min_k, seed=seed, T_list=T_list)
    ecdf = EmpiricalCdf(series.observed_values())
    methods = ("mle", "pwm") if args.method == "all" else (args.method,)
    schemes = (
        ("observed", "unconditional", "conditional")
        if args.weights == "all"
        else (args.weights,)
    )

    header = ["method", "weights", "filter"]
    for t in T_list:
        header += [f"level_{t:g}", f"se_{t:g}"]
    header.append("replicates_used")

    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for method, scheme in itertools.product(methods, schemes):
            data = WeightedMaxima.from_blocks(weigh_blocks(usable, scheme, ecdf))
            estimates = bootstrap_return_levels(data, method, cfg)
            row: list = [method, scheme, args.filter]
            for est in estimates:
                row += [repr(est.level), repr(est.se)]
            row.append(estimates[0].replicates_used)
            writer.writerow(row)

    manifest = _manifest_path(args.out)
    _write_manifest(manifest, "return-levels", _args_config(args), seed, [args.out], started)
    logger.info("wrote %s", args.out)
    return 0


# -- detide -------------------------------------------------------------------


def _parse_constituents(text: str | None) -> tuple[tuple[str, float], ...]:
    if text is None:
        return DEFAULT_CONSTITUENTS
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, sep, speed = chunk.partition(":")
        if not sep:
            raise ConfigError(f"constituent {chunk!r} must look like NAME:DEG_PER_HOUR")
        try:
            pairs.append((name.strip(), float(speed)))
        except ValueError as exc:
            raise ConfigError(f"bad constituent speed in {chunk!r}") from exc
    if not pairs:
        raise ConfigError("constituent list is empty")
    return tuple(pairs)


def cmd_detide(args: argparse.Namespace) -> int:
    started = _now()
    seed = _resolve_seed(args.seed, 0)
    series = _load_series(args)
    constituents = _parse_constituents(args.constituents)
    model = fit_tide(series, constituents, args.mean_model)
    for con in model.constituents:
        logger.info(
            "constituent %s: speed %.7f deg/h, amplitude %.4f, phase %.2f deg",
            con.name,
            con.speed,
            con.amplitude,
            con.phase,
        )
    surge = detide(series, model)
    write_surge_csv(args.out, series, surge)
    manifest = _manifest_path(args.out)
    _write_manifest(manifest, "detide", _args_config(args), seed, [args.out], started)
    logger.info("wrote %s", args.out)
    return 0


# -- demo ---------------------------------------------------------------------


def _write_demo_pair(out_dir: str, name: str, flagged: FlaggedSeries) -> list[str]:
    paths = []
    for suffix, keep_missing in (("complete", True), ("observed", False)):
        path = os.path.join(out_dir, f"{name}_{suffix}.csv")
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["index", "block", "value", "observed"])
            for i in range(len(flagged)):
                if not keep_missing and not flagged.observed[i]:
                    continue
                writer.writerow(
                    [i, i // DEMO_BLOCK, repr(float(flagged.values[i])), int(flagged.observed[i])]
                )
        paths.append(path)
    return paths


def cmd_demo_missingness(args: argparse.Namespace) -> int:
    started = _now()
    seed = _resolve_seed(args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    rng = np.random.default_rng([seed, 0])
    values = rng.exponential(scale=1.0 / DEMO_RATE, size=DEMO_DRAWS)
    complete = FlaggedSeries(values, np.ones(DEMO_DRAWS, dtype=bool))

    mcar = apply_mcar(
        complete,
        DEMO_BLOCK,
        MissingnessSpec("mcar", pbm=1.0, pm=DEMO_MCAR_PM),
        np.random.default_rng([seed, 1]),
    )
    mar = apply_mar(
        complete,
        MissingnessSpec("mar", apm=DEMO_MAR_APM),
        np.random.default_rng([seed, 2]),
    )
    # the worst case removes the top quarter of the whole series' order
    # statistics, value-driven and rng-free
    top = int(round(DEMO_MNAR_TOP * DEMO_DRAWS))
    observed = np.ones(DEMO_DRAWS, dtype=bool)
    observed[np.argsort(values, kind="stable")[DEMO_DRAWS - top :]] = False
    mnar = FlaggedSeries(values.copy(), observed)

    outputs = []
    for name, flagged in (("mcar", mcar), ("mar", mar), ("mnar", mnar)):
        outputs += _write_demo_pair(args.out_dir, name, flagged)
    manifest = os.path.join(args.out_dir, "manifest.json")
    _write_manifest(manifest, "demo-missingness", _args_config(args), seed, outputs, started)
    logger.info("wrote %d demo file(s) under %s", len(outputs), args.out_dir)
    return 0


# -- parser and dispatch ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevmiss",
        description="Weighted GEV estimation for block maxima with missing observations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    sim = subparsers.add_parser("simulate", help="run the missingness simulation grid")
    sim.add_argument("--config", required=True, help="flat key=value config file")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=None, help="parallel workers (default GEVMISS_JOBS or 1)")
    sim.set_defaults(func=cmd_simulate)

    fit = subparsers.add_parser("fit", help="fit GEV parameters to a blocked series")
    _add_series_arguments(fit)
    _add_blocking_arguments(fit)
    fit.add_argument("--method", choices=("mle", "pwm"), default="mle")
    fit.add_argument(
        "--weights", choices=("observed", "unconditional", "conditional"), default="conditional"
    )
    fit.add_argument("--out-prefix", required=True, help="prefix for _params.csv and _blocks.csv")
    fit.add_argument("--seed", type=int, default=None)
    fit.set_defaults(func=cmd_fit)

    rl = subparsers.add_parser("return-levels", help="return levels with bootstrap SEs")
    _add_series_arguments(rl)
    _add_blocking_arguments(rl)
    rl.add_argument("--method", choices=("mle", "pwm", "all"), default="all")
    rl.add_argument(
        "--weights",
        choices=("observed", "unconditional", "conditional", "all"),
        default="all",
    )
    rl.add_argument("--filter", choices=("all", "complete", "complete10"), default="all")
    rl.add_argument("--T", default="20,50,100", help="comma-separated return periods")
    rl.add_argument("--bootstrap", type=int, default=1000, help="bootstrap replicates")
    rl.add_argument("--min-k", type=int, default=4, help="minimum usable blocks per resample")
    rl.add_argument("--out", required=True)
    rl.add_argument("--seed", type=int, default=None)
    rl.set_defaults(func=cmd_return_levels)

    dt = subparsers.add_parser("detide", help="fit and subtract the harmonic tide")
    _add_series_arguments(dt)
    dt.add_argument(
        "--constituents",
        default=None,
        help="override as NAME:DEG_PER_HOUR,... (default M2,S2,N2,K1,O1)",
    )
    dt.add_argument("--mean-model", choices=("constant", "linear", "yearly"), default="yearly")
    dt.add_argument("--out", required=True)
    dt.add_argument("--seed", type=int, default=None)
    dt.set_defaults(func=cmd_detide)

    demo = subparsers.add_parser("demo-missingness", help="emit the three-mechanism demo CSVs")
    demo.add_argument("--out-dir", required=True)
    demo.add_argument("--seed", type=int, default=None)
    demo.set_defaults(func=cmd_demo_missingness)

    return parser


def main(argv: list[str] | None = None) -> int:
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(
            level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
        )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return 2
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 3
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return 4
    except ValueError as exc:
        logger.error("invalid input: %s", exc)
        return 2


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
