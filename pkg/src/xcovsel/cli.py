"""Command-line front end.

Five subcommands cover the library surface:

* simulate  - Monte Carlo selection-probability sweeps over model grids
* optimize  - stochastic search for the worst-case approximation gap
* select    - score and rank features of a real paired dataset
* fdr       - permutation-null p-values and q-values for real data
* asymrisk  - closed-form limiting risk for an explicit signal matrix

Every run resolves its configuration from built-in defaults, an
optional JSON config file (--config), and command-line flags, in that
precedence order, then writes two files under the --out prefix: a
payload table (<out>.csv) and a result envelope (<out>.json) echoing
the fully resolved configuration.  Re-running with the echoed
configuration reproduces the payload byte for byte; parallel runs are
invariant to --workers.

Exit codes: 0 success, 1 configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, kernels
from .data import (
    ORIENTATIONS,
    DataFormatError,
    counts_to_log_proportions,
    ingest_csv,
    standardize_rows_columns,
)
from .fdr import (
    CORRECTIONS,
    GLOBAL_SHUFFLE_MODES,
    NULL_KINDS,
    ascending_rank,
    cross_correlation,
    cross_covariance,
    rank_features,
)
from .model import ModelParams
from .optimizer import (
    DIRECTIONS,
    DiscrepancyObjective,
    SearchConfig,
    default_search_config,
    run_search,
)
from .risk import (
    QuadratureError,
    asymptotic_thresholding_risk,
    normalize_method,
    normalize_sampler,
    sweep_risk_surface,
)
from .selectors import DegenerateMatrixError, score_svd, score_thresholding

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid flags, config file, or parameter values."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; the envelope echoes this verbatim."""

    command: str
    seed: int
    workers: int
    out: str
    params: dict

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out,
            **self.params,
        }


@dataclass(frozen=True)
class ResultEnvelope:
    """What a command run produced and how to reproduce it."""

    config: RunConfig
    version: str
    backend: str
    wall_time_seconds: float
    payload_path: str
    extra: dict

    def to_dict(self) -> dict:
        return {
            "tool": "xcovsel",
            "version": self.version,
            "backend": self.backend,
            "config": self.config.to_dict(),
            "wall_time_seconds": self.wall_time_seconds,
            "payload_path": self.payload_path,
            "extra": self.extra,
        }


_COMMON = dict(seed=0, workers=1)
DEFAULTS: dict[str, dict] = {
    "simulate": dict(
        **_COMMON,
        out="xcovsel-simulate",
        n=None,
        p_t=None,
        p_u=None,
        q_u=None,
        grid=None,
        method="thresholding",
        sampler="wishart-exact",
        mc_res=1000,
        ndof=None,
    ),
    "optimize": dict(
        **_COMMON,
        out="xcovsel-optimize",
        n=None,
        method="thresholding",
        direction="asymptotic-minus-exact",
        mc_res=5000,
        m=10,
        t_final=5,
        perturbations=10,
        independent=False,
        initial_grid=None,
        bounds=None,
        objective="discrepancy",
        theta_star=None,
    ),
    "select": dict(
        **_COMMON,
        out="xcovsel-select",
        x=None,
        y=None,
        method="thresholding",
        stat="correlation",
        orientation="observations-as-rows",
        standardize=False,
        log_proportions=False,
    ),
    "fdr": dict(
        **_COMMON,
        out="xcovsel-fdr",
        x=None,
        y=None,
        method="thresholding",
        stat="correlation",
        orientation="observations-as-rows",
        standardize=False,
        log_proportions=False,
        null="global",
        mc_res=1000,
        correction=None,
        smoothing=False,
        global_shuffle="within-row",
    ),
    "asymrisk": dict(
        **_COMMON,
        out="xcovsel-asymrisk",
        signal_csv=None,
        p_u=None,
        q_u=0,
        n=None,
        ndof=None,
    ),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with its own codes; route everything through the
    # config-error path instead so the documented exit codes hold.
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="xcovsel",
        description="Cross-covariance feature selection: simulation, "
        "risk, search, and permutation inference.",
    )
    parser.add_argument("--version", action="version", version=f"xcovsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="root seed (default 0)")
        p.add_argument("--workers", type=int, help="worker processes (default 1)")
        p.add_argument("--out", help=f"output path prefix (default xcovsel-{name})")
        return p

    p = add("simulate", "Monte Carlo selection-probability sweep")
    p.add_argument("--n", type=int, help="sample size (single-point run)")
    p.add_argument("--p-t", type=int, help="correlated feature count")
    p.add_argument("--p-u", type=int, help="uncorrelated feature count")
    p.add_argument("--q-u", type=int, help="uncorrelated response count")
    p.add_argument("--method", help="thres or svd")
    p.add_argument("--sampler", help="wishart, data, or asymptotic")
    p.add_argument("--mc-res", type=int, help="Monte Carlo trials per point")
    p.add_argument("--ndof", type=int, help="degrees of freedom override (default n-1)")

    p = add("optimize", "search for the worst-case approximation gap")
    p.add_argument("--n", type=int, help="sample size of the objective")
    p.add_argument("--method", help="thres or svd")
    p.add_argument("--direction", choices=DIRECTIONS, help="objective sign")
    p.add_argument("--mc-res", type=int, help="trials per objective batch")
    p.add_argument("--m", type=int, help="survivor count per iteration")
    p.add_argument("--t-final", type=int, help="iteration count")
    p.add_argument("--perturbations", type=int, help="perturbed copies per survivor")
    p.add_argument(
        "--independent",
        action="store_true",
        default=None,
        help="estimate the two probabilities from independent streams "
        "instead of paired draws",
    )

    def add_data_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--x", help="CSV of X (features)")
        p.add_argument("--y", help="CSV of Y (responses)")
        p.add_argument("--method", help="thres or svd")
        p.add_argument("--stat", choices=("correlation", "covariance"))
        p.add_argument("--orientation", choices=ORIENTATIONS)
        p.add_argument(
            "--standardize",
            action="store_true",
            default=None,
            help="iteratively standardize rows and columns of X and Y",
        )
        p.add_argument(
            "--log-proportions",
            action="store_true",
            default=None,
            help="convert Y counts to log proportions first",
        )

    p = add("select", "score and rank features of a paired dataset")
    add_data_flags(p)

    p = add("fdr", "permutation-null p-values and q-values")
    add_data_flags(p)
    p.add_argument("--null", choices=NULL_KINDS)
    p.add_argument("--mc-res", type=int, help="permutation replicates")
    p.add_argument("--correction", choices=CORRECTIONS, help="q-value factor (default: harmonic for svd, none for thres)")
    p.add_argument(
        "--smoothing",
        action="store_true",
        default=None,
        help="add-one p-value smoothing",
    )
    p.add_argument("--global-shuffle", choices=GLOBAL_SHUFFLE_MODES)

    p = add("asymrisk", "closed-form limiting thresholding risk")
    p.add_argument("--signal-csv", help="CSV holding the signal matrix")
    p.add_argument("--p-u", type=int, help="uncorrelated feature count")
    p.add_argument("--q-u", type=int, help="uncorrelated response count (default 0)")
    p.add_argument(
        "--n",
        type=int,
        help="treat the matrix as unscaled and multiply by sqrt(n-1)",
    )
    p.add_argument("--ndof", type=int, help="degrees of freedom override for --n")
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    command = ns.command
    defaults = DEFAULTS[command]
    from_file: dict = {}
    if ns.config is not None:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file {ns.config}: {exc}") from None
        if not isinstance(from_file, dict):
            raise ConfigError(f"config file {ns.config} must hold a JSON object")
        # An envelope's config echo names its command; accept it when it
        # matches, so echoed configs re-run as-is.
        echoed = from_file.pop("command", command)
        if echoed != command:
            raise ConfigError(
                f"config file is for command {echoed!r}, not {command!r}"
            )
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown config keys for {command}: {', '.join(sorted(unknown))}"
            )
    flags = {
        k: v
        for k, v in vars(ns).items()
        if k not in ("command", "config") and v is not None
    }
    params = {**defaults, **from_file, **flags}
    seed = params.pop("seed")
    workers = params.pop("workers")
    out = params.pop("out")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    return RunConfig(command=command, seed=seed, workers=workers, out=out, params=params)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_payload(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _finish(
    config: RunConfig, start: float, header: list[str], rows: list[list], extra: dict
) -> ResultEnvelope:
    payload_path = f"{config.out}.csv"
    _write_payload(payload_path, header, rows)
    envelope = ResultEnvelope(
        config=config,
        version=__version__,
        backend=kernels.BACKEND,
        wall_time_seconds=time.perf_counter() - start,
        payload_path=payload_path,
        extra=extra,
    )
    with open(f"{config.out}.json", "w", encoding="utf-8") as fh:
        json.dump(envelope.to_dict(), fh, indent=2)
        fh.write("\n")
    return envelope


def _require(params: dict, command: str, *names: str) -> None:
    missing = [n for n in names if params.get(n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ConfigError(f"{command} requires {flags} (flag or config file)")


def cmd_simulate(config: RunConfig) -> ResultEnvelope:
    start = time.perf_counter()
    params = config.params
    point_flags = [params.get(k) for k in ("n", "p_t", "p_u", "q_u")]
    if any(v is not None for v in point_flags):
        _require(params, "simulate", "n", "p_t", "p_u", "q_u")
        grid_spec = [point_flags]
    elif params.get("grid"):
        grid_spec = params["grid"]
    else:
        raise ConfigError(
            "simulate requires either --n/--p-t/--p-u/--q-u or a grid in the config file"
        )
    grid = []
    for entry in grid_spec:
        if isinstance(entry, dict):
            entry = [entry.get(k) for k in ("n", "p_t", "p_u", "q_u")]
        if len(entry) != 4 or any(v is None for v in entry):
            raise ConfigError(f"grid entries need n, p_t, p_u, q_u; got {entry!r}")
        grid.append(ModelParams(*(int(v) for v in entry)))
    method = normalize_method(params["method"])
    sampler = normalize_sampler(params["sampler"])

    table = sweep_risk_surface(
        grid,
        method,
        sampler,
        int(params["mc_res"]),
        config.seed,
        workers=config.workers,
        ndof=params["ndof"],
    )
    header = ["n", "p_t", "p_u", "q_u", "p", "q", "value", "stderr", "trials", "discarded"]
    rows = []
    failures = []
    for mp in grid:
        if mp in table.estimates:
            est = table.estimates[mp]
            rows.append(
                [mp.n, mp.p_t, mp.p_u, mp.q_u, mp.p, mp.q,
                 est.value, est.stderr, est.trials, est.discarded]
            )
        else:
            failures.append(
                {"n": mp.n, "p_t": mp.p_t, "p_u": mp.p_u, "q_u": mp.q_u,
                 "error": table.failures[mp]}
            )
    resolved = dataclasses.replace(
        config,
        params={**params, "method": method, "sampler": sampler,
                "grid": [[mp.n, mp.p_t, mp.p_u, mp.q_u] for mp in grid],
                "n": None, "p_t": None, "p_u": None, "q_u": None},
    )
    return _finish(resolved, start, header, rows, {"failures": failures})


class _DeterministicL1:
    """Noise-free test objective: f(theta) = -||theta - theta_star||_1."""

    def __init__(self, theta_star):
        self.theta_star = tuple(int(v) for v in theta_star)

    def __call__(self, theta, mc_res, rng) -> float:
        return -float(sum(abs(a - b) for a, b in zip(theta, self.theta_star)))


def cmd_optimize(config: RunConfig) -> ResultEnvelope:
    start = time.perf_counter()
    params = config.params
    method = normalize_method(params["method"])

    if params["objective"] == "deterministic-l1":
        _require(params, "optimize", "theta_star")
        obj = _DeterministicL1(params["theta_star"])
    elif params["objective"] == "discrepancy":
        _require(params, "optimize", "n")
        obj = DiscrepancyObjective(
            n=int(params["n"]),
            method=method,
            direction=params["direction"],
            paired=not bool(params["independent"]),
        )
    else:
        raise ConfigError(
            f"objective must be 'discrepancy' or 'deterministic-l1', "
            f"got {params['objective']!r}"
        )

    search = default_search_config(mc_res=int(params["mc_res"]))
    overrides = dict(
        m=int(params["m"]),
        t_final=int(params["t_final"]),
        perturbations_per_survivor=int(params["perturbations"]),
    )
    if params["initial_grid"] is not None:
        overrides["initial_grid"] = tuple(
            tuple(int(v) for v in theta) for theta in params["initial_grid"]
        )
    if params["bounds"] is not None:
        overrides["bounds"] = tuple(
            (int(lo), int(hi)) for lo, hi in params["bounds"]
        )
    search = dataclasses.replace(search, **overrides)

    result = run_search(obj, search, config.seed, workers=config.workers)
    header = ["rank", "p_t", "p_u", "q_u", "p", "q", "mean", "batches", "discovered"]
    rows = [
        [i + 1, c.theta[0], c.theta[1], c.theta[2],
         c.theta[0] + c.theta[1], c.theta[0] + c.theta[2],
         c.mean, c.batches, c.discovered]
        for i, c in enumerate(result.candidates)
    ]
    extra = {
        "survivors": [[list(theta) for theta in it] for it in result.survivors],
        "trace": [
            {"iteration": r.iteration, "theta": list(r.theta), "event": r.event,
             "batches": r.batches, "mean": r.mean}
            for r in result.trace
        ],
    }
    resolved = dataclasses.replace(
        config,
        params={**params, "method": method,
                "initial_grid": [list(t) for t in search.initial_grid],
                "bounds": [list(b) for b in search.bounds]},
    )
    return _finish(resolved, start, header, rows, extra)


def _load_xy(config: RunConfig):
    params = config.params
    _require(params, config.command, "x", "y")
    x = ingest_csv(params["x"], params["orientation"])
    y = ingest_csv(params["y"], params["orientation"])
    if params["log_proportions"]:
        y = counts_to_log_proportions(y)
    if params["standardize"]:
        x = standardize_rows_columns(x)
        y = standardize_rows_columns(y)
    return x, y


def cmd_select(config: RunConfig) -> ResultEnvelope:
    start = time.perf_counter()
    params = config.params
    method = normalize_method(params["method"])
    x, y = _load_xy(config)
    stat_fn = cross_correlation if params["stat"] == "correlation" else cross_covariance
    t = stat_fn(x, y)
    scores = score_svd(t) if method == "svd" else score_thresholding(t)
    rank = ascending_rank(-scores)
    order = np.argsort(rank)
    header = ["", "score", "rank"]
    rows = [[x.feature_names[j], float(scores[j]), int(rank[j])] for j in order]
    resolved = dataclasses.replace(config, params={**params, "method": method})
    return _finish(resolved, start, header, rows,
                   {"observations": x.n_observations, "features": x.n_features,
                    "responses": y.n_features})


def cmd_fdr(config: RunConfig) -> ResultEnvelope:
    start = time.perf_counter()
    params = config.params
    method = normalize_method(params["method"])
    x, y = _load_xy(config)
    report = rank_features(
        x,
        y,
        method=method,
        null=params["null"],
        mc_res=int(params["mc_res"]),
        correction=params["correction"],
        rng=config.seed,
        stat=params["stat"],
        smoothing=bool(params["smoothing"]),
        global_shuffle=params["global_shuffle"],
        workers=config.workers,
    )
    header = ["", "score", "p_value", "rank", "q_value"]
    rows = [[r.feature_name, r.score, r.p_value, r.rank, r.q_value] for r in report]
    effective_correction = params["correction"] or (
        "harmonic" if method == "svd" else "none"
    )
    resolved = dataclasses.replace(
        config, params={**params, "method": method, "correction": effective_correction}
    )
    return _finish(resolved, start, header, rows,
                   {"observations": x.n_observations, "features": x.n_features,
                    "responses": y.n_features})


def cmd_asymrisk(config: RunConfig) -> ResultEnvelope:
    start = time.perf_counter()
    params = config.params
    _require(params, "asymrisk", "signal_csv", "p_u")
    signal = ingest_csv(params["signal_csv"]).values
    if params["n"] is not None or params["ndof"] is not None:
        if params["ndof"] is not None:
            nu = int(params["ndof"])
        else:
            nu = int(params["n"]) - 1
        if nu < 1:
            raise ConfigError(f"degrees of freedom must be >= 1, got {nu}")
        signal = signal * np.sqrt(nu)
    p_u, q_u = int(params["p_u"]), int(params["q_u"])
    p_t, q_t = signal.shape
    risk = asymptotic_thresholding_risk(signal, p_u, q_t + q_u)
    header = ["p_t", "q_t", "p_u", "q_u", "p", "q", "risk", "selection_probability"]
    rows = [[p_t, q_t, p_u, q_u, p_t + p_u, q_t + q_u, risk, 1.0 - risk]]
    return _finish(config, start, header, rows, {})


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "select": cmd_select,
    "fdr": cmd_fdr,
    "asymrisk": cmd_asymrisk,
}

def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"xcovsel: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = resolve_config(ns)
        envelope = COMMANDS[config.command](config)
    except ConfigError as exc:
        print(f"xcovsel: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateMatrixError, QuadratureError, np.linalg.LinAlgError) as exc:
        print(f"xcovsel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataFormatError as exc:
        print(f"xcovsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"xcovsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"xcovsel: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with open(envelope.payload_path, encoding="utf-8") as fh:
        n_rows = sum(1 for _ in fh) - 1
    print(
        f"xcovsel {envelope.config.command}: wrote {envelope.config.out}.json "
        f"and {envelope.payload_path} ({n_rows} row(s))"
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
