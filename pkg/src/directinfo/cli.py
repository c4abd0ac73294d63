"""Command-line interface.

Subcommands: ``calibrate``, ``pair``, ``matrix``, ``triplets``, ``verify``
and ``compare-pc``. Every setting resolves, in order of precedence, from a
flag, a ``DIRECTINFO_<NAME>`` environment variable, a config file and the
built-in default. The resolved settings are written into every output, and
any output file can be passed back with ``--config`` to rerun the command.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 calibration
failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import __version__
from .baseline import compare_report, gaussian_mi, pearson
from .calibrate import ZERO_RULES, determine_bstar, triplet_bstar
from .engine import (
    BatchConfig,
    estimate_all_pairs,
    estimate_pair,
    estimate_triplets,
    group_pair_values,
    group_summary,
    nonspecific_pairs,
    nonspecific_triplets,
    triplet_consistency_rate,
    verify_shuffled,
    verify_subsample_stability,
)
from .exceptions import (
    BelowMinimumProbesError,
    BudgetExceededError,
    CalibrationError,
    DirectInfoError,
)
from .ingest import ORIENTATIONS, Dataset, joint_sample, load_dataset
from .multiinfo import DEFAULT_TRIPLET_BSTAR

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CALIBRATION = 0, 1, 2, 3
ENV_PREFIX = "DIRECTINFO_"
HEADER_TAG = "# directinfo "


class UsageError(Exception):
    pass


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _optional_int(text):
    if text is None or str(text).strip().lower() in ("", "none", "null"):
        return None
    return int(text)


@dataclass(frozen=True)
class Field:
    name: str
    parse: Callable[[Any], Any]
    default: Any
    help: str


# every resolvable setting; flags are "--" + name with "_" replaced by "-"
FIELDS = (
    Field("input", str, None, "input table"),
    Field("output", str, None, "output file"),
    Field("orientation", str, "rows", "rows: one variable per line; columns: one per column"),
    Field("delimiter", str, ",", "cell separator"),
    Field("missing_token", str, "NA", "cell text marking a missing value"),
    Field("header", _parse_bool, False, "rows orientation: skip a first line of labels"),
    Field("index", _parse_bool, False, "columns orientation: drop a first column of labels"),
    Field("f1", float, 0.7, "smallest subsample fraction"),
    Field("f3", float, 0.9, "largest subsample fraction"),
    Field("t1", int, 21, "trials at the smallest fraction"),
    Field("include_full", _parse_bool, True, "add the full sample as a fit point"),
    Field("b_max", int, 10, "highest level tried by pair calibration"),
    Field("triplet_b_max", int, 6, "highest level tried by triplet calibration"),
    Field("tolerance_bits", float, 0.01, "calibration tolerance in bits"),
    Field("zero_rule", str, "errorbar", "calibration noise guard: errorbar or sem"),
    Field("min_joint_samples", int, 200, "skip pairs with fewer joint observations"),
    Field("seed", int, 0, "base random seed"),
    Field("workers", int, 1, "worker processes"),
    Field("probes", int, 1000, "shuffled pairs for calibration"),
    Field("triplet_probes", int, 1000, "shuffled triplets for calibration"),
    Field("baseline", int, 10_000, "random tuples for the nonspecific baseline"),
    Field("triplet_budget", int, 5_000, "largest number of triplets per group"),
    Field("requantize", _parse_bool, True, "re-bin every subsample"),
    Field("b_star", _optional_int, None, "pair level cap; calibrated when unset"),
    Field("triplet_b_star", _optional_int, None,
          f"triplet level cap; {DEFAULT_TRIPLET_BSTAR} when unset and not calibrated"),
    Field("triplets", _parse_bool, False, "calibrate: also calibrate triplets"),
    Field("var_a", str, None, "pair: first variable name"),
    Field("var_b", str, None, "pair: second variable name"),
    Field("groups", str, None, "triplets: group file, one 'label: a,b,c' per line"),
    Field("shuffle_pairs", int, 1000, "verify: number of shuffled pairs"),
    Field("fraction", float, 2.0 / 3.0, "verify: retained fraction of each joint sample"),
    Field("threshold_bits", float, 0.1, "verify: reported change threshold"),
)
FIELD_BY_NAME = {f.name: f for f in FIELDS}

REQUIRED = {
    "calibrate": ("input", "output"),
    "pair": ("input", "output", "var_a", "var_b"),
    "matrix": ("input", "output"),
    "triplets": ("input", "output", "groups"),
    "verify": ("input", "output"),
    "compare-pc": ("input", "output"),
}


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------


def read_config_file(path: str) -> dict:
    """Settings from a ``key=value`` file or from a previous output.

    JSON files contribute their ``"config"`` object (or the whole object);
    delimited outputs contribute the JSON on their ``# directinfo`` line.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(stripped)
        return dict(obj.get("config", obj))
    if stripped.startswith(HEADER_TAG):
        first = stripped.splitlines()[0][len(HEADER_TAG):]
        return dict(json.loads(first).get("config", {}))
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve_config(flags: dict, env: dict | None = None, file_values: dict | None = None) -> dict:
    """Merge settings: flags, then environment, then config file, then defaults."""
    env = os.environ if env is None else env
    file_values = file_values or {}
    unknown = set(file_values) - set(FIELD_BY_NAME) - {"command", "version"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = {}
    for f in FIELDS:
        env_key = ENV_PREFIX + f.name.upper()
        if flags.get(f.name) is not None:
            raw = flags[f.name]
        elif env_key in env:
            raw = env[env_key]
        elif f.name in file_values:
            raw = file_values[f.name]
        else:
            cfg[f.name] = f.default
            continue
        try:
            cfg[f.name] = f.parse(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {f.name}: {raw!r}") from exc
    return cfg


def _validate(cfg: dict, command: str) -> None:
    missing = [k for k in REQUIRED[command] if cfg.get(k) in (None, "")]
    if missing:
        raise UsageError(f"{command} needs: " + ", ".join("--" + k.replace("_", "-")
                                                            for k in missing))
    if cfg["orientation"] not in ORIENTATIONS:
        raise UsageError(f"orientation must be one of {ORIENTATIONS}")
    if cfg["zero_rule"] not in ZERO_RULES:
        raise UsageError(f"zero_rule must be one of {ZERO_RULES}")
    for key in ("b_max", "triplet_b_max"):
        if cfg[key] < 2:
            raise UsageError(f"{key} must be at least 2, got {cfg[key]}")
    for key in ("b_star", "triplet_b_star"):
        if cfg[key] is not None and cfg[key] < 2:
            raise UsageError(f"{key} must be at least 2, got {cfg[key]}")
    if cfg["workers"] < 1:
        raise UsageError("workers must be at least 1")
    if cfg["seed"] < 0:
        raise UsageError("seed must be non-negative")
    if command == "pair" and cfg["var_a"] == cfg["var_b"]:
        raise UsageError("var_a and var_b must differ; self-information is not estimated")
    if command == "verify" and not 0 < cfg["fraction"] <= 1:
        raise UsageError("fraction must lie in (0, 1]")


def batch_config(cfg: dict) -> BatchConfig:
    return BatchConfig(
        f1=cfg["f1"], f3=cfg["f3"], t1=cfg["t1"], include_full=cfg["include_full"],
        b_max=cfg["b_max"], triplet_b_max=cfg["triplet_b_max"],
        tolerance_bits=cfg["tolerance_bits"], min_joint_samples=cfg["min_joint_samples"],
        seed=cfg["seed"], worker_count=cfg["workers"], n_probe_pairs=cfg["probes"],
        n_probe_triplets=cfg["triplet_probes"], n_baseline=cfg["baseline"],
        triplet_budget=cfg["triplet_budget"], requantize=cfg["requantize"])


# ----------------------------------------------------------------------------
# output
# ----------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest text that parses back to the same float."""
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no NaN or infinity
        return x if math.isfinite(x) else None
    return obj


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(command: str, cfg: dict) -> dict:
    return {"command": command, "version": __version__, "seed": cfg["seed"], "config": cfg}


def write_json(path: str, command: str, cfg: dict, payload: dict) -> None:
    doc = _provenance(command, cfg)
    doc.update(payload)
    atomic_write(path, json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n")


def write_table(path: str, command: str, cfg: dict, header: list, rows: list,
                delimiter: str = "\t") -> None:
    """Delimited table whose first line carries the provenance as JSON."""
    lines = [HEADER_TAG + json.dumps(_jsonable(_provenance(command, cfg)), allow_nan=False),
             delimiter.join(header)]
    for row in rows:
        lines.append(delimiter.join(fmt(v) if isinstance(v, (float, np.floating)) else str(v)
                                    for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def write_errors(path: str, command: str, cfg: dict, errors: list) -> str | None:
    """Per-item failures go to ``<output>.errors.json``; returns its path."""
    if not errors:
        return None
    side = path + ".errors.json"
    write_json(side, command, cfg, {"errors": errors})
    return side


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def _load(cfg: dict) -> Dataset:
    return load_dataset(cfg["input"], delimiter=cfg["delimiter"],
                        missing_token=cfg["missing_token"], orientation=cfg["orientation"],
                        header=cfg["header"], index=cfg["index"])


def _pair_level(ds: Dataset, cfg: dict, bc: BatchConfig, extra: dict) -> int:
    """Configured pair level cap, or a fresh calibration recorded into ``extra``."""
    if cfg["b_star"] is not None:
        return cfg["b_star"]
    report = determine_bstar(ds, bc.b_max, bc.n_probe_pairs, bc.schedule, bc.seed,
                             bc.tolerance_bits, bc.worker_count, bc.requantize,
                             cfg["zero_rule"])
    extra["calibration"] = report.to_dict()
    return report.b_star


def _triplet_level(cfg: dict) -> int:
    b = cfg["triplet_b_star"]
    return DEFAULT_TRIPLET_BSTAR if b is None else b


def cmd_calibrate(cfg: dict) -> int:
    ds = _load(cfg)
    bc = batch_config(cfg)
    out, status = {}, EXIT_OK
    runs = [("pairs", determine_bstar, bc.b_max, bc.n_probe_pairs)]
    if cfg["triplets"]:
        runs.append(("triplets", triplet_bstar, bc.triplet_b_max, bc.n_probe_triplets))
    texts = []
    for key, fn, b_max, probes in runs:
        try:
            report = fn(ds, b_max, probes, bc.schedule, bc.seed, bc.tolerance_bits,
                        bc.worker_count, bc.requantize, cfg["zero_rule"])
        except CalibrationError as exc:
            report = exc.report
            status = EXIT_CALIBRATION
            print(f"error: {key}: {exc}", file=sys.stderr)
        out[key] = report.to_dict()
        texts.append(report.to_text())
    write_json(cfg["output"], "calibrate", cfg, out)
    sys.stdout.write("".join(texts))
    return status


def cmd_pair(cfg: dict) -> int:
    ds = _load(cfg)
    bc = batch_config(cfg)
    i, j = ds.index_of(cfg["var_a"]), ds.index_of(cfg["var_b"])
    extra = {}
    b_star = _pair_level(ds, cfg, bc, extra)
    js = joint_sample(ds, [i, j])
    est = estimate_pair(ds, i, j, bc, b_star)
    curve = [{"b": b, "intercept_bits": r.intercept_bits, "error_bar_bits": r.error_bar_bits}
             for b, r in sorted(est.per_b.items())]
    try:
        pc = pearson(js.columns[0], js.columns[1])
        gmi = gaussian_mi(pc) if abs(pc) < 1 else math.inf
    except DirectInfoError:
        pc = gmi = math.nan
    payload = {"var_a": cfg["var_a"], "var_b": cfg["var_b"], "b_star": b_star,
               "n_joint": js.size, "value_bits": est.value_bits, "chosen_b": est.chosen_b,
               "error_bar_bits": est.error_bar_bits, "pc": pc, "gaussian_mi_bits": gmi,
               "intercept_curve": curve,
               "extrapolations": {str(b): r.to_dict() for b, r in sorted(est.per_b.items())}}
    payload.update(extra)
    write_json(cfg["output"], "pair", cfg, payload)
    print(f"{cfg['var_a']}\t{cfg['var_b']}\t{fmt(est.value_bits)}\tb={est.chosen_b}")
    return EXIT_OK


def _skipped_errors(m) -> list:
    return [{"a": m.names[i], "b": m.names[j], "reason": r, "n_joint": n}
            for i, j, r, n in m.skipped]


def cmd_matrix(cfg: dict) -> int:
    ds = _load(cfg)
    bc = batch_config(cfg)
    extra = {}
    b_star = _pair_level(ds, cfg, bc, extra)
    m = estimate_all_pairs(ds, bc, b_star)
    rows = [[name] + [fmt(v) for v in m.values[k]] for k, name in enumerate(m.names)]
    write_table(cfg["output"], "matrix", cfg, [""] + list(m.names), rows, delimiter=",")
    side = m.sidecar()
    side.update(extra)
    write_json(cfg["output"] + ".json", "matrix", cfg, side)
    write_errors(cfg["output"], "matrix", cfg, _skipped_errors(m))
    print(f"{len(m.pairs())} pairs estimated, {len(m.skipped)} skipped, b_star={b_star}")
    return EXIT_OK


def read_groups(path: str, ds: Dataset) -> list[tuple[str, list[int]]]:
    """Parse ``label: name1,name2,...`` lines into variable indices."""
    groups = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise DirectInfoError(f"{path}:{lineno}: expected 'label: name,name,...'")
            label, members = line.split(":", 1)
            names = [n.strip() for n in members.split(",") if n.strip()]
            if len(set(names)) != len(names):
                raise DirectInfoError(f"{path}:{lineno}: repeated member")
            try:
                ids = [ds.index_of(n) for n in names]
            except KeyError as exc:
                raise DirectInfoError(f"{path}:{lineno}: {exc.args[0]}") from None
            groups.append((label.strip(), ids))
    if not groups:
        raise DirectInfoError(f"{path}: no groups")
    return groups


def cmd_triplets(cfg: dict) -> int:
    ds = _load(cfg)
    groups = read_groups(cfg["groups"], ds)
    bc = batch_config(cfg)
    extra = {}
    b_star = _pair_level(ds, cfg, bc, extra)
    b_star_t = _triplet_level(cfg)
    base_pairs = nonspecific_pairs(ds, bc, b_star)
    base_triplets = nonspecific_triplets(ds, bc, b_star_t)
    results, errors = [], []
    for label, ids in groups:
        count = math.comb(len(ids), 3)
        if count > bc.triplet_budget:
            exc = BudgetExceededError(f"{count} triplets exceed the budget "
                                      f"{bc.triplet_budget}", count)
            errors.append({"group": label, "reason": type(exc).__name__, "detail": str(exc)})
            continue
        triplets = list(itertools.combinations(sorted(ids), 3))
        good, bad = estimate_triplets(ds, triplets, bc, b_star_t)
        for t_ids, reason in bad:
            errors.append({"group": label, "triplet": [ds.names[k] for k in t_ids],
                           "reason": reason})
        m = estimate_all_pairs(ds, bc, b_star, pairs=list(itertools.combinations(sorted(ids), 2)))
        pair_vals = group_pair_values(m, ids)
        if not good:
            errors.append({"group": label, "reason": "NoTriplets"})
            continue
        summary = group_summary(label, [ds.names[k] for k in ids], good, pair_vals,
                                base_triplets, base_pairs)
        results.append({"summary": summary.to_dict(),
                        "consistency_rate": triplet_consistency_rate(good),
                        "triplets": [dict(t.to_dict(), names=[ds.names[k] for k in t.ids])
                                     for t in good]})
    payload = {"b_star": b_star, "triplet_b_star": b_star_t,
               "baseline": {"pair_mean_bits": float(np.mean(base_pairs)),
                            "triplet_mean_bits": float(np.mean(base_triplets)),
                            "n_pairs": int(base_pairs.size),
                            "n_triplets": int(base_triplets.size)},
               "groups": results}
    payload.update(extra)
    write_json(cfg["output"], "triplets", cfg, payload)
    write_errors(cfg["output"], "triplets", cfg, errors)
    for r in results:
        s = r["summary"]
        print(f"{s['label']}\t{fmt(s['mean_triplet_bits'])}\t{fmt(s['exceedance_triplet'])}")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    ds = _load(cfg)
    bc = batch_config(cfg)
    extra = {}
    b_star = _pair_level(ds, cfg, bc, extra)
    shuffled = verify_shuffled(ds, bc, b_star, cfg["shuffle_pairs"])
    stability = verify_subsample_stability(ds, bc, b_star, cfg["fraction"],
                                           threshold_bits=cfg["threshold_bits"])
    payload = {"b_star": b_star, "shuffled": shuffled.to_dict(),
               "subsample": stability.to_dict()}
    payload.update(extra)
    write_json(cfg["output"], "verify", cfg, payload)
    edges, counts = stability.histogram()
    write_table(cfg["output"] + ".histogram.tsv", "verify", cfg,
                ["lower_bits", "upper_bits", "count"],
                [[float(edges[k]), float(edges[k + 1]), int(c)] for k, c in enumerate(counts)])
    print(f"shuffled mean {fmt(shuffled.mean_bits)} bits, "
          f"subsample share above {fmt(cfg['threshold_bits'])} bits: "
          f"{fmt(stability.share_above_threshold)}")
    return EXIT_OK


def cmd_compare_pc(cfg: dict) -> int:
    ds = _load(cfg)
    bc = batch_config(cfg)
    extra = {}
    b_star = _pair_level(ds, cfg, bc, extra)
    m = estimate_all_pairs(ds, bc, b_star)
    points = compare_report([((i, j), m.estimate(i, j)) for i, j in m.pairs()], ds)
    rows = [[ds.names[p.pair[0]], ds.names[p.pair[1]], p.pc, p.mi_bits, p.gaussian_mi_bits,
             p.n_joint, p.error or ""] for p in points]
    write_table(cfg["output"], "compare-pc", cfg,
                ["a", "b", "pc", "mi_bits", "gaussian_mi_bits", "n_joint", "error"], rows)
    errors = _skipped_errors(m) + [{"a": r[0], "b": r[1], "reason": r[6]}
                                   for r in rows if r[6]]
    write_errors(cfg["output"], "compare-pc", cfg, errors)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "pair": cmd_pair,
    "matrix": cmd_matrix,
    "triplets": cmd_triplets,
    "verify": cmd_verify,
    "compare-pc": cmd_compare_pc,
}


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="directinfo", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file or a previous output")
        for f in FIELDS:
            flag = "--" + f.name.replace("_", "-")
            if f.parse is _parse_bool:
                group = p.add_mutually_exclusive_group()
                group.add_argument(flag, dest=f.name, action="store_const", const=True,
                                   default=None, help=f.help)
                group.add_argument("--no-" + f.name.replace("_", "-"), dest=f.name,
                                   action="store_const", const=False, default=None)
            else:
                p.add_argument(flag, dest=f.name, default=None, help=f.help)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        file_values = read_config_file(args.config) if args.config else {}
        flags = {f.name: getattr(args, f.name) for f in FIELDS}
        cfg = resolve_config(flags, os.environ, file_values)
        _validate(cfg, args.command)
        return COMMANDS[args.command](cfg)
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BelowMinimumProbesError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (DirectInfoError, KeyError, OSError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
