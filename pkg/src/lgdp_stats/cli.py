"""Command-line surface and file I/O.

Subcommands: ``privatize`` (push a labeled CSV through a mechanism),
``test`` and ``ci`` (run a hypothesis test or confidence interval on a
labels file joined with an outcomes file by id), and ``sweep`` (run a Monte
Carlo experiment described by a JSON config).  The module also hosts the
UCI Adult census loader used by the real-data experiments.

File conventions: label CSVs have an ``id`` column followed by either a
single ``group`` index column or ``grp_1..grp_g`` binary membership
columns; outcome CSVs have ``id,outcome`` plus an optional ``treated``
flag for the A/B scenario.  JSON results carry ``"schema": "lgdp-stats/1"``
and are byte-stable for fixed inputs.  Every failure exits nonzero with a
single ``error: <code>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .abtest import ab_ci_bounds, ab_model, ab_moments_from_arrays
from .chisq_engine import NoAcceptingDeltaError, ci_search, general_chisq
from .independence import indep_model, indep_moments
from .means import (
    anova_model,
    build_moments,
    diff_means_model,
    pairwise_ci_bounds,
    pairwise_within_g,
)
from .mechanisms import MechanismSpec, bit_flip, privatize_batch, rand_response, subset
from .proportions import PropCounts, prop_model
from .simlab import (
    ConfigError,
    ExperimentConfig,
    MethodSpec,
    default_trials,
    run_coverage_sweep,
    run_power_sweep,
)

SCHEMA = "lgdp-stats/1"

_SCENARIOS = ("proportions", "independence", "means", "anova", "pairwise", "abtest")
_CI_SCENARIOS = ("proportions", "means", "pairwise", "abtest")
_SCENARIO_CHANNELS = {
    "proportions": ("rr",),
    "independence": ("rr", "bitflip", "subset"),
    "means": ("rr",),
    "anova": ("rr", "bitflip", "subset"),
    "pairwise": ("rr", "bitflip", "subset"),
    "abtest": ("rr",),
}


class CLIError(Exception):
    """A reportable failure: ``code`` is machine-parsable, kebab-case."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise CLIError("usage", message)


# --- datasets ---------------------------------------------------------------


@dataclass(frozen=True)
class LabeledDataset:
    """Rows of (id, group membership bits, optional outcome).

    ``bits`` is a (rows, groups) 0/1 array; one-hot rows encode a single
    group, multi-hot rows a privatized membership report.
    """

    ids: tuple[str, ...]
    bits: np.ndarray
    outcomes: np.ndarray | None = None
    group_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        bits = np.asarray(self.bits, dtype=np.int64)
        if bits.ndim != 2:
            raise ValueError("bits must be a (rows, groups) array")
        object.__setattr__(self, "bits", bits)
        if len(self.ids) != len(bits):
            raise ValueError("ids and bits must have matching length")
        if self.outcomes is not None:
            outcomes = np.asarray(self.outcomes, dtype=float)
            if len(outcomes) != len(bits):
                raise ValueError("outcomes must align with ids")
            object.__setattr__(self, "outcomes", outcomes)
        if self.group_names is not None and len(self.group_names) != bits.shape[1]:
            raise ValueError("group_names must match the number of groups")

    @property
    def g(self) -> int:
        return int(self.bits.shape[1])


_SEX_GROUPS = ("Male", "Female")
_RACE_GROUPS = ("White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other")
_INCOME_LEVELS = ("<=50K", ">50K")


@dataclass(frozen=True)
class AdultRecord:
    """One row of the UCI Adult census table (15 columns)."""

    age: int
    workclass: str
    fnlwgt: int
    education: str
    education_num: int
    marital_status: str
    occupation: str
    relationship: str
    race: str
    sex: str
    capital_gain: int
    capital_loss: int
    hours_per_week: int
    native_country: str
    income: str

    @classmethod
    def parse(cls, line: str) -> "AdultRecord":
        fields = [field.strip() for field in line.split(",")]
        if len(fields) != 15:
            raise ValueError(
                f"expected 15 comma-separated fields, got {len(fields)}"
            )
        return cls(
            age=int(fields[0]),
            workclass=fields[1],
            fnlwgt=int(fields[2]),
            education=fields[3],
            education_num=int(fields[4]),
            marital_status=fields[5],
            occupation=fields[6],
            relationship=fields[7],
            race=fields[8],
            sex=fields[9],
            capital_gain=int(fields[10]),
            capital_loss=int(fields[11]),
            hours_per_week=int(fields[12]),
            native_country=fields[13],
            income=fields[14].rstrip("."),
        )

    @property
    def high_income(self) -> bool:
        return self.income == ">50K"


def load_adult(path) -> tuple[LabeledDataset, LabeledDataset]:
    """Load the UCI Adult census from a directory into two grouped views.

    Reads ``adult.data`` (required) and ``adult.test`` (optional; its
    leading comment line and the trailing period on its income labels are
    handled).  Rows whose sex, race, or income field is missing or
    unrecognized are dropped.  Returns (sex-grouped, race-grouped)
    datasets sharing ids and the binary outcome "income above 50K".
    """
    directory = Path(path)
    if not (directory / "adult.data").exists():
        raise FileNotFoundError(f"no adult.data under {path}")
    records: list[tuple[str, AdultRecord]] = []
    total = bad = 0
    for tag in ("data", "test"):
        source = directory / f"adult.{tag}"
        if not source.exists():
            continue
        for index, line in enumerate(source.read_text().splitlines()):
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            total += 1
            try:
                record = AdultRecord.parse(line)
            except ValueError:
                bad += 1
                continue
            records.append((f"{tag}-{index}", record))
    if total == 0 or bad > 0.01 * total:
        raise ValueError(
            f"too many unparseable rows under {path} ({bad} of {total})"
        )
    kept = [
        (identifier, record)
        for identifier, record in records
        if record.sex in _SEX_GROUPS
        and record.race in _RACE_GROUPS
        and record.income in _INCOME_LEVELS
    ]
    if not kept:
        raise ValueError(f"no usable rows under {path}")
    ids = tuple(identifier for identifier, _ in kept)
    outcomes = np.array([float(record.high_income) for _, record in kept])
    sex_bits = np.eye(2, dtype=np.int64)[
        [_SEX_GROUPS.index(record.sex) for _, record in kept]
    ]
    race_bits = np.eye(5, dtype=np.int64)[
        [_RACE_GROUPS.index(record.race) for _, record in kept]
    ]
    return (
        LabeledDataset(ids, sex_bits, outcomes, _SEX_GROUPS),
        LabeledDataset(ids, race_bits, outcomes, _RACE_GROUPS),
    )


# --- CSV I/O ----------------------------------------------------------------


def _read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    source = Path(path)
    if not source.exists():
        raise CLIError("file-not-found", f"no such file: {path}")
    with open(source, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CLIError("malformed-csv", f"{path} is empty") from None
        rows = [row for row in reader if row]
    return header, rows


def _read_labels(path) -> tuple[list[str], np.ndarray]:
    header, rows = _read_csv_rows(path)
    grp_header = [f"grp_{j}" for j in range(1, len(header))]
    try:
        if header == ["id", "group"]:
            ids = [row[0] for row in rows]
            labels = np.array([int(row[1]) for row in rows], dtype=np.int64)
            if labels.size == 0:
                raise ValueError("no data rows")
            if labels.min() < 0:
                raise ValueError("group indices must be non-negative")
            bits = np.eye(int(labels.max()) + 1, dtype=np.int64)[labels]
        elif len(header) >= 3 and header == ["id"] + grp_header:
            ids = [row[0] for row in rows]
            bits = np.array(
                [[int(value) for value in row[1:]] for row in rows],
                dtype=np.int64,
            )
            if bits.size == 0:
                raise ValueError("no data rows")
            if bits.shape[1] != len(grp_header):
                raise ValueError("ragged label rows")
            if not set(np.unique(bits)) <= {0, 1}:
                raise ValueError("label bits must be 0 or 1")
        else:
            raise ValueError("expected columns 'id,group' or 'id,grp_1..grp_g'")
    except (ValueError, IndexError) as err:
        raise CLIError("malformed-csv", f"{path}: {err}") from None
    if len(set(ids)) != len(ids):
        raise CLIError("malformed-csv", f"{path} has duplicate ids")
    return ids, bits


def _read_outcomes(path) -> tuple[dict, bool]:
    header, rows = _read_csv_rows(path)
    has_treated = header == ["id", "outcome", "treated"]
    if not (header == ["id", "outcome"] or has_treated):
        raise CLIError(
            "malformed-csv", f"{path} must have columns 'id,outcome[,treated]'"
        )
    mapping: dict[str, tuple[float, int | None]] = {}
    try:
        for row in rows:
            identifier = row[0]
            if identifier in mapping:
                raise ValueError(f"duplicate id {identifier!r}")
            flag = None
            if has_treated:
                flag = int(row[2])
                if flag not in (0, 1):
                    raise ValueError("treated flags must be 0 or 1")
            mapping[identifier] = (float(row[1]), flag)
    except (ValueError, IndexError) as err:
        raise CLIError("malformed-csv", f"{path}: {err}") from None
    return mapping, has_treated


def _join(ids, mapping, has_treated):
    missing = sum(1 for identifier in ids if identifier not in mapping)
    extra = len(set(mapping) - set(ids))
    if missing or extra:
        raise CLIError(
            "join-mismatch",
            f"label and outcome ids differ ({missing} without outcomes, "
            f"{extra} without labels)",
        )
    outcomes = np.array([mapping[identifier][0] for identifier in ids])
    treated = None
    if has_treated:
        treated = np.array(
            [mapping[identifier][1] for identifier in ids], dtype=np.int64
        )
    return outcomes, treated


def _write_bits(path, ids, bits) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id"] + [f"grp_{j}" for j in range(1, bits.shape[1] + 1)])
        for identifier, row in zip(ids, bits):
            writer.writerow([identifier] + [int(value) for value in row])


def _emit(payload: dict, out) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- shared validation ------------------------------------------------------


def _build_mechanism(name, g, epsilon, k) -> MechanismSpec | None:
    if name in (None, "none"):
        if epsilon is not None or k is not None:
            raise CLIError("invalid-config", "--epsilon and --k require --mech")
        return None
    if epsilon is None:
        raise CLIError("invalid-config", f"mechanism {name!r} needs --epsilon")
    if k is not None and name != "subset":
        raise CLIError("invalid-config", "--k only applies to the subset mechanism")
    try:
        if name == "rr":
            return rand_response(g, epsilon)
        if name == "bitflip":
            return bit_flip(g, epsilon)
        return subset(g, epsilon, k)
    except ValueError as err:
        raise CLIError("invalid-config", str(err)) from None


def _check_channel(scenario: str, mech_name: str) -> None:
    if mech_name != "none" and mech_name not in _SCENARIO_CHANNELS[scenario]:
        raise CLIError(
            "invalid-config",
            f"mechanism {mech_name!r} is not available for scenario {scenario!r}",
        )


def _require_one_hot(bits, scenario) -> None:
    if not (bits.sum(axis=1) == 1).all():
        raise CLIError(
            "scenario-mismatch",
            f"scenario {scenario!r} needs one-hot labels (one group per row)",
        )


def _require_binary(outcomes, scenario) -> None:
    if not set(np.unique(outcomes)) <= {0.0, 1.0}:
        raise CLIError(
            "scenario-mismatch", f"scenario {scenario!r} needs 0/1 outcomes"
        )


def _require_width(bits, scenario, width) -> None:
    if bits.shape[1] != width:
        raise CLIError(
            "scenario-mismatch",
            f"scenario {scenario!r} needs {width} label columns, "
            f"found {bits.shape[1]}",
        )


def _pair_indices(args, g) -> tuple[int, int]:
    if args.j is None or args.ell is None:
        raise CLIError(
            "invalid-config", "the pairwise scenario needs --j and --ell"
        )
    j, ell = args.j - 1, args.ell - 1
    if not (0 <= j < g and 0 <= ell < g) or j == ell:
        raise CLIError(
            "invalid-config",
            f"--j and --ell must be distinct group numbers between 1 and {g}",
        )
    return j, ell


def _ab_inputs(args, bits, treated):
    if args.mech != "rr":
        raise CLIError(
            "invalid-config", "the abtest scenario needs --mech rr --epsilon"
        )
    if args.lam is None:
        raise CLIError("invalid-config", "the abtest scenario needs --lam")
    if not 0.0 < args.lam < 1.0:
        raise CLIError(
            "invalid-config", "--lam must lie strictly between 0 and 1"
        )
    if treated is None:
        raise CLIError(
            "scenario-mismatch",
            "the abtest scenario needs a 'treated' column in the outcomes file",
        )
    _require_width(bits, "abtest", 2)
    _require_one_hot(bits, "abtest")


# --- subcommands ------------------------------------------------------------


def cmd_privatize(args) -> None:
    """Privatize a labels CSV row by row and write g membership columns."""
    ids, bits = _read_labels(args.input)
    if not (bits.sum(axis=1) == 1).all():
        raise CLIError(
            "malformed-csv", "true labels must set exactly one group per row"
        )
    labels = bits.argmax(axis=1)
    g = bits.shape[1]
    if args.groups is not None:
        if args.groups < g:
            raise CLIError(
                "invalid-config",
                f"--groups {args.groups} is below the largest label in the input",
            )
        g = args.groups
    mech = _build_mechanism(args.mech, g, args.epsilon, args.k)
    rng = np.random.default_rng(args.seed)
    _write_bits(args.output, ids, privatize_batch(mech, labels, rng))


def _load_joined(args):
    ids, bits = _read_labels(args.labels)
    mapping, has_treated = _read_outcomes(args.outcomes)
    outcomes, treated = _join(ids, mapping, has_treated)
    if not 0.0 < args.alpha < 1.0:
        raise CLIError("invalid-config", "alpha must lie strictly between 0 and 1")
    _check_channel(args.scenario, args.mech)
    mech = _build_mechanism(args.mech, bits.shape[1], args.epsilon, args.k)
    return ids, bits, outcomes, treated, mech


def _build_model(args, bits, outcomes, treated, mech):
    """(model, moments) for the scenario; validates label/outcome shape."""
    scenario = args.scenario
    epsilon = None if args.mech == "none" else args.epsilon
    delta = args.delta
    if scenario in ("independence", "anova") and delta != 0.0:
        raise CLIError(
            "invalid-config",
            f"scenario {scenario!r} has no scalar effect; drop --delta",
        )
    if scenario == "proportions":
        _require_width(bits, scenario, 2)
        _require_one_hot(bits, scenario)
        _require_binary(outcomes, scenario)
        counts = PropCounts.from_arrays(
            bits.argmax(axis=1), outcomes.astype(np.int64)
        )
        return prop_model(delta, epsilon), counts.to_moments()
    if scenario == "independence":
        _require_binary(outcomes, scenario)
        return indep_model(bits.shape[1], mech), indep_moments(bits, outcomes)
    if scenario == "means":
        _require_width(bits, scenario, 2)
        _require_one_hot(bits, scenario)
        return diff_means_model(delta, epsilon), build_moments(bits, outcomes)
    if scenario == "anova":
        return anova_model(bits.shape[1], mech), build_moments(bits, outcomes)
    if scenario == "pairwise":
        j, ell = _pair_indices(args, bits.shape[1])
        model = pairwise_within_g(bits.shape[1], j, ell, delta, mech)
        return model, build_moments(bits, outcomes)
    _ab_inputs(args, bits, treated)
    moments = ab_moments_from_arrays(treated, bits, outcomes)
    return ab_model(args.lam, epsilon, delta), moments


def cmd_test(args) -> None:
    """Run the minimum chi-square test for a scenario on joined files."""
    ids, bits, outcomes, treated, mech = _load_joined(args)
    model, moments = _build_model(args, bits, outcomes, treated, mech)
    try:
        result = general_chisq(model, moments, args.alpha)
        estimates = [float(v) for v in np.asarray(model.plugin_estimate(moments))]
    except ValueError as err:
        raise CLIError("scenario-mismatch", str(err)) from None
    _emit(
        {
            "schema": SCHEMA,
            "command": "test",
            "scenario": args.scenario,
            "alpha": args.alpha,
            "delta": args.delta,
            "mechanism": None if args.mech == "none" else args.mech,
            "epsilon": args.epsilon,
            "n": len(ids),
            "statistic": result.statistic,
            "dof": result.dof,
            "p_value": result.p_value,
            "reject": result.reject,
            "guard": result.guard,
            "estimates": estimates,
        },
        args.out,
    )


def _ci_problem(args, bits, outcomes, treated, mech):
    """(model factory over the effect, moments, search bounds)."""
    scenario = args.scenario
    epsilon = None if args.mech == "none" else args.epsilon
    if scenario == "proportions":
        _require_width(bits, scenario, 2)
        _require_one_hot(bits, scenario)
        _require_binary(outcomes, scenario)
        counts = PropCounts.from_arrays(
            bits.argmax(axis=1), outcomes.astype(np.int64)
        )
        factory = lambda delta: prop_model(delta, epsilon)  # noqa: E731
        return factory, counts.to_moments(), (-0.95, 0.95)
    if scenario == "means":
        _require_width(bits, scenario, 2)
        _require_one_hot(bits, scenario)
        moments = build_moments(bits, outcomes)
        factory = lambda delta: diff_means_model(delta, epsilon)  # noqa: E731
        return factory, moments, pairwise_ci_bounds(moments, mech)
    if scenario == "pairwise":
        g = bits.shape[1]
        j, ell = _pair_indices(args, g)
        moments = build_moments(bits, outcomes)
        factory = lambda delta: pairwise_within_g(g, j, ell, delta, mech)  # noqa: E731
        return factory, moments, pairwise_ci_bounds(moments, mech)
    _ab_inputs(args, bits, treated)
    moments = ab_moments_from_arrays(treated, bits, outcomes)
    factory = lambda delta: ab_model(args.lam, epsilon, delta)  # noqa: E731
    return factory, moments, ab_ci_bounds(moments)


def cmd_ci(args) -> None:
    """Invert the test into a confidence interval for the scalar effect."""
    ids, bits, outcomes, treated, mech = _load_joined(args)
    if not args.tolerance > 0.0:
        raise CLIError("invalid-config", "tolerance must be positive")
    factory, moments, bounds = _ci_problem(args, bits, outcomes, treated, mech)
    try:
        interval = ci_search(factory, moments, bounds, args.alpha, args.tolerance)
    except NoAcceptingDeltaError as err:
        raise CLIError(err.code, str(err)) from None
    except ValueError as err:
        raise CLIError("scenario-mismatch", str(err)) from None
    _emit(
        {
            "schema": SCHEMA,
            "command": "ci",
            "scenario": args.scenario,
            "alpha": args.alpha,
            "tolerance": args.tolerance,
            "mechanism": None if args.mech == "none" else args.mech,
            "epsilon": args.epsilon,
            "n": len(ids),
            "ci": {"lower": interval.lower, "upper": interval.upper},
        },
        args.out,
    )


_CONFIG_KEYS = {
    "kind", "scenario", "methods", "n", "base_seed",
    "sweep", "grid", "population", "trials", "alpha",
}
_METHOD_KEYS = {"name", "mechanism", "epsilon", "k", "approach"}


def _parse_sweep_config(path):
    source = Path(path)
    if not source.exists():
        raise CLIError("file-not-found", f"no such file: {path}")
    try:
        raw = json.loads(source.read_text())
    except json.JSONDecodeError as err:
        raise CLIError("malformed-config", f"{path}: {err}") from None
    if not isinstance(raw, dict):
        raise CLIError("malformed-config", "sweep config must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise CLIError(
            "invalid-config", f"unknown config keys: {', '.join(unknown)}"
        )
    kind = raw.get("kind", "power")
    if kind not in ("power", "coverage"):
        raise CLIError("invalid-config", f"unknown sweep kind {kind!r}")
    for key in ("scenario", "methods", "n", "base_seed", "grid"):
        if key not in raw:
            raise CLIError("invalid-config", f"sweep config needs {key!r}")
    if not isinstance(raw["base_seed"], int) or isinstance(raw["base_seed"], bool):
        raise CLIError("invalid-config", "base_seed must be an integer")
    if not isinstance(raw["methods"], list):
        raise CLIError("invalid-config", "methods must be a list of objects")
    methods = []
    for entry in raw["methods"]:
        if not isinstance(entry, dict) or "name" not in entry:
            raise CLIError("invalid-config", "each method needs at least a name")
        unknown = sorted(set(entry) - _METHOD_KEYS)
        if unknown:
            raise CLIError(
                "invalid-config", f"unknown method keys: {', '.join(unknown)}"
            )
        methods.append(
            MethodSpec(
                name=entry["name"],
                mechanism=entry.get("mechanism"),
                epsilon=entry.get("epsilon"),
                k=entry.get("k"),
                approach=entry.get("approach", "chisq"),
            )
        )
    try:
        config = ExperimentConfig(
            scenario=raw["scenario"],
            methods=tuple(methods),
            n=raw["n"],
            base_seed=raw["base_seed"],
            sweep=raw.get("sweep", "effect"),
            grid=tuple(raw["grid"]),
            population=raw.get("population", {}),
            trials=raw.get("trials", default_trials()),
            alpha=raw.get("alpha", 0.05),
        )
    except (ConfigError, TypeError) as err:
        raise CLIError("invalid-config", str(err)) from None
    return kind, config


def cmd_sweep(args) -> None:
    """Run a sweep config and write its table (CSV, or JSON by extension)."""
    kind, config = _parse_sweep_config(args.config)
    try:
        if kind == "power":
            result = run_power_sweep(config)
        else:
            result = run_coverage_sweep(config)
    except ConfigError as err:
        raise CLIError("invalid-config", str(err)) from None
    rows = result.rows()
    if str(args.output).endswith(".json"):
        payload = {
            "schema": SCHEMA,
            "kind": result.kind,
            "sweep": result.sweep,
            "grid": [float(value) for value in result.grid],
            "methods": list(result.methods),
            "trials": result.trials,
            "rows": rows,
        }
        Path(args.output).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n"
        )
    else:
        with open(args.output, "w", newline="") as handle:
            writer = csv.DictWriter(
                handle,
                fieldnames=["kind", "sweep", "value", "method", "fraction", "se"],
                lineterminator="\n",
            )
            writer.writeheader()
            writer.writerows(rows)


# --- argument parsing -------------------------------------------------------


def _add_channel_arguments(parser, scenarios) -> None:
    parser.add_argument("labels", help="CSV of id + group labels")
    parser.add_argument("outcomes", help="CSV of id,outcome[,treated]")
    parser.add_argument(
        "--scenario", required=True, choices=scenarios,
        help="which test family to run",
    )
    parser.add_argument(
        "--mech", default="none", choices=("none", "rr", "bitflip", "subset"),
        help="channel the labels went through (default: none)",
    )
    parser.add_argument("--epsilon", type=float, help="channel privacy loss")
    parser.add_argument("--k", type=int, help="subset size (subset mechanism)")
    parser.add_argument("--alpha", type=float, default=0.05, help="test level")
    parser.add_argument(
        "--lam", type=float, help="treatment probability (abtest scenario)"
    )
    parser.add_argument(
        "--j", type=int, help="first group number, 1-based (pairwise scenario)"
    )
    parser.add_argument(
        "--ell", type=int, help="second group number, 1-based (pairwise scenario)"
    )
    parser.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lgdp",
        description="Hypothesis tests and intervals for locally privatized "
        "group labels.",
    )
    commands = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser
    )

    privatize = commands.add_parser(
        "privatize", help="push a labeled CSV through a privacy mechanism"
    )
    privatize.add_argument("input", help="CSV of id + true group labels")
    privatize.add_argument("output", help="destination CSV of membership bits")
    privatize.add_argument(
        "--mech", required=True, choices=("rr", "bitflip", "subset")
    )
    privatize.add_argument("--epsilon", type=float, required=True)
    privatize.add_argument("--k", type=int, help="subset size (default: optimal)")
    privatize.add_argument("--seed", type=int, required=True)
    privatize.add_argument(
        "--groups", type=int, help="total group count when labels do not cover it"
    )
    privatize.set_defaults(func=cmd_privatize)

    test = commands.add_parser(
        "test", help="run a hypothesis test on labels joined with outcomes"
    )
    _add_channel_arguments(test, _SCENARIOS)
    test.add_argument(
        "--delta", type=float, default=0.0, help="null effect size (default 0)"
    )
    test.set_defaults(func=cmd_test)

    ci = commands.add_parser(
        "ci", help="invert the test into a confidence interval"
    )
    _add_channel_arguments(ci, _CI_SCENARIOS)
    ci.add_argument(
        "--tolerance", type=float, default=1e-3,
        help="endpoint resolution in effect units",
    )
    ci.set_defaults(func=cmd_ci)

    sweep = commands.add_parser(
        "sweep", help="run a Monte Carlo sweep described by a JSON config"
    )
    sweep.add_argument("config", help="JSON experiment config")
    sweep.add_argument("output", help="table destination (.csv or .json)")
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except CLIError as err:
        message = " ".join(str(err.message).split())
        print(f"error: {err.code}: {message}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
