"""Configured scaling experiments with reproducible seeding and CSV/JSON output.

Every (m, redraw) pair is an independent work item with its own random
stream ``SeedSequence(seed, spawn_key=(i_m, redraw))``; the operator drawn
from it is reused for every s.  Items run on a thread pool and results are
consumed in submission order, so the output does not depend on the thread
count.
"""

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import metadata

import numpy as np

from .groups import parse_group
from .measurement import draw_operator, gaussian_operator, parse_instrument
from .rip import ascent_rip, exact_canonical_rip, monte_carlo_rip
from .sparsity import CanonicalL1, parse_model

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "CSV_COLUMNS",
    "thread_count",
    "manifest",
    "manifest_hash",
    "scaling_experiment",
    "rows_to_csv",
    "run",
]

CSV_COLUMNS = ("model", "group", "s", "m", "trials", "delta_median", "q25", "q75", "seed",
               "manifest_hash")
ESTIMATORS = ("exact", "monte_carlo", "ascent")
THREADS_ENV = "RIP_LAB_THREADS"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def thread_count(value=None):
    """Explicit value, else ``$RIP_LAB_THREADS``, else 1."""
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError("threads", f"not an integer: {value!r}") from None
    if value < 1:
        raise ConfigError("threads", "must be >= 1")
    return value


def _library_version():
    try:
        return metadata.version("riplab")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class ExperimentConfig:
    """A scaling experiment.

    ``group`` is a group spec (see :func:`riplab.groups.parse_group`) or the
    literal ``"gaussian"`` for dense i.i.d. N(0, 1/m) operators.
    """

    seed: int
    model: object = "l1:64"
    group: object = "hw:64"
    instrument: object = "gaussian"
    s_list: list = field(default_factory=lambda: [1, 2, 4])
    m_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    trials: int = 1000
    redraws: int = 20
    estimator: str = "exact"
    steps: int = 50
    zeta: float = 0.1
    delta_targets: list = field(default_factory=list)
    experiment_id: str = "scaling"
    csv_path: str = None
    manifest_path: str = None
    threads: int = None

    # fields that do not change results and are kept out of the manifest hash
    _EXECUTION_FIELDS = ("threads", "csv_path", "manifest_path")

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        if "seed" not in data:
            raise ConfigError("seed", "required (no wall-clock default)")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def _int_list(self, name, low):
        values = getattr(self, name)
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigError(name, "must be a non-empty list")
        out = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < low:
                raise ConfigError(f"{name}[{i}]", f"must be an integer >= {low}, got {v!r}")
            out.append(int(v))
        setattr(self, name, out)

    def validate(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        try:
            model = parse_model(self.model)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError("model", str(exc)) from None
        if self.group != "gaussian":
            try:
                group = parse_group(self.group)
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError("group", str(exc)) from None
            if group.N != model.size:
                raise ConfigError("group", f"acts on C^{group.N}, model on C^{model.size}")
            if self.instrument not in ("gaussian", "gaussian-raw"):
                try:
                    parse_instrument(self.instrument, group.N, rng=0)
                except (ValueError, TypeError, KeyError) as exc:
                    raise ConfigError("instrument", str(exc)) from None
        self._int_list("s_list", 1)
        self._int_list("m_list", 1)
        for name in ("trials", "redraws", "steps"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(name, f"must be a positive integer, got {v!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError("estimator", f"must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.estimator == "exact" and not isinstance(model, CanonicalL1):
            raise ConfigError("estimator", "exact enumeration needs the l1 model")
        if not 0 < float(self.zeta) < 1:
            raise ConfigError("zeta", "must lie in (0, 1)")
        for i, t in enumerate(self.delta_targets):
            if not float(t) > 0:
                raise ConfigError(f"delta_targets[{i}]", "must be positive")
        if self.threads is not None:
            thread_count(self.threads)

    def label(self, name):
        value = getattr(self, name)
        if isinstance(value, str):
            return value
        return json.dumps(value, sort_keys=True, separators=(",", ":"))


def _hashable_config(config):
    data = config.to_dict()
    for key in ExperimentConfig._EXECUTION_FIELDS:
        data.pop(key, None)
    return data


def manifest(config):
    """Config echo, library version and the per-item seed derivation."""
    return {
        "experiment_id": config.experiment_id,
        "config": _hashable_config(config),
        "library": {"riplab": _library_version(), "numpy": np.__version__},
        "seeding": {
            "entropy": int(config.seed),
            "items": [
                {"m": m, "redraw": r, "spawn_key": [i, r]}
                for i, m in enumerate(config.m_list) for r in range(config.redraws)
            ],
        },
    }


def manifest_hash(man):
    blob = json.dumps(man, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _run_item(config, model, i_m, m, redraw):
    ss = np.random.SeedSequence(int(config.seed), spawn_key=(i_m, redraw))
    op_seq, est_seq = ss.spawn(2)
    op_rng = np.random.default_rng(op_seq)
    if config.group == "gaussian":
        A = gaussian_operator(model.size, m, op_rng)
    else:
        A = draw_operator(config.group, config.instrument, m, op_rng)
    out = []
    for s, est in zip(config.s_list, est_seq.spawn(len(config.s_list))):
        rng = np.random.default_rng(est)
        if config.estimator == "exact":
            r = exact_canonical_rip(A, s)
        elif config.estimator == "monte_carlo":
            r = monte_carlo_rip(A, model, s, config.trials, rng)
        else:
            r = ascent_rip(A, model, s, config.trials, config.steps, rng)
        out.append(r.delta)
    return out


def _csv_row(row):
    return [repr(row[c]) if isinstance(row[c], float) else row[c] for c in CSV_COLUMNS]


def scaling_experiment(config, threads=None, on_rows=None):
    """Median and quartiles of the RIP deviation per (s, m).

    ``on_rows`` is called with the finished rows of each m as soon as all its
    redraws are done; the full row list is returned.
    """
    model = parse_model(config.model)
    threads = thread_count(threads if threads is not None else config.threads)
    items = [(i, m, r) for i, m in enumerate(config.m_list) for r in range(config.redraws)]
    h = manifest_hash(manifest(config))
    rows, block = [], []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = pool.map(lambda it: _run_item(config, model, *it), items)
        for (i, m, r), deltas in zip(items, futures):
            block.append(deltas)
            if r + 1 < config.redraws:
                continue
            values = np.array(block)
            block = []
            new = []
            for j, s in enumerate(config.s_list):
                q25, med, q75 = np.percentile(values[:, j], [25, 50, 75])
                new.append({
                    "model": config.label("model"), "group": config.label("group"),
                    "s": s, "m": m, "trials": config.trials if config.estimator != "exact" else 1,
                    "delta_median": float(med), "q25": float(q25), "q75": float(q75),
                    "seed": int(config.seed), "manifest_hash": h,
                })
            rows.extend(new)
            if on_rows is not None:
                on_rows(new)
    return rows


def rows_to_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(_csv_row(row) for row in rows)


def run(config, threads=None, stdout=None):
    """Run a configured experiment, writing CSV rows as each m completes.

    Returns the exit status: 0 on success, 130 if interrupted (rows finished
    so far are flushed and the manifest is marked ``interrupted``).
    """
    man = manifest(config)
    h = manifest_hash(man)
    man["manifest_hash"] = h
    man["threads"] = thread_count(threads if threads is not None else config.threads)
    sink = open(config.csv_path, "w", newline="") if config.csv_path else (stdout or io.StringIO())
    writer = csv.writer(sink, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)

    def emit(rows):
        writer.writerows(_csv_row(row) for row in rows)
        sink.flush()

    status = 0
    try:
        scaling_experiment(config, threads=man["threads"], on_rows=emit)
        man["status"] = "complete"
    except KeyboardInterrupt:
        man["status"] = "interrupted"
        status = 130
    finally:
        if config.csv_path:
            sink.close()
        if config.manifest_path:
            with open(config.manifest_path, "w") as fh:
                json.dump(man, fh, indent=2, sort_keys=True)
                fh.write("\n")
    return status
