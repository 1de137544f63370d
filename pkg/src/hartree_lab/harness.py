"""Experiment configuration, orchestration and persistence.

A run reads one YAML file, validates the physical parameters, executes the
suites that belong to the named experiment and writes a run directory::

    <out>/<experiment>/manifest.json     config, config hash, versions, verdicts
    <out>/<experiment>/<suite>__<table>.csv
    <out>/<experiment>/<artifact>/...    trajectories and hierarchy norm tables

CSV files contain only seeded, deterministic numbers, so two runs with the
same configuration produce byte-identical tables. Timings go to the
manifest only.
"""

import csv
import hashlib
import inspect
import io
import json
import os
import platform
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy
import yaml

from .errors import ConfigInvalid, ScheduleInfeasible, SuiteFailed
from .suites import SUITES

__all__ = [
    "Experiment",
    "PhysicalParams",
    "Numerics",
    "ExperimentConfig",
    "RunRecord",
    "EXPERIMENT_SUITES",
    "OUT_ENV",
    "load_config",
    "default_output_root",
    "run",
    "config_reference",
]

OUT_ENV = "HARTREE_LAB_OUT"
MANIFEST_FORMAT = "hartree-run"
MANIFEST_VERSION = 1


class Experiment(str, Enum):
    WEIGHTS = "WEIGHTS"
    APPENDIX_A = "APPENDIX_A"
    APPENDIX_B = "APPENDIX_B"
    ESTIMATORS = "ESTIMATORS"
    HIERARCHY = "HIERARCHY"
    AUX_SOLVE = "AUX_SOLVE"
    WAVE_OP = "WAVE_OP"
    GAUGE = "GAUGE"


EXPERIMENT_SUITES = {
    Experiment.WEIGHTS: (1,),
    Experiment.APPENDIX_A: (2,),
    Experiment.APPENDIX_B: (3,),
    Experiment.ESTIMATORS: (4,),
    Experiment.HIERARCHY: (5, 6),
    Experiment.AUX_SOLVE: (8,),
    Experiment.WAVE_OP: (9, 10, 11),
    Experiment.GAUGE: (7,),
}

# experiments whose time envelopes need a decaying h3
_NEEDS_SCHEDULE = (Experiment.AUX_SOLVE, Experiment.WAVE_OP)


@dataclass(frozen=True)
class PhysicalParams:
    """Space dimension, decay exponent, coupling, multiplier order, Gevrey index, expansion order."""

    n: int = 1
    gamma: float = 0.6
    kappa: float = 1.0
    mu: float = 1.0
    nu: float = 1.0
    p: int = 1


@dataclass(frozen=True)
class Numerics:
    """Seed plus per-criterion keyword overrides handed to the suite functions.

    ``suite_options`` maps a criterion number to keyword arguments, for
    instance ``{1: {"pairs": 200000}}``; unknown keywords are rejected.
    """

    seed: int = 0
    suite_options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    numerics: Numerics = field(default_factory=Numerics)
    output_dir: str = None

    def to_dict(self):
        d = asdict(self)
        d["experiment"] = self.experiment.value
        d["numerics"]["suite_options"] = {str(k): v for k, v in
                                          self.numerics.suite_options.items()}
        return d

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _section(raw, key, cls):
    data = raw.get(key) or {}
    if not isinstance(data, dict):
        raise ConfigInvalid(f"'{key}' must be a mapping")
    allowed = {f for f in cls.__dataclass_fields__}
    extra = set(data) - allowed
    if extra:
        raise ConfigInvalid(f"unknown keys in '{key}': {sorted(extra)}")
    return data


def _validate(cfg):
    ph = cfg.physical
    if ph.n not in (1, 2, 3):
        raise ConfigInvalid("n must be 1, 2 or 3")
    if not 0.0 < ph.mu <= ph.n:
        raise ConfigInvalid("need 0 < mu <= n")
    if not 0.0 < ph.gamma <= 1.0:
        raise ConfigInvalid("need 0 < gamma <= 1")
    if not 0.0 < ph.nu <= 1.0:
        raise ConfigInvalid("need 0 < nu <= 1")
    if ph.p < 0:
        raise ConfigInvalid("p must be nonnegative")
    if ph.mu > ph.n - 2 + 2 * ph.nu:
        warnings.warn(f"mu = {ph.mu} exceeds n - 2 + 2 nu = {ph.n - 2 + 2 * ph.nu}; "
                      "the existence theory does not cover this case", stacklevel=3)
    suites = EXPERIMENT_SUITES[cfg.experiment]
    for crit, opts in cfg.numerics.suite_options.items():
        if crit not in suites:
            raise ConfigInvalid(f"suite_options for criterion {crit}, which "
                                f"{cfg.experiment.value} does not run")
        params = inspect.signature(SUITES[crit]).parameters
        bad = set(opts) - set(params)
        if bad:
            raise ConfigInvalid(f"criterion {crit} has no options {sorted(bad)}")


def load_config(source, *, seed=None, output_dir=None, experiment=None):
    """Build an :class:`ExperimentConfig` from YAML text, a path or a mapping.

    ``seed``, ``output_dir`` and ``experiment`` override the file's values.
    """
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = Path(source).read_text() if isinstance(source, (str, Path)) and \
            Path(str(source)).exists() else str(source or "")
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigInvalid(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    extra = set(raw) - {"experiment", "physical", "numerics", "output_dir"}
    if extra:
        raise ConfigInvalid(f"unknown top-level keys: {sorted(extra)}")
    name = experiment or raw.get("experiment")
    try:
        exp = Experiment(str(name).upper())
    except ValueError as exc:
        raise ConfigInvalid(f"unknown experiment {name!r}") from exc
    try:
        phys = PhysicalParams(**_section(raw, "physical", PhysicalParams))
        num_raw = _section(raw, "numerics", Numerics)
        opts = {int(k): dict(v or {}) for k, v in (num_raw.get("suite_options") or {}).items()}
        num = Numerics(int(num_raw.get("seed", 0)), opts)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc
    if seed is not None:
        num = Numerics(int(seed), num.suite_options)
    cfg = ExperimentConfig(exp, phys, num, output_dir or raw.get("output_dir"))
    _validate(cfg)
    return cfg


def default_output_root():
    return Path(os.environ.get(OUT_ENV, "hartree_runs"))


@dataclass
class RunRecord:
    config: ExperimentConfig
    results: list
    run_dir: Path
    manifest: dict

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def exit_code(self):
        return 0 if self.passed else 1


def _versions():
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"hartree_lab": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "pyyaml": yaml.__version__, "python": platform.python_version()}


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_cell(v) for v in row])
    Path(path).write_text(buf.getvalue())


def _suite_kwargs(cfg, crit):
    fn = SUITES[crit]
    params = inspect.signature(fn).parameters
    ph = cfg.physical
    offered = {"seed": cfg.numerics.seed, "gamma": ph.gamma, "kappa": ph.kappa, "mu": ph.mu,
               "p": ph.p}
    kw = {k: v for k, v in offered.items() if k in params}
    kw.update(cfg.numerics.suite_options.get(crit, {}))
    return kw


def _save_artifacts(result, run_dir):
    names = []
    for name, obj in result.artifacts.items():
        target = run_dir / f"{result.suite}__{name}"
        if hasattr(obj, "save"):
            obj.save(target)
        else:
            target = target.with_suffix(".csv")
            target.write_text(obj)
        names.append(target.name)
    return names


def run(config, *, raise_on_failure=False):
    """Execute the suites of ``config.experiment`` and persist the run.

    Returns
    -------
    RunRecord
        ``exit_code`` is 0 exactly when every assertion passed.

    Raises
    ------
    ConfigInvalid
        For invalid physical parameters.
    ScheduleInfeasible
        For solver experiments with ``(p + 2) gamma <= 1``, after a warning.
    SuiteFailed
        If ``raise_on_failure`` and an assertion failed; ``details`` lists them.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    _validate(config)
    ph = config.physical
    if config.experiment in _NEEDS_SCHEDULE and (ph.p + 2) * ph.gamma <= 1.0:
        warnings.warn(f"(p+2) gamma = {(ph.p + 2) * ph.gamma:g} <= 1", stacklevel=2)
        raise ScheduleInfeasible("(p+2) gamma <= 1: the remainder envelope cannot decay")
    root = Path(config.output_dir) if config.output_dir else default_output_root()
    run_dir = root / config.experiment.value.lower()
    run_dir.mkdir(parents=True, exist_ok=True)
    results, entries = [], []
    for crit in EXPERIMENT_SUITES[config.experiment]:
        res = SUITES[crit](**_suite_kwargs(config, crit))
        results.append(res)
        files = []
        for tname, (header, rows) in res.tables.items():
            fname = f"{res.suite}__{tname}.csv"
            write_csv(run_dir / fname, header, rows)
            files.append(fname)
        files += _save_artifacts(res, run_dir)
        entries.append({"criterion": crit, "suite": res.suite, "passed": res.passed,
                        "elapsed_s": res.elapsed, "summary": res.summary(),
                        "assertions": [a.to_dict() for a in res.assertions], "files": files})
    manifest = {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION,
                "config": config.to_dict(), "config_hash": config.config_hash(),
                "versions": _versions(), "passed": all(r.passed for r in results),
                "suites": entries}
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    record = RunRecord(config, results, run_dir, manifest)
    if raise_on_failure and not record.passed:
        details = [f"criterion {r.criterion} {a.name}: {a.value:.6g} vs {a.threshold:.6g}"
                   for r in results for a in r.failures()]
        raise SuiteFailed(f"{len(details)} assertion(s) failed", details)
    return record


def config_reference():
    """Markdown page listing every configuration key with its default."""
    lines = ["# Configuration reference", "",
             "Top-level keys: `experiment` (required), `physical`, `numerics`, `output_dir`.",
             "", "## experiment", ""]
    for exp, crits in EXPERIMENT_SUITES.items():
        lines.append(f"- `{exp.value}`: criteria {', '.join(map(str, crits))}")
    lines += ["", "## physical", "", "| key | default |", "|---|---|"]
    for k, v in asdict(PhysicalParams()).items():
        lines.append(f"| `{k}` | {v} |")
    lines += ["", "## numerics", "", "| key | default |", "|---|---|",
              "| `seed` | 0 |", "| `suite_options` | {} |", "",
              "### suite_options per criterion", ""]
    for crit, fn in SUITES.items():
        opts = [f"`{name}={p.default!r}`" for name, p in inspect.signature(fn).parameters.items()
                if p.default is not inspect.Parameter.empty]
        lines.append(f"- {crit} ({fn.__name__}): " + ", ".join(opts))
    lines += ["", f"`output_dir` defaults to `${OUT_ENV}` or `./hartree_runs`.", ""]
    return "\n".join(lines)
