"""Three-stage pipeline: DEA scoring, cluster validation, path modeling.

The pipeline is driven by a single JSON configuration document (see README
for the schema). Identical configuration and dataset produce byte-identical
JSON reports: every stochastic stage requires an explicit seed, reports
carry no timestamps, and serialization is canonical (sorted keys, repr
floats). Stages can also run one at a time, chaining through the same
report.json document they would have produced together.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .cluster import CLUSTER_F_CAVEAT, KSweepReport, sweep_k
from .dea import DeaSpec, EfficiencyPanel, run_panel_dea
from .errors import (
    ConfigError,
    PanelEffError,
    StageError,
    UsageError,
)
from .panel_data import (
    PanelDataset,
    ValidationReport,
    VariableDef,
    load_panel,
    transform_undesirable,
    validate_for_dea,
)
from .pls import (
    LatentBlock,
    PathModelSpec,
    bootstrap_significance,
    build_cobb_douglas_design,
    fit_path_model,
    ols,
)

FORMATS = ("csv", "json", "text")
REPORT_BASENAME = "report"

STAGE_DEA = "dea"
STAGE_CLUSTER = "cluster"
STAGE_PLS = "pls"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DeaAnalysisConfig:
    name: str
    spec: DeaSpec


@dataclass(frozen=True)
class ClusterStageConfig:
    k_max: int
    k_min: int
    restarts: int
    seed: int
    significance: float


@dataclass(frozen=True)
class PlsModelConfig:
    name: str
    spec: PathModelSpec


@dataclass(frozen=True)
class CobbDouglasConfig:
    ict_var: str
    health_vars: tuple[str, ...]
    target: str


@dataclass(frozen=True)
class PlsStageConfig:
    models: tuple[PlsModelConfig, ...]
    bootstrap_samples: int
    bootstrap_seed: int
    cobb_douglas: tuple[CobbDouglasConfig, ...] = ()


@dataclass(frozen=True)
class PipelineConfig:
    dataset_path: str
    schema: tuple[VariableDef, ...]
    transforms: tuple[tuple[str, str], ...]
    dea_analyses: tuple[DeaAnalysisConfig, ...]
    cluster: ClusterStageConfig | None
    pls: PlsStageConfig | None
    output_dir: str
    formats: tuple[str, ...]
    config_hash: str

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Override every stochastic stage's seed (the --seed flag)."""
        cluster = replace(self.cluster, seed=seed) if self.cluster else None
        pls = replace(self.pls, bootstrap_seed=seed) if self.pls else None
        return replace(self, cluster=cluster, pls=pls)


def config_from_file(path) -> PipelineConfig:
    """Parse and validate a configuration file; the provenance hash covers
    the raw file bytes."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        document = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: not a valid JSON document: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    return parse_config(document, config_hash=hashlib.sha256(raw).hexdigest(), base_dir=base)


def parse_config(document: dict, config_hash: str | None = None, base_dir: str | None = None) -> PipelineConfig:
    """Validate a configuration document and resolve relative paths against
    base_dir (the config file's directory)."""
    if config_hash is None:
        canonical = json.dumps(document, sort_keys=True, separators=(",", ":")).encode()
        config_hash = hashlib.sha256(canonical).hexdigest()
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object")

    dataset = _require(document, "dataset", dict)
    path = _require(dataset, "path", str)
    if base_dir and not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    schema_entries = _require(dataset, "schema", list)
    if not schema_entries:
        raise ConfigError("dataset.schema must not be empty")
    schema = []
    for entry in schema_entries:
        if not isinstance(entry, dict) or "name" not in entry or "role" not in entry:
            raise ConfigError(f"dataset.schema entries need 'name' and 'role': {entry!r}")
        try:
            schema.append(VariableDef(entry["name"], entry["role"], entry.get("direction", "desirable")))
        except PanelEffError as exc:
            raise ConfigError(str(exc)) from exc
    names = {v.name for v in schema}
    if len(names) != len(schema):
        raise ConfigError("dataset.schema variable names must be unique")

    def known(name, where):
        if name not in names:
            raise ConfigError(f"{where} references unknown variable {name!r}")
        return name

    transforms = []
    for entry in dataset.get("transforms", []):
        variable = known(_require(entry, "variable", str), "dataset.transforms")
        method = entry.get("method", "max_minus")
        if method not in ("reciprocal", "max_minus"):
            raise ConfigError(f"dataset.transforms: unknown method {method!r}")
        transforms.append((variable, method))

    analyses = []
    seen = set()
    for entry in _require(document, "dea", list):
        name = _require(entry, "name", str)
        if name in seen:
            raise ConfigError(f"duplicate dea analysis name {name!r}")
        seen.add(name)
        inputs = [known(v, f"dea analysis {name!r}") for v in _require(entry, "inputs", list)]
        outputs = [known(v, f"dea analysis {name!r}") for v in _require(entry, "outputs", list)]
        try:
            spec = DeaSpec(
                tuple(inputs),
                tuple(outputs),
                entry.get("returns_to_scale", "CRS"),
                entry.get("orientation", "input"),
            )
        except PanelEffError as exc:
            raise ConfigError(f"dea analysis {name!r}: {exc}") from exc
        analyses.append(DeaAnalysisConfig(name, spec))
    if not analyses:
        raise ConfigError("at least one dea analysis is required")

    cluster = None
    if "cluster" in document and document["cluster"]:
        entry = document["cluster"]
        cluster = ClusterStageConfig(
            k_max=int(_require(entry, "k_max", int)),
            k_min=int(_require(entry, "k_min", int)),
            restarts=int(entry.get("restarts", 32)),
            seed=_seed(entry, "cluster.seed"),
            significance=float(entry.get("significance", 0.05)),
        )
        if not (cluster.k_max >= cluster.k_min >= 2):
            raise ConfigError("cluster stage needs k_max >= k_min >= 2")
        if cluster.restarts < 1:
            raise ConfigError("cluster.restarts must be >= 1")
        if not (0.0 < cluster.significance < 1.0):
            raise ConfigError("cluster.significance must be in (0, 1)")

    pls = None
    if "pls" in document and document["pls"]:
        entry = document["pls"]
        models = []
        model_names = set()
        for m in _require(entry, "models", list):
            mname = _require(m, "name", str)
            if mname in model_names:
                raise ConfigError(f"duplicate pls model name {mname!r}")
            model_names.add(mname)
            blocks = []
            for b in _require(m, "blocks", list):
                indicators = [known(i, f"pls model {mname!r}") for i in _require(b, "indicators", list)]
                blocks.append(LatentBlock(_require(b, "latent", str), tuple(indicators)))
            paths = tuple((p[0], p[1]) for p in _require(m, "paths", list))
            try:
                spec = PathModelSpec(tuple(blocks), paths, m.get("inner_scheme", "path_weighting"))
            except PanelEffError as exc:
                raise ConfigError(f"pls model {mname!r}: {exc}") from exc
            models.append(PlsModelConfig(mname, spec))
        if not models:
            raise ConfigError("pls stage needs at least one model")
        boot = _require(entry, "bootstrap", dict)
        samples = int(boot.get("samples", 500))
        if samples < 100:
            raise ConfigError("pls.bootstrap.samples must be >= 100")
        cobb = []
        for c in entry.get("cobb_douglas", []):
            cobb.append(
                CobbDouglasConfig(
                    ict_var=known(_require(c, "ict_var", str), "pls.cobb_douglas"),
                    health_vars=tuple(known(v, "pls.cobb_douglas") for v in _require(c, "health_vars", list)),
                    target=known(_require(c, "target", str), "pls.cobb_douglas"),
                )
            )
        pls = PlsStageConfig(tuple(models), samples, _seed(boot, "pls.bootstrap.seed"), tuple(cobb))

    output = document.get("output", {})
    out_dir = output.get("directory", "reports")
    if base_dir and not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    formats = tuple(output.get("formats", ["json"]))
    for f in formats:
        if f not in FORMATS:
            raise ConfigError(f"output.formats: unknown format {f!r} (choose from {FORMATS})")

    return PipelineConfig(
        dataset_path=path,
        schema=tuple(schema),
        transforms=tuple(transforms),
        dea_analyses=tuple(analyses),
        cluster=cluster,
        pls=pls,
        output_dir=out_dir,
        formats=formats or ("json",),
        config_hash=config_hash,
    )


def _require(obj, key, kind):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"missing required configuration key {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"configuration key {key!r} must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"configuration key {key!r} must be {kind.__name__}")
    return value


def _seed(obj, where) -> int:
    # stochastic stages must not fall back to implicit randomness
    if "seed" not in obj:
        raise ConfigError(f"{where} is required: stochastic stages need an explicit seed")
    seed = obj["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{where} must be a non-negative integer")
    return seed


# ---------------------------------------------------------------------------
# report bundle


@dataclass(frozen=True)
class ReportBundle:
    """Everything one run produces, in JSON-ready form."""

    provenance: dict
    dea: dict
    cluster: dict
    correspondence: dict
    pls: dict
    incomplete: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "provenance": self.provenance,
            "dea": self.dea,
            "cluster": self.cluster,
            "correspondence": self.correspondence,
            "pls": self.pls,
        }
        if self.incomplete is not None:
            doc["incomplete"] = self.incomplete
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ReportBundle":
        return cls(
            provenance=doc["provenance"],
            dea=doc["dea"],
            cluster=doc["cluster"],
            correspondence=doc["correspondence"],
            pls=doc["pls"],
            incomplete=doc.get("incomplete"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.from_dict(json.loads(text))


def build_provenance(config: PipelineConfig) -> dict:
    seeds = {}
    if config.cluster:
        seeds["cluster"] = config.cluster.seed
    if config.pls:
        seeds["bootstrap"] = config.pls.bootstrap_seed
    return {
        "tool": "paneleff",
        "version": __version__,
        "config_hash": config.config_hash,
        "dataset": os.path.basename(config.dataset_path),
        "seeds": seeds,
    }


def load_dataset(config: PipelineConfig) -> PanelDataset:
    panel = load_panel(config.dataset_path, config.schema)
    for variable, method in config.transforms:
        panel = transform_undesirable(panel, variable, method)
    return panel


def validate_config_dataset(config: PipelineConfig) -> dict[str, ValidationReport]:
    """validate_for_dea for every configured analysis, keyed by name."""
    panel = load_dataset(config)
    return {a.name: validate_for_dea(panel, a.spec) for a in config.dea_analyses}


# ---------------------------------------------------------------------------
# stages


def run_dea_stage(config: PipelineConfig, panel: PanelDataset) -> dict:
    section = {}
    for analysis in config.dea_analyses:
        panel_result = run_panel_dea(panel, analysis.spec)
        section[analysis.name] = _dea_table(panel_result)
    return section


def _dea_table(result: EfficiencyPanel) -> dict:
    return {
        "inputs": list(result.spec.input_vars),
        "outputs": list(result.spec.output_vars),
        "returns_to_scale": result.spec.returns_to_scale,
        "orientation": result.spec.orientation,
        "dmus": list(result.dmus),
        "periods": list(result.periods),
        "scores": [[float(x) for x in row] for row in result.scores],
        "means": [float(x) for x in result.means],
    }


def run_cluster_stage(config: PipelineConfig, dea_section: dict) -> tuple[dict, dict]:
    cfg = config.cluster
    analyses = {}
    # iterate in configuration order: dea_section may have been re-read from
    # a sorted JSON document
    for analysis in config.dea_analyses:
        name = analysis.name
        table = dea_section[name]
        report = sweep_k(
            np.array(table["means"]),
            cfg.k_max,
            cfg.k_min,
            restarts=cfg.restarts,
            seed=cfg.seed,
            significance=cfg.significance,
        )
        analyses[name] = _cluster_table(report, table["dmus"])
    section = {
        "k_max": cfg.k_max,
        "k_min": cfg.k_min,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
        "significance": cfg.significance,
        "caveat": CLUSTER_F_CAVEAT,
        "analyses": analyses,
    }
    return section, _correspondence(analyses, dea_section)


def _cluster_table(report: KSweepReport, dmus: list) -> dict:
    sweep = []
    for k, solution, anova in report.entries:
        sweep.append({
            "k": k,
            "f_value": _finite_or_none(anova.f_value),
            "p_value": anova.p_value,
            "df_between": anova.df_between,
            "df_within": anova.df_within,
            "sse_within": solution.sse_within,
            "flags": list(anova.flags),
        })
    table = {
        "selected_k": report.selected_k,
        "selection_rule": report.selection_rule,
        "flags": list(report.flags),
        "sweep": sweep,
    }
    if report.selected is not None:
        _, solution, anova = report.selected
        table["assignments"] = [int(c) for c in solution.assignments]
        table["centroids"] = [float(c) for c in solution.centroids[:, 0]]
        table["sizes"] = list(solution.sizes)
        table["anova"] = {
            "df_between": anova.df_between,
            "df_within": anova.df_within,
            "f_value": _finite_or_none(anova.f_value),
            "p_value": anova.p_value,
            "flags": list(anova.flags),
        }
    return table


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def _correspondence(cluster_analyses: dict, dea_section: dict) -> dict:
    """DMU-by-analysis cluster membership, plus a pairwise contingency table
    and best-label-matching agreement count for every analysis pair."""
    names = [n for n in cluster_analyses if "assignments" in cluster_analyses[n]]
    if not names:
        return {"skipped": True, "reason": "no analysis selected a cluster count"}
    dmus = dea_section[names[0]]["dmus"]
    memberships = {n: cluster_analyses[n]["assignments"] for n in names}
    doc = {
        "dmus": list(dmus),
        "analyses": names,
        "clusters": [[memberships[n][i] for n in names] for i in range(len(dmus))],
    }
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            pairs.append(_pair_agreement(a, memberships[a], b, memberships[b]))
    doc["pairs"] = pairs
    return doc


def _pair_agreement(name_a: str, assign_a, name_b: str, assign_b) -> dict:
    from itertools import permutations

    ka = max(assign_a) + 1
    kb = max(assign_b) + 1
    table = [[0] * kb for _ in range(ka)]
    for ca, cb in zip(assign_a, assign_b):
        table[ca][cb] += 1
    best = 0
    if ka <= kb:
        for perm in permutations(range(kb), ka):
            best = max(best, sum(table[i][perm[i]] for i in range(ka)))
    else:
        for perm in permutations(range(ka), kb):
            best = max(best, sum(table[perm[j]][j] for j in range(kb)))
    n = len(assign_a)
    return {
        "analyses": [name_a, name_b],
        "contingency": table,
        "agreement": best,
        "agreement_rate": best / n,
    }


def run_pls_stage(config: PipelineConfig, panel: PanelDataset) -> dict:
    cfg = config.pls
    data = _pooled_observations(panel)
    models = {}
    for model in cfg.models:
        estimates = fit_path_model(data, model.spec)
        boot = bootstrap_significance(
            data, model.spec, samples=cfg.bootstrap_samples, seed=cfg.bootstrap_seed
        )
        paths = []
        for (source, target), beta in estimates.path_coefficients.items():
            paths.append({
                "source": source,
                "target": target,
                "coefficient": beta,
                "std_error": boot.std_error[(source, target)],
                "t_statistic": _finite_or_none(boot.t_statistic[(source, target)]),
                "p_value": boot.p_value[(source, target)],
            })
        models[model.name] = {
            "inner_scheme": model.spec.inner_scheme,
            "converged": estimates.converged,
            "iterations": estimates.iterations,
            "paths": paths,
            "r_squared": {k: float(v) for k, v in estimates.r_squared.items()},
            "loadings": {k: float(v) for k, v in estimates.outer_loadings.items()},
        }
    section = {
        "observations": "pooled (dmu, period) rows",
        "bootstrap_samples": cfg.bootstrap_samples,
        "seed": cfg.bootstrap_seed,
        "models": models,
    }
    if cfg.cobb_douglas:
        section["cobb_douglas"] = [_cobb_douglas_table(panel, c) for c in cfg.cobb_douglas]
    return section


def _pooled_observations(panel: PanelDataset) -> dict:
    n = len(panel.dmus) * len(panel.periods)
    return {v.name: panel.values[:, :, i].reshape(n) for i, v in enumerate(panel.variables)}


def _cobb_douglas_table(panel: PanelDataset, cfg: CobbDouglasConfig) -> dict:
    design = build_cobb_douglas_design(panel, cfg.ict_var, cfg.health_vars)
    target = panel.column(cfg.target).reshape(-1)
    if np.any(~(np.isfinite(target) & (target > 0.0))):
        raise UsageError(f"cobb_douglas target {cfg.target!r} must be strictly positive")
    X = np.column_stack([np.ones(design.values.shape[0]), design.values])
    fit = ols(X, np.log(target))
    columns = ("const",) + design.columns
    return {
        "target": f"ln_{cfg.target}",
        "columns": list(columns),
        "coefficients": [float(b) for b in fit.coefficients],
        "standard_errors": [float(s) for s in fit.standard_errors],
    }


# ---------------------------------------------------------------------------
# orchestration


_SKIPPED = {"skipped": True}
_PENDING = {"pending": True}


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    """Run every configured stage. A stage failure raises StageError carrying
    the partial bundle (completed stages plus an incomplete marker)."""
    provenance = build_provenance(config)
    dea_section: dict = {}
    cluster_section = _SKIPPED if config.cluster is None else dict(_PENDING)
    correspondence = _SKIPPED if config.cluster is None else dict(_PENDING)
    pls_section = _SKIPPED if config.pls is None else dict(_PENDING)

    def partial(stage, exc) -> ReportBundle:
        return ReportBundle(
            provenance=provenance,
            dea=dea_section,
            cluster=cluster_section,
            correspondence=correspondence,
            pls=pls_section,
            incomplete={"stage": stage, "message": str(exc)},
        )

    try:
        panel = load_dataset(config)
        dea_section = run_dea_stage(config, panel)
    except PanelEffError as exc:
        raise StageError(STAGE_DEA, str(exc), partial_bundle=partial(STAGE_DEA, exc)) from exc

    if config.cluster is not None:
        try:
            cluster_section, correspondence = run_cluster_stage(config, dea_section)
        except PanelEffError as exc:
            raise StageError(STAGE_CLUSTER, str(exc), partial_bundle=partial(STAGE_CLUSTER, exc)) from exc

    if config.pls is not None:
        try:
            pls_section = run_pls_stage(config, panel)
        except PanelEffError as exc:
            raise StageError(STAGE_PLS, str(exc), partial_bundle=partial(STAGE_PLS, exc)) from exc

    return ReportBundle(
        provenance=provenance,
        dea=dea_section,
        cluster=cluster_section,
        correspondence=correspondence,
        pls=pls_section,
    )


# ---------------------------------------------------------------------------
# emission


def significance_marker(p: float) -> str:
    """Table marker: * for p < 0.001, ** for p < 0.01."""
    if p < 0.001:
        return "*"
    if p < 0.01:
        return "**"
    return ""


def _fmt7(x) -> str:
    """Fixed 7-decimal rendering used by CSV and text tables."""
    if x is None:
        return ""
    return f"{x:.7f}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(bundle: ReportBundle, out_dir: str, formats=("json",)) -> list[str]:
    """Write the bundle to disk; one file per table for CSV, a single
    document for JSON, aligned tables for text. Returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "json":
            path = os.path.join(out_dir, f"{REPORT_BASENAME}.json")
            _atomic_write(path, bundle.to_json())
            written.append(path)
        elif fmt == "text":
            path = os.path.join(out_dir, f"{REPORT_BASENAME}.txt")
            _atomic_write(path, render_text(bundle))
            written.append(path)
        elif fmt == "csv":
            written.extend(_emit_csv_tables(bundle, out_dir))
        else:
            raise UsageError(f"unknown report format {fmt!r}")
    return written


def _csv_text(headers, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue()


def _emit_csv_tables(bundle: ReportBundle, out_dir: str) -> list[str]:
    written = []

    def emit(name, headers, rows):
        path = os.path.join(out_dir, f"{name}.csv")
        _atomic_write(path, _csv_text(headers, rows))
        written.append(path)

    for name, table in bundle.dea.items():
        headers = ["dmu"] + list(table["periods"]) + ["mean"]
        rows = []
        for i, dmu in enumerate(table["dmus"]):
            rows.append([dmu] + [_fmt7(x) for x in table["scores"][i]] + [_fmt7(table["means"][i])])
        emit(f"dea_{name}_scores", headers, rows)

    if "analyses" in bundle.cluster:
        for name, table in bundle.cluster["analyses"].items():
            emit(
                f"cluster_{name}_sweep",
                ["k", "f_value", "p_value", "df_between", "df_within", "sse_within", "flags"],
                [
                    [e["k"], _fmt7(e["f_value"]), _fmt7(e["p_value"]), e["df_between"],
                     e["df_within"], _fmt7(e["sse_within"]), ";".join(e["flags"])]
                    for e in table["sweep"]
                ],
            )
            if "assignments" in table:
                dmus = bundle.dea[name]["dmus"]
                emit(
                    f"cluster_{name}_membership",
                    ["dmu", "cluster", "mean_efficiency"],
                    [
                        [dmu, table["assignments"][i], _fmt7(bundle.dea[name]["means"][i])]
                        for i, dmu in enumerate(dmus)
                    ],
                )

    if "clusters" in bundle.correspondence:
        doc = bundle.correspondence
        emit(
            "correspondence",
            ["dmu"] + [f"cluster_{n}" for n in doc["analyses"]],
            [[dmu] + list(doc["clusters"][i]) for i, dmu in enumerate(doc["dmus"])],
        )
        for pair in doc["pairs"]:
            a, b = pair["analyses"]
            kb = len(pair["contingency"][0])
            emit(
                f"contingency_{a}_vs_{b}",
                [f"{a}\\{b}"] + [str(j) for j in range(kb)],
                [[i] + row for i, row in enumerate(pair["contingency"])],
            )

    if "models" in bundle.pls:
        rows = []
        for model_name, model in bundle.pls["models"].items():
            for p in model["paths"]:
                rows.append([
                    model_name, p["source"], p["target"], _fmt7(p["coefficient"]),
                    _fmt7(p["std_error"]), _fmt7(p["t_statistic"]), _fmt7(p["p_value"]),
                    significance_marker(p["p_value"]),
                ])
        emit("pls_paths", ["model", "source", "target", "coefficient", "std_error",
                           "t_statistic", "p_value", "marker"], rows)
        grid_headers, grid_rows = _pls_grid(bundle.pls)
        if grid_rows:
            emit("pls_grid", grid_headers, grid_rows)
        for table in bundle.pls.get("cobb_douglas", []):
            emit(
                f"cobb_douglas_{table['target']}",
                ["column", "coefficient", "std_error"],
                [
                    [c, _fmt7(b), _fmt7(s)]
                    for c, b, s in zip(table["columns"], table["coefficients"], table["standard_errors"])
                ],
            )
    return written


def _pls_grid(pls_section: dict):
    """Exogenous-by-endogenous coefficient grid with significance markers.

    Rows are each model's exogenous latents; columns are the union of
    targets in first-seen order.
    """
    targets: list[str] = []
    rows_index: list[tuple[str, str]] = []
    cells: dict = {}
    for model_name, model in pls_section["models"].items():
        for p in model["paths"]:
            if p["target"] not in targets:
                targets.append(p["target"])
            key = (model_name, p["source"])
            if key not in rows_index:
                rows_index.append(key)
            cells[(key, p["target"])] = _fmt7(p["coefficient"]) + significance_marker(p["p_value"])
    headers = ["model", "source"] + targets
    rows = []
    for key in rows_index:
        rows.append([key[0], key[1]] + [cells.get((key, t), "") for t in targets])
    return headers, rows


def render_text(bundle: ReportBundle) -> str:
    """Aligned, human-readable rendering of the full bundle."""
    out = []
    prov = bundle.provenance
    out.append(f"paneleff {prov.get('version', '')} report")
    out.append(f"config {prov.get('config_hash', '')[:16]}  dataset {prov.get('dataset', '')}")
    if bundle.incomplete:
        out.append(f"INCOMPLETE: stage {bundle.incomplete['stage']} failed: {bundle.incomplete['message']}")
    out.append("")

    for name, table in bundle.dea.items():
        out.append(f"== DEA efficiency: {name} "
                   f"({table['returns_to_scale']}, {table['orientation']}-oriented) ==")
        headers = ["dmu"] + list(table["periods"]) + ["mean"]
        rows = [
            [dmu] + [_fmt7(x) for x in table["scores"][i]] + [_fmt7(table["means"][i])]
            for i, dmu in enumerate(table["dmus"])
        ]
        out.append(_text_table(headers, rows))
        out.append("")

    if "analyses" in bundle.cluster:
        out.append("== Cluster analysis ==")
        out.append(f"note: {bundle.cluster['caveat']}")
        for name, table in bundle.cluster["analyses"].items():
            out.append(f"-- {name}: selected k = {table['selected_k']} "
                       f"({table['selection_rule']}) {' '.join(table['flags'])}".rstrip())
            headers = ["k", "F", "p", "df_between", "df_within", "flags"]
            rows = [
                [e["k"], _fmt7(e["f_value"]) or "inf", _fmt7(e["p_value"]),
                 e["df_between"], e["df_within"], ";".join(e["flags"])]
                for e in table["sweep"]
            ]
            out.append(_text_table(headers, rows))
            if "assignments" in table:
                dmus = bundle.dea[name]["dmus"]
                headers = ["dmu", "cluster", "mean"]
                rows = [
                    [dmu, table["assignments"][i], _fmt7(bundle.dea[name]["means"][i])]
                    for i, dmu in enumerate(dmus)
                ]
                out.append(_text_table(headers, rows))
        out.append("")
    elif bundle.cluster.get("skipped"):
        out.append("== Cluster analysis: skipped ==")
        out.append("")

    if "clusters" in bundle.correspondence:
        doc = bundle.correspondence
        out.append("== Cluster correspondence ==")
        headers = ["dmu"] + [f"cluster_{n}" for n in doc["analyses"]]
        rows = [[dmu] + list(doc["clusters"][i]) for i, dmu in enumerate(doc["dmus"])]
        out.append(_text_table(headers, rows))
        for pair in doc["pairs"]:
            a, b = pair["analyses"]
            out.append(f"{a} vs {b}: agreement {pair['agreement']}/{len(doc['dmus'])} "
                       f"({100.0 * pair['agreement_rate']:.1f}%)")
        out.append("")

    if "models" in bundle.pls:
        out.append("== Path models (bootstrap "
                   f"B={bundle.pls['bootstrap_samples']}, seed={bundle.pls['seed']}) ==")
        grid_headers, grid_rows = _pls_grid(bundle.pls)
        out.append(_text_table(grid_headers, grid_rows))
        out.append("note: * p < 0.001, ** p < 0.01")
        for model_name, model in bundle.pls["models"].items():
            r2 = ", ".join(f"{k}={v:.4f}" for k, v in sorted(model["r_squared"].items()))
            out.append(f"-- {model_name}: converged={model['converged']} "
                       f"iterations={model['iterations']} R2: {r2}")
        for table in bundle.pls.get("cobb_douglas", []):
            out.append(f"-- log-log baseline for {table['target']}")
            rows = [
                [c, _fmt7(b), _fmt7(s)]
                for c, b, s in zip(table["columns"], table["coefficients"], table["standard_errors"])
            ]
            out.append(_text_table(["column", "coefficient", "std_error"], rows))
        out.append("")
    elif bundle.pls.get("skipped"):
        out.append("== Path models: skipped ==")
        out.append("")

    return "\n".join(out)


def _text_table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
