import json
import os

import numpy as np
import pytest

from paneleff.cli import cli_main
from paneleff.errors import ConfigError
from paneleff.pipeline import (
    ReportBundle,
    config_from_file,
    emit_report,
    parse_config,
    render_text,
    run_pipeline,
    significance_marker,
    _fmt7,
)
from paneleff.synthetic import make_demo_config, make_demo_panel
from paneleff.panel_data import write_panel_csv


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    """Demo dataset + config on disk, with a small bootstrap so the module
    stays fast."""
    root = tmp_path_factory.mktemp("demo")
    panel = make_demo_panel()
    write_panel_csv(panel, root / "dataset.csv")
    document = make_demo_config("dataset.csv", "reports", bootstrap_samples=100)
    (root / "config.json").write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return root


@pytest.fixture(scope="module")
def demo_bundle(demo_dir):
    config = config_from_file(demo_dir / "config.json")
    return run_pipeline(config), config


def test_pipeline_produces_all_sections(demo_bundle):
    bundle, _ = demo_bundle
    assert set(bundle.dea) == {"ict", "health"}
    assert "analyses" in bundle.cluster
    assert "clusters" in bundle.correspondence
    assert "models" in bundle.pls
    assert bundle.incomplete is None


def test_pipeline_score_matrix_shape(demo_bundle):
    bundle, _ = demo_bundle
    for table in bundle.dea.values():
        assert len(table["scores"]) == 27
        assert all(len(row) == 10 for row in table["scores"])
        assert len(table["means"]) == 27


def test_pipeline_selects_three_clusters(demo_bundle):
    bundle, _ = demo_bundle
    for name in ("ict", "health"):
        table = bundle.cluster["analyses"][name]
        assert table["selected_k"] == 3
        assert table["anova"]["df_between"] == 2


def test_pipeline_correspondence_agreement(demo_bundle):
    bundle, _ = demo_bundle
    pair = bundle.correspondence["pairs"][0]
    assert pair["agreement_rate"] >= 0.8


def test_pls_grid_shape_matches_three_by_four(demo_bundle):
    bundle, _ = demo_bundle
    models = bundle.pls["models"]
    assert set(models) == {"mcs", "iu", "mtl"}
    for model in models.values():
        assert len(model["paths"]) == 4
        targets = {p["target"] for p in model["paths"]}
        assert targets == {"LEB", "HEC", "HGDP", "IMR"}
        for p in model["paths"]:
            marker = significance_marker(p["p_value"])
            assert marker in ("", "*", "**")


def test_provenance_carries_hash_and_seeds(demo_bundle):
    bundle, config = demo_bundle
    assert bundle.provenance["config_hash"] == config.config_hash
    assert bundle.provenance["seeds"] == {"cluster": 271998, "bootstrap": 271999}


def test_json_round_trip_is_structurally_identical(demo_bundle):
    bundle, _ = demo_bundle
    text = bundle.to_json()
    again = ReportBundle.from_json(text)
    assert again.to_dict() == bundle.to_dict()
    assert again.to_json() == text


def test_emitted_files(demo_bundle, tmp_path):
    bundle, _ = demo_bundle
    written = emit_report(bundle, str(tmp_path), ("json", "csv", "text"))
    names = {os.path.basename(p) for p in written}
    assert "report.json" in names
    assert "report.txt" in names
    assert "dea_ict_scores.csv" in names
    assert "cluster_ict_membership.csv" in names
    assert "correspondence.csv" in names
    assert "pls_paths.csv" in names
    for path in written:
        assert os.path.exists(path)


def test_rendered_table_contains_exact_unit_mean(demo_bundle, tmp_path):
    bundle, _ = demo_bundle
    emit_report(bundle, str(tmp_path), ("csv", "text"))
    csv_text = (tmp_path / "dea_ict_scores.csv").read_text()
    assert "1.0000000" in csv_text
    assert "1.0000000" in (tmp_path / "report.txt").read_text()


def test_csv_numbers_use_seven_decimals(demo_bundle, tmp_path):
    bundle, _ = demo_bundle
    emit_report(bundle, str(tmp_path), ("csv",))
    with open(tmp_path / "dea_ict_scores.csv") as fh:
        header = fh.readline()
        first = fh.readline().strip().split(",")
    assert len(first) == 12  # dmu + 10 periods + mean
    for cell in first[1:]:
        whole, frac = cell.split(".")
        assert len(frac) == 7


def test_fmt7_renders_unit_exactly():
    assert _fmt7(1.0) == "1.0000000"
    assert _fmt7(None) == ""


def test_significance_markers():
    assert significance_marker(0.0004) == "*"
    assert significance_marker(0.002) == "**"
    assert significance_marker(0.02) == ""
    assert _fmt7(-0.813) + significance_marker(0.0004) == "-0.8130000*"


def test_text_report_carries_caveat_and_markers(demo_bundle):
    bundle, _ = demo_bundle
    text = render_text(bundle)
    assert "rank candidate cluster counts" in text
    assert "* p < 0.001" in text


def test_config_hash_changes_with_any_byte(demo_dir, tmp_path):
    original = (demo_dir / "config.json").read_bytes()
    mutated = original.replace(b'"k_max": 6', b'"k_max": 5')
    assert mutated != original
    other = tmp_path / "config.json"
    other.write_bytes(mutated)
    (tmp_path / "dataset.csv").write_bytes((demo_dir / "dataset.csv").read_bytes())
    a = config_from_file(demo_dir / "config.json")
    b = config_from_file(other)
    assert a.config_hash != b.config_hash


def test_unknown_variable_in_config_names_it():
    document = make_demo_config()
    document["dea"][0]["inputs"] = ["no_such_var"]
    with pytest.raises(ConfigError) as exc:
        parse_config(document)
    assert "no_such_var" in str(exc.value)


def test_missing_seed_rejected():
    document = make_demo_config()
    del document["cluster"]["seed"]
    with pytest.raises(ConfigError) as exc:
        parse_config(document)
    assert "seed" in str(exc.value)


def test_stage_gating_skips_unconfigured_sections(demo_dir):
    document = json.loads((demo_dir / "config.json").read_text())
    del document["cluster"]
    del document["pls"]
    config = parse_config(document, base_dir=str(demo_dir))
    bundle = run_pipeline(config)
    assert bundle.cluster == {"skipped": True}
    assert bundle.pls == {"skipped": True}
    assert set(bundle.dea) == {"ict", "health"}


# --- command-line interface ---------------------------------------------------


def test_cli_pipeline_runs_and_writes(demo_dir, tmp_path, capsys):
    out = tmp_path / "out"
    code = cli_main(["pipeline", "--config", str(demo_dir / "config.json"),
                     "--out", str(out), "--quiet"])
    assert code == 0
    assert (out / "report.json").exists()


def test_cli_determinism_byte_identical(demo_dir, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    config = str(demo_dir / "config.json")
    assert cli_main(["pipeline", "--config", config, "--out", str(out1), "--quiet"]) == 0
    assert cli_main(["pipeline", "--config", config, "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_cli_stage_chaining_matches_pipeline(demo_dir, tmp_path):
    config = str(demo_dir / "config.json")
    whole = tmp_path / "whole"
    chained = tmp_path / "chained"
    assert cli_main(["pipeline", "--config", config, "--out", str(whole), "--quiet"]) == 0
    assert cli_main(["dea", "--config", config, "--out", str(chained), "--quiet"]) == 0
    assert cli_main(["cluster", "--config", config, "--out", str(chained), "--quiet"]) == 0
    assert cli_main(["pls", "--config", config, "--out", str(chained), "--quiet"]) == 0
    assert (whole / "report.json").read_bytes() == (chained / "report.json").read_bytes()


def test_cli_validate_ok(demo_dir, capsys):
    assert cli_main(["validate", "--config", str(demo_dir / "config.json")]) == 0
    out = capsys.readouterr().out
    assert "analysis ict" in out


def test_cli_validate_unknown_variable_exits_one(demo_dir, tmp_path, capsys):
    document = json.loads((demo_dir / "config.json").read_text())
    document["dea"][0]["inputs"] = ["mystery"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(document))
    code = cli_main(["validate", "--config", str(bad)])
    assert code == 1
    assert "mystery" in capsys.readouterr().err


def test_cli_dea_unknown_period_exits_two(demo_dir, capsys):
    code = cli_main(["dea", "--config", str(demo_dir / "config.json"), "--period", "2008"])
    assert code == 2
    err = capsys.readouterr().err
    assert "2008" in err


def test_cli_dea_single_period_prints_scores(demo_dir, capsys):
    code = cli_main(["dea", "--config", str(demo_dir / "config.json"), "--period", "1998",
                     "--quiet"])
    assert code == 0
    out = capsys.readouterr().out
    assert "C01" in out and "1.0000000" in out


def test_cli_cluster_without_dea_results_exits_two(demo_dir, tmp_path, capsys):
    code = cli_main(["cluster", "--config", str(demo_dir / "config.json"),
                     "--out", str(tmp_path / "empty"), "--quiet"])
    assert code == 2


def test_cli_nonpositive_dataset_fails_validation(tmp_path, capsys):
    panel = make_demo_panel()
    values = panel.values.copy()
    values[0, 0, 0] = -5.0
    from paneleff.panel_data import PanelDataset

    broken = PanelDataset(panel.dmus, panel.periods, panel.variables, values)
    write_panel_csv(broken, tmp_path / "dataset.csv")
    document = make_demo_config("dataset.csv", "reports", bootstrap_samples=100)
    (tmp_path / "config.json").write_text(json.dumps(document))
    code = cli_main(["validate", "--config", str(tmp_path / "config.json")])
    assert code == 1
    assert "NONPOSITIVE" in capsys.readouterr().out


def test_cli_pipeline_emits_partial_bundle_on_stage_failure(tmp_path, capsys):
    panel = make_demo_panel()
    write_panel_csv(panel, tmp_path / "dataset.csv")
    document = make_demo_config("dataset.csv", "reports", bootstrap_samples=100)
    # guarantee a cluster-stage failure: k range exceeds the distinct means
    document["cluster"]["k_max"] = 6
    document["cluster"]["k_min"] = 6
    (tmp_path / "config.json").write_text(json.dumps(document))
    # shrink the dataset to 4 DMUs so that only <= 4 distinct means exist
    keep = {"C01", "C02", "C18", "C19"}
    lines = (tmp_path / "dataset.csv").read_text().splitlines()
    filtered = [lines[0]] + [l for l in lines[1:] if l.split(",")[0] in keep]
    (tmp_path / "dataset.csv").write_text("\n".join(filtered) + "\n")
    code = cli_main(["pipeline", "--config", str(tmp_path / "config.json"), "--quiet"])
    assert code == 2
    report = json.loads((tmp_path / "reports" / "report.json").read_text())
    assert report["incomplete"]["stage"] == "cluster"
    assert set(report["dea"]) == {"ict", "health"}
    assert report["pls"] == {"pending": True}


def test_cli_seed_override_changes_provenance(demo_dir, tmp_path):
    config = str(demo_dir / "config.json")
    out = tmp_path / "s"
    assert cli_main(["pipeline", "--config", config, "--out", str(out), "--seed", "42",
                     "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["provenance"]["seeds"] == {"cluster": 42, "bootstrap": 42}


def test_cli_format_override(demo_dir, tmp_path):
    config = str(demo_dir / "config.json")
    out = tmp_path / "fmt"
    assert cli_main(["pipeline", "--config", config, "--out", str(out),
                     "--format", "json", "--quiet"]) == 0
    assert (out / "report.json").exists()
    assert not (out / "report.txt").exists()


def test_cli_demo_smoke(tmp_path, capsys):
    out = tmp_path / "demo"
    code = cli_main(["demo", "--out", str(out), "--samples", "100", "--quiet"])
    assert code == 0
    assert (out / "dataset.csv").exists()
    assert (out / "config.json").exists()
    assert (out / "reports" / "report.json").exists()


def test_cli_unwritable_output_is_filesystem_error(demo_dir, tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file where a directory must go")
    code = cli_main(["pipeline", "--config", str(demo_dir / "config.json"),
                     "--out", str(blocker), "--quiet"])
    assert code == 2
    assert "filesystem error" in capsys.readouterr().err


def test_emit_report_unknown_format_rejected(demo_bundle, tmp_path):
    from paneleff.errors import UsageError

    bundle, _ = demo_bundle
    with pytest.raises(UsageError):
        emit_report(bundle, str(tmp_path), ("yaml",))
