"""CLI exit-code contract and command behaviour via a subprocess harness."""

from __future__ import annotations

import csv
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import PREETI_FIXTURES, PREETI_PROMPT_FILE, REPO_ROOT, SYNTHETIC_DATASET


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "kahani.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd or REPO_ROOT,
        timeout=120,
    )


@pytest.fixture(scope="module")
def replay_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    proc = run_cli(
        "replay",
        "--prompt-file", str(PREETI_PROMPT_FILE),
        "--fixtures", str(PREETI_FIXTURES),
        "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    bundle_dir = Path(proc.stdout.strip())
    assert bundle_dir.is_dir()
    return bundle_dir


def test_generate_happy_path_on_fixtures(tmp_path):
    proc = run_cli(
        "generate",
        "--prompt-file", str(PREETI_PROMPT_FILE),
        "--fixtures", str(PREETI_FIXTURES),
        "--out", str(tmp_path),
    )
    assert proc.returncode == 0, proc.stderr
    bundle_dir = Path(proc.stdout.strip())
    assert (bundle_dir / "manifest.json").is_file()
    assert (bundle_dir / "story.txt").is_file()
    assert len(list((bundle_dir / "images").glob("scene_*.png"))) == 4
    assert len(list((bundle_dir / "scenes").glob("scene_*.json"))) == 4
    # per-stage timing summary lands on stderr
    assert "culture_extraction" in proc.stderr


def test_generate_missing_config_is_usage_error(tmp_path):
    proc = run_cli(
        "generate",
        "--prompt", "A story",
        "--config", str(tmp_path / "absent.json"),
        "--out", str(tmp_path),
    )
    assert proc.returncode == 2
    assert "config" in proc.stderr


def test_generate_without_backends_is_usage_error(tmp_path):
    proc = run_cli("generate", "--prompt", "A story", "--out", str(tmp_path))
    assert proc.returncode == 2


def test_generate_requires_exactly_one_prompt_source(tmp_path):
    proc = run_cli(
        "generate",
        "--prompt", "x",
        "--prompt-file", str(PREETI_PROMPT_FILE),
        "--fixtures", str(PREETI_FIXTURES),
        "--out", str(tmp_path),
    )
    assert proc.returncode == 2


def test_unknown_flag_is_usage_error(tmp_path):
    proc = run_cli("generate", "--prompt", "x", "--out", str(tmp_path), "--frobnicate")
    assert proc.returncode == 2


def test_fixture_miss_mid_run_exits_1_with_partial_bundle(tmp_path):
    fixtures = tmp_path / "fixtures"
    shutil.copytree(PREETI_FIXTURES, fixtures)
    for path in fixtures.glob("*.json"):
        data = json.loads(path.read_text("utf-8"))
        user = data["request"].get("user", "")
        if "Narration of Scene:" in user and "A shadow darts across the wall" in user:
            path.unlink()
    out = tmp_path / "runs"
    proc = run_cli(
        "replay",
        "--prompt-file", str(PREETI_PROMPT_FILE),
        "--fixtures", str(fixtures),
        "--out", str(out),
    )
    assert proc.returncode == 1
    assert "t2i_crafting" in proc.stderr
    bundles = list(out.iterdir())
    assert len(bundles) == 1
    manifest = json.loads((bundles[0] / "manifest.json").read_text("utf-8"))
    assert manifest["incomplete"] is True


def test_replay_requires_fixtures(tmp_path):
    proc = run_cli("replay", "--prompt", "x", "--out", str(tmp_path))
    assert proc.returncode == 2


def test_validate_ok(replay_bundle):
    proc = run_cli("validate", str(replay_bundle))
    assert proc.returncode == 0
    assert proc.stdout.strip() == "OK"


def test_validate_tampered_manifest_names_rule(replay_bundle, tmp_path):
    tampered = tmp_path / "bundle"
    shutil.copytree(replay_bundle, tampered)
    manifest = json.loads((tampered / "manifest.json").read_text("utf-8"))
    manifest["scenes"] = manifest["scenes"][:3]
    (tampered / "manifest.json").write_text(json.dumps(manifest), "utf-8")
    proc = run_cli("validate", str(tampered))
    assert proc.returncode == 1
    assert "!= 4" in proc.stdout


def test_validate_missing_image_file(replay_bundle, tmp_path):
    tampered = tmp_path / "bundle"
    shutil.copytree(replay_bundle, tampered)
    (tampered / "images" / "scene_2.png").unlink()
    proc = run_cli("validate", str(tampered))
    assert proc.returncode == 1
    assert "image_ref missing" in proc.stdout


def test_report_complete_bundle(replay_bundle, tmp_path):
    out = tmp_path / "report.html"
    proc = run_cli("report", str(replay_bundle), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    html = out.read_text("utf-8")
    assert html.count("<img") == 4
    assert "In the heart of Dalhousie" in html
    assert "http://" not in html and "https://" not in html  # no network resources


def test_report_text_only_bundle_uses_placeholders(tmp_path):
    out_dir = tmp_path / "runs"
    proc = run_cli(
        "replay",
        "--prompt-file", str(PREETI_PROMPT_FILE),
        "--fixtures", str(PREETI_FIXTURES),
        "--out", str(out_dir),
        "--text-only",
    )
    assert proc.returncode == 0, proc.stderr
    bundle_dir = Path(proc.stdout.strip())
    report = tmp_path / "report.html"
    proc = run_cli("report", str(bundle_dir), "--out", str(report))
    assert proc.returncode == 0
    html = report.read_text("utf-8")
    assert html.count("<img") == 0
    assert html.count('class="placeholder"') == 4


def test_report_rejects_invalid_bundle(replay_bundle, tmp_path):
    tampered = tmp_path / "bundle"
    shutil.copytree(replay_bundle, tampered)
    manifest = json.loads((tampered / "manifest.json").read_text("utf-8"))
    manifest["scenes"] = manifest["scenes"][:3]
    (tampered / "manifest.json").write_text(json.dumps(manifest), "utf-8")
    proc = run_cli("report", str(tampered), "--out", str(tmp_path / "r.html"))
    assert proc.returncode == 1


def test_eval_single_metric_stdout_is_csv(tmp_path):
    proc = run_cli("eval", "--dataset", str(SYNTHETIC_DATASET), "--metric", "composite")
    assert proc.returncode == 0, proc.stderr
    rows = list(csv.reader(io.StringIO(proc.stdout)))
    assert rows[0] == ["story_id", "tool_id", "count", "mean", "std"]
    assert len(rows) > 1


def test_eval_all_writes_tables_and_figures(tmp_path):
    out = tmp_path / "eval"
    proc = run_cli("eval", "--dataset", str(SYNTHETIC_DATASET), "--metric", "all", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    for name in ("composite", "refbased", "csi", "wilcoxon"):
        assert (out / f"{name}.csv").is_file()
        assert (out / f"{name}.txt").is_file()
        assert (out / f"{name}.png").is_file()
        assert (out / f"{name}.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    index = list(csv.reader(io.StringIO(proc.stdout)))
    assert index[0] == ["table", "csv_path"]
    assert len(index) == 5


def test_eval_rejects_out_of_domain_severity(tmp_path):
    data = json.loads(SYNTHETIC_DATASET.read_text("utf-8"))
    data["records"][0]["spans"] = [{"text": "x", "category": "ecology", "severity": 2}]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data), "utf-8")
    proc = run_cli("eval", "--dataset", str(bad), "--metric", "csi")
    assert proc.returncode == 1
    assert "severity" in proc.stderr or "2" in proc.stderr


def test_eval_rejects_duplicate_triple(tmp_path):
    data = json.loads(SYNTHETIC_DATASET.read_text("utf-8"))
    data["records"].append(data["records"][0])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data), "utf-8")
    proc = run_cli("eval", "--dataset", str(bad))
    assert proc.returncode == 1
    assert "duplicate" in proc.stderr


def test_eval_lists_at_most_ten_violations(tmp_path):
    data = json.loads(SYNTHETIC_DATASET.read_text("utf-8"))
    for rec in data["records"][:15]:
        rec["ratings"]["plot"] = 9
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data), "utf-8")
    proc = run_cli("eval", "--dataset", str(bad))
    assert proc.returncode == 1
    listed = [line for line in proc.stderr.splitlines() if line.startswith("  ")]
    assert len(listed) == 10


def test_eval_literal_penalty_flag(tmp_path):
    intended = run_cli("eval", "--dataset", str(SYNTHETIC_DATASET), "--metric", "refbased")
    literal = run_cli(
        "eval", "--dataset", str(SYNTHETIC_DATASET), "--metric", "refbased", "--penalty", "literal"
    )
    assert intended.returncode == literal.returncode == 0
    assert intended.stdout != literal.stdout
