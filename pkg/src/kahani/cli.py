"""Command-line surface: generate / replay / validate / eval / report.

Exit codes: 0 success, 1 operational failure, 2 usage error. Machine output
goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from pathlib import Path

from .bundle import load_bundle
from .clients import (
    A1111Client,
    FixtureChatBackend,
    FixtureImageBackend,
    FixtureStore,
    OpenAIChatClient,
)
from .domain import GenerationParams, StoryPrompt, validate_bundle
from .errors import DatasetError, KahaniError
from .evaluation import Dataset, load_dataset
from .pipeline import PipelineConfig, StageRecorder, run_pipeline
from .report import write_report
from .tables import (
    aggregate_composite,
    csi_table,
    rating_table,
    refbased_table,
    stats_csv,
    stats_text,
    wilcoxon_csv,
    wilcoxon_text,
)

DEFAULT_API_KEY_ENV = "KAHANI_API_KEY"


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kahani", description="Culturally grounded visual storytelling")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("generate", "run the full pipeline against live or recorded backends"),
        ("replay", "run the pipeline strictly from recorded fixtures (no network)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--prompt", help="story premise text")
        p.add_argument("--prompt-file", help="file containing the story premise")
        p.add_argument("--config", help="JSON config file with backend endpoints and pipeline knobs")
        p.add_argument("--out", required=True, help="directory that will hold the bundle")
        p.add_argument("--fixtures", help="fixture directory for record/replay")
        p.add_argument("--text-only", action="store_true", help="skip image generation")
        p.add_argument("--parallel-scenes", action="store_true", help="plan and craft scenes concurrently")
        if name == "generate":
            p.add_argument("--record", action="store_true", help="record live replies into --fixtures")

    p = sub.add_parser("validate", help="check a bundle directory against all invariants")
    p.add_argument("bundle", help="bundle directory")

    p = sub.add_parser("report", help="render a bundle as a self-contained HTML file")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--out", required=True, help="output HTML path")

    p = sub.add_parser("eval", help="compute evaluation tables from an annotation dataset")
    p.add_argument("--dataset", required=True, help="annotation dataset JSON")
    p.add_argument(
        "--metric",
        choices=("composite", "refbased", "csi", "wilcoxon", "all"),
        default="all",
    )
    p.add_argument("--out", help="directory for CSV, text, and figure outputs")
    p.add_argument("--penalty", choices=("intended", "literal"), default="intended")
    p.add_argument("--zero-method", choices=("wilcox", "pratt"), default="wilcox")
    p.add_argument("--tools", default="kahani,chatgpt", help="comma-separated tool pair for the signed-rank table")
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config file not parseable: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def _pipeline_config(config: dict) -> PipelineConfig:
    pipeline = config.get("pipeline", {})
    generation = config.get("generation", {})
    llm = config.get("llm", {})
    return PipelineConfig(
        max_stage_retries=pipeline.get("max_stage_retries", 2),
        word_limit=pipeline.get("word_limit", 500),
        lint_strict=pipeline.get("lint_strict", True),
        parallel_scenes=pipeline.get("parallel_scenes", False),
        model=llm.get("model", "gpt-4-turbo"),
        temperature=llm.get("temperature", 0.7),
        seed=pipeline.get("seed"),
        generation=GenerationParams(
            steps=generation.get("steps", 50),
            sampler_name=generation.get("sampler_name", "DPM++ 3M SDE Karras"),
            refiner_denoise=generation.get("refiner_denoise", 0.5),
            width=generation.get("width", 1024),
            height=generation.get("height", 1024),
            seed=generation.get("seed"),
            two_pass=generation.get("two_pass", False),
        ),
    )


def _read_prompt(args) -> StoryPrompt:
    if bool(args.prompt) == bool(args.prompt_file):
        raise UsageError("provide exactly one of --prompt or --prompt-file")
    if args.prompt:
        return StoryPrompt(text=args.prompt)
    path = Path(args.prompt_file)
    if not path.is_file():
        raise UsageError(f"prompt file not found: {args.prompt_file}")
    return StoryPrompt(text=path.read_text("utf-8").strip())


def _backends(args, config: dict, replay_only: bool):
    record = getattr(args, "record", False)
    if replay_only and not args.fixtures:
        raise UsageError("replay requires --fixtures")
    if args.fixtures:
        mode = "record" if record else "replay"
        store = FixtureStore(Path(args.fixtures), mode=mode)
        live_chat = _live_chat(config) if record else None
        live_image = _live_image(config) if record else None
        llm = FixtureChatBackend(store=store, live=live_chat)
        t2i = None if args.text_only else FixtureImageBackend(store=store, live=live_image)
        return llm, t2i
    llm = _live_chat(config)
    if llm is None:
        raise UsageError("no LLM endpoint configured; pass --config with an llm.endpoint or use --fixtures")
    t2i = None if args.text_only else _live_image(config)
    if t2i is None and not args.text_only:
        raise UsageError("no image endpoint configured; add t2i.endpoint to the config or pass --text-only")
    return llm, t2i


def _live_chat(config: dict):
    llm = config.get("llm", {})
    endpoint = llm.get("endpoint")
    if not endpoint:
        return None
    key_env = llm.get("api_key_env", DEFAULT_API_KEY_ENV)
    return OpenAIChatClient(
        endpoint=endpoint,
        api_key=os.environ.get(key_env, ""),
        timeout=llm.get("timeout", 120.0),
    )


def _live_image(config: dict):
    t2i = config.get("t2i", {})
    endpoint = t2i.get("endpoint")
    if not endpoint:
        return None
    return A1111Client(endpoint=endpoint, timeout=t2i.get("timeout", 600.0))


def _cmd_generate(args, replay_only: bool) -> int:
    config = _load_config(args.config)
    prompt = _read_prompt(args)
    cfg = _pipeline_config(config)
    if args.parallel_scenes:
        cfg = dataclasses.replace(cfg, parallel_scenes=True)
    llm, t2i = _backends(args, config, replay_only)
    recorder = StageRecorder()
    try:
        bundle = run_pipeline(prompt, cfg, llm, t2i, out_dir=Path(args.out), recorder=recorder)
    except KahaniError as exc:
        stage = getattr(exc, "stage", None)
        where = f" at stage {stage}" if stage else ""
        print(f"pipeline failed{where}: {exc}", file=sys.stderr)
        _print_timings(recorder)
        return 1
    print(Path(args.out) / prompt.id)
    _print_timings(recorder)
    return 0


def _print_timings(recorder: StageRecorder) -> None:
    for stage, seconds in recorder.timings.items():
        print(f"{stage:<24} {seconds:8.3f}s", file=sys.stderr)


def _cmd_validate(args) -> int:
    bundle = load_bundle(Path(args.bundle))
    violations = validate_bundle(bundle)
    if not violations:
        print("OK")
        return 0
    for violation in violations:
        print(violation)
    return 1


def _cmd_report(args) -> int:
    bundle = load_bundle(Path(args.bundle))
    violations = validate_bundle(bundle)
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        return 1
    path = write_report(bundle, Path(args.out))
    print(path)
    return 0


def _eval_tables(dataset: Dataset, args) -> dict[str, tuple[str, str]]:
    """Selected tables as {name: (csv_text, plain_text)}."""
    tool_a, _, tool_b = args.tools.partition(",")
    outputs: dict[str, tuple[str, str]] = {}
    wanted = {args.metric} if args.metric != "all" else {"composite", "refbased", "csi", "wilcoxon"}

    if "composite" in wanted:
        table = aggregate_composite(dataset.records)
        outputs["composite"] = (stats_csv(table), stats_text("Composite score by story and tool", table))
    if "refbased" in wanted:
        if not dataset.references:
            raise KahaniError("dataset has no reference highlights; cannot compute the reference-based table")
        table = refbased_table(dataset, penalty_mode=args.penalty)
        outputs["refbased"] = (stats_csv(table), stats_text("Reference-based highlight score", table))
    if "csi" in wanted:
        table = csi_table(dataset)
        outputs["csi"] = (stats_csv(table), stats_text("Reference-free CSI severity score", table))
    if "wilcoxon" in wanted:
        rows, warnings = rating_table(dataset.records, tool_a or "kahani", tool_b or "chatgpt")
        for warning in warnings:
            print(warning, file=sys.stderr)
        outputs["wilcoxon"] = (wilcoxon_csv(rows), wilcoxon_text(rows))
    return outputs


def _write_eval_outputs(outputs: dict[str, tuple[str, str]], dataset: Dataset, args) -> list[tuple[str, str]]:
    from . import figures  # deferred: pulls in matplotlib

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (csv_text, plain) in outputs.items():
        csv_path = out_dir / f"{name}.csv"
        csv_path.write_text(csv_text, "utf-8")
        (out_dir / f"{name}.txt").write_text(plain, "utf-8")
        figure_path = out_dir / f"{name}.png"
        if name == "composite":
            figures.composite_figure(aggregate_composite(dataset.records), figure_path)
        elif name == "refbased":
            figures.refbased_figure(refbased_table(dataset, penalty_mode=args.penalty), figure_path)
        elif name == "csi":
            figures.csi_figure(csi_table(dataset), figure_path)
        elif name == "wilcoxon":
            tool_a, _, tool_b = args.tools.partition(",")
            rows, _ = rating_table(dataset.records, tool_a or "kahani", tool_b or "chatgpt")
            figures.wilcoxon_figure(rows, figure_path)
        written.append((name, str(csv_path)))
    return written


def _cmd_eval(args) -> int:
    dataset_path = Path(args.dataset)
    if not dataset_path.is_file():
        raise UsageError(f"dataset not found: {args.dataset}")
    try:
        dataset = load_dataset(dataset_path)
    except DatasetError as exc:
        print("dataset schema violations:", file=sys.stderr)
        for violation in exc.violations[:10]:
            print(f"  {violation}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"dataset is not valid JSON: {exc}", file=sys.stderr)
        return 1

    outputs = _eval_tables(dataset, args)
    if args.out:
        written = _write_eval_outputs(outputs, dataset, args)
    else:
        written = []

    if args.metric != "all":
        sys.stdout.write(outputs[args.metric][0])
    else:
        index = io.StringIO()
        writer = csv.writer(index, lineterminator="\n")
        writer.writerow(["table", "csv_path"])
        for name, path in written or [(n, "") for n in sorted(outputs)]:
            writer.writerow([name, path])
        sys.stdout.write(index.getvalue())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args, replay_only=False)
        if args.command == "replay":
            return _cmd_generate(args, replay_only=True)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "eval":
            return _cmd_eval(args)
        parser.error(f"unknown command {args.command}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KahaniError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
