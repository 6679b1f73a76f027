"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 corpus error, 3 LLM or
transport error (including offline cache misses), 4 too many failed
iterations.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import CorpusError, corpus_hash, load_vignettes
from .evaluation import EvaluationReport, digest, summarize, write_atomic
from .llm.client import LLMClient, LLMConfig, ResponseCache
from .llm.prompts import template_hashes
from .variants import VARIANTS, ConfigError, ModelConfig, is_llm_error, run_variant

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CORPUS = 2
EXIT_LLM = 3
EXIT_PARTIAL = 4

log = logging.getLogger("pragqa")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def resolve_config(args: argparse.Namespace, variant: str) -> ModelConfig:
    """Flags override the config file, which overrides defaults."""
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data = dict(data)
    data.pop("variants", None)
    data["variant"] = variant
    llm = dict(data.get("llm", {}) or {})
    for flag, key in (("llm_endpoint", "endpoint_url"), ("model_name", "model_name"),
                      ("cache_dir", "cache_dir"), ("requests_per_minute", "requests_per_minute")):
        value = getattr(args, flag, None)
        if value is not None:
            llm[key] = value
    if args.offline:
        llm["offline"] = True
    data["llm"] = llm
    for flag in ("iterations", "seed", "normalization", "max_failure_rate"):
        value = getattr(args, flag, None)
        if value is not None:
            data[flag] = value
    for flag in ("alpha_questioner", "alpha_respondent", "alpha_policy", "lambda_info"):
        value = getattr(args, flag, None)
        if value is not None:
            data.pop(flag, None)  # a flat config key would otherwise win
            data.setdefault("agent_params", {})
            data["agent_params"] = {**data["agent_params"], flag: value}
    return ModelConfig.from_mapping(data)


def _variants(args: argparse.Namespace) -> list[str]:
    names: list[str] = []
    for item in args.variant or ["pcm"]:
        for name in item.split(","):
            name = name.strip()
            if name == "all":
                names.extend(VARIANTS)
            elif name:
                names.append(name)
    return list(dict.fromkeys(names))


def _write_manifest(out: Path, manifest: dict) -> None:
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        configs = [resolve_config(args, v) for v in _variants(args)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        corpus = load_vignettes(args.corpus)
    except CorpusError as exc:
        for d in exc.diagnostics:
            print(f"corpus error: {d}", file=sys.stderr)
        return EXIT_CORPUS
    except OSError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return EXIT_CORPUS

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": f"pragqa {__version__}",
        "status": "started",
        "started_at": _now(),
        "corpus": str(args.corpus),
        "corpus_hash": corpus_hash(corpus),
        "prompt_hashes": template_hashes(),
        "workers": args.workers,
        "bootstrap_reps": args.bootstrap_reps,
        "configs": [c.to_json() for c in configs],
    }
    _write_manifest(out, manifest)

    llm_cfg = configs[0].llm
    client = LLMClient(llm_cfg) if any(c.uses_llm for c in configs) else None
    results = []
    exit_code = EXIT_OK
    try:
        for cfg in configs:
            log.info("running %s", cfg.variant)
            res = run_variant(cfg, corpus, client=client, workers=args.workers)
            results.append(res)
            llm_fail = [f for f in res.failures if is_llm_error(f)]
            if any(f.offline_miss for f in res.failures):
                exit_code = EXIT_LLM
                break
            if res.failure_rate > cfg.max_failure_rate:
                exit_code = EXIT_LLM if len(llm_fail) == len(res.failures) and not res.per_vignette else EXIT_PARTIAL
                break
    except KeyboardInterrupt:
        manifest.update(status="partial", reason="interrupted", finished_at=_now())
        _write_manifest(out, manifest)
        return 130
    finally:
        if client is not None:
            client.close()

    failures = [dict(f.__dict__, variant=r.variant) for r in results for f in r.failures]
    if exit_code == EXIT_LLM and client is not None and client.missing_keys:
        missing = [k.digest() for k in client.missing_keys]
        print(f"offline run is missing {len(missing)} cache entries:", file=sys.stderr)
        for d in missing:
            print(f"  {d}", file=sys.stderr)
        manifest.update(status="failed", missing_keys=missing, failures=failures, finished_at=_now())
        _write_manifest(out, manifest)
        return exit_code
    if exit_code == EXIT_LLM:
        for f in failures:
            print(f"LLM error: {f['vignette']} #{f['iteration']} at {f['stage']}: {f['error']}", file=sys.stderr)
        manifest.update(status="failed", failures=failures, finished_at=_now())
        _write_manifest(out, manifest)
        return exit_code

    report = EvaluationReport([summarize(r, reps=args.bootstrap_reps) for r in results])
    files = report.files()
    for name, text in files.items():
        write_atomic(out / name, text)
    manifest.update(
        status="complete" if not failures and exit_code == EXIT_OK else "partial",
        finished_at=_now(),
        output_digest=digest(files),
        failures=failures,
    )
    if client is not None:
        manifest["network_calls"] = client.network_calls
    _write_manifest(out, manifest)
    for s in report.summaries:
        print(f"{s.variant:32s} JSD={s.jsd_to_human:.4f}  delta={s.delta:+.4f}  "
              f"CI=[{_fmt(s.ci_low)}, {_fmt(s.ci_high)}]  n={s.n_vignettes}")
    if exit_code == EXIT_PARTIAL:
        print("too many failed iterations; see manifest.json", file=sys.stderr)
    return exit_code


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:+.4f}"


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        vignettes = load_vignettes(args.corpus)
    except CorpusError as exc:
        for d in exc.diagnostics:
            print(d)
        return EXIT_CORPUS
    except OSError as exc:
        print(exc)
        return EXIT_CORPUS
    if not vignettes:
        print("<root>: corpus holds no vignettes")
        return EXIT_CORPUS
    print(f"ok: {len(vignettes)} vignettes, sha256 {corpus_hash(vignettes)}")
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    if not args.cache_dir:
        print("config error: --cache-dir is required", file=sys.stderr)
        return EXIT_CONFIG
    cache = ResponseCache(args.cache_dir)
    try:
        if args.action == "list":
            for rec in cache.records():
                key = rec["key"]
                head = " ".join(rec["prompt"].split())[:60]
                print(f"{key['model_name']}\tT={key['temperature']}\tit={key['iteration_index']}\t{head}")
        elif args.action == "purge":
            print(f"purged {cache.purge()} entries")
        elif args.action == "export":
            print(f"exported {cache.export(args.archive)} entries to {args.archive}")
        elif args.action == "import":
            print(f"imported {cache.import_archive(args.archive)} entries")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pragqa", description="Pragmatic question-answering models.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run model variants and write reports")
    run.add_argument("--variant", action="append",
                     help=f"variant name, comma list or 'all' (repeatable): {', '.join(VARIANTS)}")
    run.add_argument("--corpus", default="bundled")
    run.add_argument("--iterations", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--out", default="results")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--bootstrap-reps", type=int, default=1000)
    run.add_argument("--normalization", choices=("per-dp", "joint"))
    run.add_argument("--max-failure-rate", type=float)
    run.add_argument("--alpha-questioner", type=float)
    run.add_argument("--alpha-respondent", type=float)
    run.add_argument("--alpha-policy", type=float)
    run.add_argument("--lambda-info", type=float)
    llm = run.add_argument_group("LLM")
    llm.add_argument("--llm-endpoint", help="chat-completion URL")
    llm.add_argument("--model-name")
    llm.add_argument("--cache-dir")
    llm.add_argument("--requests-per-minute", type=int)
    llm.add_argument("--offline", action="store_true", help="serve completions from the cache only")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a corpus file")
    val.add_argument("corpus", nargs="?", default="bundled")
    val.set_defaults(func=cmd_validate)

    cache = sub.add_parser("cache", help="inspect or move the LLM response cache")
    cache.add_argument("action", choices=("list", "purge", "export", "import"))
    cache.add_argument("archive", nargs="?", help="archive path for export/import")
    cache.add_argument("--cache-dir")
    cache.set_defaults(func=cmd_cache)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "cache" and args.action in ("export", "import") and not args.archive:
        parser.error(f"cache {args.action} needs an archive path")
    if args.command == "run" and args.workers < 1:
        parser.error("--workers must be >= 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
