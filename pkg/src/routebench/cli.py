"""routebench command line: dataset, solve, run, report, summarize.

Exit codes: 0 success, 1 usage error, 2 environment error, 3 partial failure.
Settings can come from a JSON file (--config); explicit flags win over it.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import metrics
from .core import MULTI_ROBOT_KINDS, SINGLE_ROBOT_KINDS
from .exact import OptimalCertificate, solve
from .instances import GenerationRules, load_dataset, write_dataset
from .llm import (
    AuthError,
    ModelConfig,
    PricingTable,
    Provider,
    RecordingClient,
    RemoteClient,
    ReplayClient,
    record_transcript,
)
from .pipeline.analysis import load_overrides
from .pipeline.assets import AssetRegistry, ContextSpec, summarize_paper
from .pipeline.frameworks import Budgets, FrameworkKind, RunRecord, run_framework
from .sandbox import set_max_children

EXIT_OK, EXIT_USAGE, EXIT_ENV, EXIT_PARTIAL = 0, 1, 2, 3
RECORDS_FILE = "records.jsonl"
FAILURES_FILE = "failures.jsonl"

log = logging.getLogger("routebench")


class UsageError(Exception):
    pass


class EnvironmentProblem(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------- dataset


def cmd_dataset(args) -> int:
    out = Path(args.out)
    rules = GenerationRules(args.k_fraction, args.cluster_size)
    generated = args.action == "gen"
    tmp = out.with_name(out.name + ".tmp")
    if tmp.exists():
        _rmtree(tmp)
    try:
        manifest = write_dataset(tmp, args.seed_base, rules, args.cvrplib_dir, generated)
    except FileNotFoundError as exc:
        _rmtree(tmp)
        raise EnvironmentProblem(str(exc)) from None
    fresh = (tmp / "manifest.json").read_text()
    if out.exists() and any(out.iterdir()):
        current = out / "manifest.json"
        if current.is_file() and current.read_text() == fresh and _same_tree(out, tmp):
            _rmtree(tmp)
            print(f"{out}: dataset already up to date ({len(manifest.entries)} instances)")
            return EXIT_OK
        if not args.force:
            _rmtree(tmp)
            raise UsageError(f"{out} already holds a different or partial dataset; pass --force to replace it")
        _rmtree(out)
    tmp.rename(out)
    generated_n = sum(e.source is None for e in manifest.entries)
    print(f"{out}: {len(manifest.entries)} instances ({generated_n} generated, {len(manifest.entries) - generated_n} derived)")
    return EXIT_OK


def _same_tree(a: Path, b: Path) -> bool:
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return files_a == files_b and all((a / f).read_bytes() == (b / f).read_bytes() for f in files_a)


def _rmtree(path: Path) -> None:
    import shutil

    shutil.rmtree(path, ignore_errors=True)


# --------------------------------------------------------------------------- solve


def _load_instances(dataset: str, names: list[str] | None, scope: str = "all"):
    path = Path(dataset)
    if not (path / "manifest.json").is_file():
        raise EnvironmentProblem(f"{path} is not a dataset directory (no manifest.json); run `routebench dataset gen` first")
    instances = load_dataset(path)
    if scope == "single":
        instances = [i for i in instances if i.kind in SINGLE_ROBOT_KINDS]
    elif scope == "multi":
        instances = [i for i in instances if i.kind in MULTI_ROBOT_KINDS]
    if names:
        known = {i.name for i in instances}
        missing = sorted(set(names) - known)
        if missing:
            raise UsageError(f"unknown instance(s): {', '.join(missing)}")
        instances = [i for i in instances if i.name in set(names)]
    return instances


def load_certificates(store: str | Path) -> dict[str, OptimalCertificate]:
    store = Path(store)
    if not store.is_dir():
        return {}
    return {
        p.stem: OptimalCertificate.from_dict(json.loads(p.read_text()))
        for p in sorted(store.glob("*.json"))
    }


def cmd_solve(args) -> int:
    instances = _load_instances(args.dataset, args.instances, args.scope)
    store = Path(args.store or Path(args.dataset) / "certificates")
    store.mkdir(parents=True, exist_ok=True)
    counts = {"PROVEN_OPTIMAL": 0, "BOUND_ONLY": 0, "skipped": 0, "failed": 0}
    for inst in instances:
        target = store / f"{inst.name}.json"
        if target.is_file():
            counts["skipped"] += 1
            continue
        try:
            cert = solve(inst, time_budget=args.time_budget)
        except Exception as exc:  # recorded, the sweep goes on
            counts["failed"] += 1
            with (store / FAILURES_FILE).open("a") as fh:
                fh.write(json.dumps({"instance": inst.name, "error": f"{type(exc).__name__}: {exc}"}) + "\n")
            print(f"{inst.name}: FAILED {type(exc).__name__}: {exc}")
            continue
        target.write_text(json.dumps(cert.to_dict(), indent=1, sort_keys=True) + "\n")
        counts[cert.status.value] += 1
        print(f"{inst.name}: {cert.status.value} {cert.value.value:.6g} ({cert.solve_time:.1f}s)")
    print(
        f"proven {counts['PROVEN_OPTIMAL']}, bound-only {counts['BOUND_ONLY']}, "
        f"skipped {counts['skipped']}, failed {counts['failed']}"
    )
    return EXIT_PARTIAL if counts["failed"] else EXIT_OK


# --------------------------------------------------------------------------- run


def transcript_name(instance: str, framework: FrameworkKind, context: ContextSpec, repeat: int) -> str:
    label = context.label.replace(":", "-")
    return f"{instance}__{framework.value}__{label}__r{repeat}.jsonl"


class FakeClock:
    """Advances by a fixed step on every reading; makes recorded timings reproducible."""

    def __init__(self, step: float):
        self.step = step
        self.now = 0.0
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            self.now += self.step
            return self.now


def _frameworks(value: str) -> list[FrameworkKind]:
    if value.lower() == "all":
        return list(FrameworkKind)
    return [FrameworkKind(v.strip().upper()) for v in value.split(",")]


def _contexts(values: list[str]) -> list[ContextSpec]:
    return [ContextSpec.parse(v) for v in values]


def cmd_run(args) -> int:
    try:
        frameworks = _frameworks(args.framework)
        contexts = _contexts(args.context)
        budgets = Budgets(args.debug_rounds, args.verify_rounds, not args.exclude_aborted, args.timeout, args.test_timeout)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.repeats < 1 or args.workers < 1:
        raise UsageError("--repeats and --workers must be at least 1")
    provider = Provider(args.provider)
    if provider is Provider.REPLAY and not args.transcripts:
        raise UsageError("replay mode needs --transcripts DIR")
    base_config = dict(model_name=args.model, temperature=args.temperature, max_tokens=args.max_tokens)
    if provider is Provider.REMOTE:
        remote = RemoteClient()
        try:
            remote.check_credential(ModelConfig(**base_config, api_key_env=args.api_key_env))
        except AuthError as exc:
            raise EnvironmentProblem(str(exc)) from None
    pricing = PricingTable.load(args.pricing) if args.pricing else None
    assets = AssetRegistry(args.assets, args.summary_cache)
    if args.runner:
        runner = args.runner.split()
    else:
        runner = None
    if args.max_children:
        set_max_children(args.max_children)
    clock = FakeClock(args.fake_clock) if args.fake_clock else None

    instances = _load_instances(args.dataset, args.instances)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / RECORDS_FILE
    done = set()
    if records_path.is_file():
        for line in records_path.read_text().splitlines():
            if line.strip():
                rec = RunRecord.loads(line)
                if rec.experiment_id != args.experiment:
                    raise UsageError(
                        f"{records_path} belongs to experiment {rec.experiment_id!r}, not {args.experiment!r}"
                    )
                done.add(rec.key)

    jobs = []
    for inst, fw, ctx, rep in itertools.product(instances, frameworks, contexts, range(args.repeats)):
        key = (inst.name, fw.value, ctx.label, args.model, rep)
        if key not in done:
            jobs.append((inst, fw, ctx, rep))
    print(f"{len(jobs)} run(s) to do, {len(done)} already recorded")

    lock = threading.Lock()
    failures: list[str] = []

    def one(job) -> None:
        inst, fw, ctx, rep = job
        name = transcript_name(inst.name, fw, ctx, rep)
        try:
            if provider is Provider.REPLAY:
                path = Path(args.transcripts) / name
                if not path.is_file():
                    raise FileNotFoundError(f"no transcript {path}")
                config = ModelConfig(**base_config, provider=provider, transcript=str(path))
                client = ReplayClient(path)
            else:
                config = ModelConfig(**base_config, provider=provider, api_key_env=args.api_key_env)
                client = RecordingClient(remote)
            extra = {"clock": clock} if clock else {}
            record = run_framework(
                inst, fw, ctx, config, client, budgets, assets,
                experiment_id=args.experiment, repeat=rep, runner=runner, pricing=pricing, **extra,
            )
            if isinstance(client, RecordingClient) and args.record:
                record_transcript(client, Path(args.record) / name)
        except Exception as exc:  # one bad run never stops the grid
            with lock:
                failures.append(f"{name}: {type(exc).__name__}: {exc}")
                with (out / FAILURES_FILE).open("a") as fh:
                    fh.write(json.dumps({"run": name, "error": f"{type(exc).__name__}: {exc}"}) + "\n")
            return
        with lock:
            with records_path.open("a") as fh:
                fh.write(record.dumps() + "\n")
        print(f"{name}: {record.final_status.value}{' (aborted)' if record.aborted else ''}")

    if args.workers == 1:
        for job in jobs:
            one(job)
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(one, jobs))
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


# --------------------------------------------------------------------------- report


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    files = [path] if path.is_file() else sorted(path.rglob(RECORDS_FILE)) if path.is_dir() else []
    out = []
    for f in files:
        out.extend(RunRecord.loads(line) for line in f.read_text().splitlines() if line.strip())
    return out


REPORT_TABLES = ("framework", "context", "model", "confusion", "libraries", "approach")


def build_report(records, certificates, overrides=None) -> dict[str, metrics.Table]:
    return {
        "framework": metrics.aggregate(records, certificates, ("task", "framework"), "Results by framework"),
        "context": metrics.aggregate(records, certificates, ("task", "context"), "Results by context"),
        "model": metrics.aggregate(records, certificates, ("task", "model"), "Results by model"),
        "confusion": metrics.confusion_table(records),
        "libraries": metrics.library_usage_table(records),
        "approach": metrics.approach_table(records, overrides),
    }


def cmd_report(args) -> int:
    records = read_records(args.records)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render, ext = metrics.FORMATS[args.format]
    if not records:
        (out / f"report{ext}").write_text(
            {"markdown": "no records\n", "csv": "no records\n", "json": '{"records": 0}\n'}[args.format]
        )
        print(f"no records under {args.records}")
        return EXIT_OK
    certificates = load_certificates(args.certificates) if args.certificates else {}
    overrides = load_overrides(args.overrides) if args.overrides else None
    try:
        tables = build_report(records, certificates, overrides)
    except metrics.AggregationError as exc:
        raise UsageError(str(exc)) from None
    for name, table in tables.items():
        metrics.export(table, args.format, out / f"{name}{ext}")
    if args.format == "markdown":
        (out / "report.md").write_text("\n".join(metrics.to_markdown(tables[n]) for n in REPORT_TABLES))
    print(f"{len(records)} record(s); wrote {len(tables)} table(s) to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------- summarize


def cmd_summarize(args) -> int:
    text = Path(args.paper).read_text()
    if args.transcript:
        config = ModelConfig(args.model, provider=Provider.REPLAY, transcript=args.transcript)
        client = ReplayClient(args.transcript)
    else:
        config = ModelConfig(args.model, api_key_env=args.api_key_env)
        client = RemoteClient()
        try:
            client.check_credential(config)
        except AuthError as exc:
            raise EnvironmentProblem(str(exc)) from None
    asset = summarize_paper(text, client, config, args.cache)
    print(f"{asset.digest} {'cached' if asset.cached else 'new'}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="routebench", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file of default settings; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dataset", help="create the 80-instance benchmark")
    d.add_argument("action", choices=["gen", "import"], help="gen: all 80; import: the 20 CVRPLIB-derived ones")
    d.add_argument("--out", required=True)
    d.add_argument("--seed-base", type=int, default=0)
    d.add_argument("--cvrplib-dir", help="directory of CVRPLIB .vrp files (default: the bundled copies)")
    d.add_argument("--k-fraction", type=float, default=GenerationRules.k_fraction)
    d.add_argument("--cluster-size", type=int, default=GenerationRules.cluster_size)
    d.add_argument("--force", action="store_true", help="replace an existing, different dataset")
    d.set_defaults(func=cmd_dataset)

    s = sub.add_parser("solve", help="compute optimal baselines")
    s.add_argument("--dataset", required=True)
    s.add_argument("--store", help="certificate directory (default: DATASET/certificates)")
    s.add_argument("--time-budget", type=float, default=600.0, help="seconds per multi-robot instance")
    s.add_argument("--scope", choices=["all", "single", "multi"], default="all")
    s.add_argument("--instances", nargs="*")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("run", help="run the LLM experiment grid")
    r.add_argument("--dataset", required=True)
    r.add_argument("--out", required=True, help="record directory (records.jsonl is appended)")
    r.add_argument("--experiment", default="default")
    r.add_argument("--framework", default="all", help="all, or a comma list of framework names")
    r.add_argument("--context", nargs="+", default=["NONE"], help="NONE, MATH_FORMULATION, PSEUDO_CODE:<id>, PAPER_SUMMARY:<id>")
    r.add_argument("--model", required=True)
    r.add_argument("--temperature", type=float, default=0.2)
    r.add_argument("--max-tokens", type=int, default=4096)
    r.add_argument("--provider", choices=[p.value for p in Provider], default=Provider.REMOTE.value)
    r.add_argument("--api-key-env", default="OPENAI_API_KEY")
    r.add_argument("--transcripts", help="replay: directory of per-run transcripts")
    r.add_argument("--record", help="remote: directory to write per-run transcripts to")
    r.add_argument("--repeats", type=int, default=5)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--max-children", type=int, help="cap on concurrently running generated programs")
    r.add_argument("--debug-rounds", type=int, default=3)
    r.add_argument("--verify-rounds", type=int, default=2)
    r.add_argument("--exclude-aborted", action="store_true", help="drop aborted runs from success-rate denominators")
    r.add_argument("--timeout", type=float, default=60.0)
    r.add_argument("--test-timeout", type=float, default=30.0)
    r.add_argument("--runner", help="interpreter command for generated programs (default: this Python)")
    r.add_argument("--pricing", help="JSON price table")
    r.add_argument("--assets", help="assets directory (default: bundled)")
    r.add_argument("--summary-cache", help="paper summary cache directory")
    r.add_argument("--fake-clock", type=float, help="advance timings by this step per reading (reproducible records)")
    r.add_argument("--instances", nargs="*")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="write metric tables")
    rp.add_argument("--records", required=True, help="records.jsonl or a directory containing it")
    rp.add_argument("--out", required=True)
    rp.add_argument("--certificates", help="certificate directory for optimality gaps")
    rp.add_argument("--format", choices=sorted(metrics.FORMATS), default="markdown")
    rp.add_argument("--overrides", help="JSON approach-tag overrides")
    rp.set_defaults(func=cmd_report)

    sm = sub.add_parser("summarize", help="summarize a paper into the summary cache")
    sm.add_argument("--paper", required=True, help="plain-text paper file")
    sm.add_argument("--cache", required=True)
    sm.add_argument("--model", required=True)
    sm.add_argument("--transcript", help="replay this transcript instead of calling the API")
    sm.add_argument("--api-key-env", default="OPENAI_API_KEY")
    sm.set_defaults(func=cmd_summarize)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise EnvironmentProblem(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
            for a in sp._actions:
                if a.dest in cfg:
                    a.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"routebench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EnvironmentProblem as exc:
        print(f"routebench: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
