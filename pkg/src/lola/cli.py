"""Command-line driver: ``check``, ``offline`` and ``online`` modes plus a
``corpus`` helper.

Exit codes: 0 success, 1 specification error, 2 I/O or log format error,
3 runtime evaluation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from lola import corpus
from lola.analysis import AnalysisResult, analyze, format_cycle
from lola.engine import Monitor
from lola.errors import LolaError, LogFormatError
from lola.feedback import FeedbackRouter
from lola.logs import open_source, read_log, read_stream
from lola.parser import merge_specifications, parse_specification
from lola.syntax import Specification, format_expr

log = logging.getLogger("lola")

CORPUS_PREFIX = "corpus:"


@dataclass
class RunConfig:
    specs: list[str]
    mode: str = "offline"  # check | offline | online
    input: str | None = None
    listen: str | None = None
    out_dir: str | None = None
    evalstep: int = 1
    lenient: bool = False
    stats: bool = False
    json_report: str | None = None
    qualify: bool = False

    def validate(self) -> None:
        if not self.specs:
            raise ValueError("at least one --spec is required")
        if self.mode == "offline" and not self.input:
            raise ValueError("offline mode requires --input")
        if self.mode == "online" and not (self.input or self.listen):
            raise ValueError("online mode requires --input or --listen")
        if self.evalstep < 1:
            raise ValueError("--evalstep must be >= 1")


@dataclass
class FireCount:
    index: int
    kind: str
    label: str
    count: int


@dataclass
class RunReport:
    specs: list[str]
    mode: str
    events: int = 0
    fire_counts: list[FireCount] = field(default_factory=list)
    diagnostics: int = 0
    wall_time: float = 0.0
    throughput: float = 0.0
    peak_state_size: int = 0
    avg_freq: float | None = None
    evalstep: int | None = None
    complete: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def format(self, stats: bool = False) -> str:
        lines = [f"specs     : {', '.join(self.specs)}", f"mode      : {self.mode}", f"events    : {self.events}"]
        if self.evalstep is not None:
            lines.append(f"evalstep  : {self.evalstep}")
        if self.avg_freq is not None:
            lines.append(f"avg freq  : {self.avg_freq:.3f} Hz")
        if not self.complete:
            lines.append("input     : ended early (source disconnected)")
        lines.append(f"errors    : {self.diagnostics}")
        if self.fire_counts:
            width = max(len(f.kind) for f in self.fire_counts)
            lines.append("feedback  :")
            for f in self.fire_counts:
                lines.append(f"  {f.count:>8}  {f.kind:<{width}}  {f.label}")
        if stats:
            lines.append(f"wall time : {self.wall_time:.3f} s")
            lines.append(f"throughput: {self.throughput:.0f} events/s")
            lines.append(f"peak state: {self.peak_state_size} bytes")
        return "\n".join(lines)


def _label(spec_path: str) -> str:
    if spec_path.startswith(CORPUS_PREFIX):
        return spec_path[len(CORPUS_PREFIX):]
    return Path(spec_path).stem


def read_spec_source(spec_path: str) -> str:
    if spec_path.startswith(CORPUS_PREFIX):
        name = spec_path[len(CORPUS_PREFIX):]
        if name not in corpus.NAMES:
            raise LogFormatError(f"no corpus specification named {name!r} (have: {', '.join(corpus.NAMES)})")
        return corpus.source(name)
    try:
        return Path(spec_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise LogFormatError(f"cannot read specification {spec_path}: {exc}") from exc


def load_specification(paths: Sequence[str], qualify: bool = False) -> Specification:
    """Parse and merge the given files (``corpus:<name>`` picks a bundled one)."""
    specs = [parse_specification(read_spec_source(p), p) for p in paths]
    if len(specs) == 1:
        return specs[0]
    return merge_specifications(specs, labels=[_label(p) for p in paths], qualify_conflicts=qualify)


def _feedback_label(decl) -> str:
    if decl.kind == "tag":
        return decl.location
    return decl.message


# --------------------------------------------------------------------------


def run_check(config: RunConfig, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    result = analyze(load_specification(config.specs, config.qualify))
    out.write(describe_analysis(result))
    return 0 if result.well_formed else 1


def describe_analysis(result: AnalysisResult) -> str:
    spec = result.spec
    lines = ["streams:"]
    width = max((len(d.name) for d in spec.streams), default=0)
    for d in spec.streams:
        lines.append(f"  {d.kind:<6} {str(d.type):<6} {d.name:<{width}}")
    wf = result.well_formed
    em = result.efficiently_monitorable
    lines.append(f"well-formed: {'yes' if wf else 'no'}")
    if not wf:
        lines.append(f"  {wf.reason}")
        if wf.witness:
            lines.append(f"  witness cycle: {format_cycle(wf.witness)}")
    lines.append(f"efficiently monitorable: {'yes' if em else 'no'}")
    if wf and not em:
        lines.append(f"  {em.reason}")
        if em.witness:
            lines.append(f"  witness cycle: {format_cycle(em.witness)}")
    lines.append("buffers (past, future, pinned):")
    for name, b in result.buffer_bounds.items():
        pinned = ",".join(map(str, b.pinned)) or "-"
        lines.append(f"  {name:<{width}}  {b.past_depth:>3} {b.future_depth:>3}  {pinned}")
    if wf:
        lines.append("evaluation order: " + " ".join(result.evaluation_order))
    if result.latency is not None:
        worst = max(result.latency.values(), default=0)
        lines.append(f"max latency: {worst}")
    if spec.feedback:
        lines.append("feedback:")
        for fb in spec.feedback:
            cond = format_expr(fb.condition) if fb.condition is not None else "-"
            lines.append(f"  {fb.kind:<14} {cond}")
    return "\n".join(lines) + "\n"


def _report_for(config: RunConfig, monitor: Monitor, router: FeedbackRouter, wall: float) -> RunReport:
    counts = [
        FireCount(i, d.kind, _feedback_label(d), router.fire_counts[i]) for i, d in enumerate(monitor.feedback)
    ]
    events = monitor.emitted
    return RunReport(
        specs=list(config.specs),
        mode=config.mode,
        events=events,
        fire_counts=counts,
        diagnostics=router.errors,
        wall_time=wall,
        throughput=events / wall if wall > 0 else 0.0,
        peak_state_size=monitor.peak_state_size,
        avg_freq=monitor.average_frequency(),
        evalstep=config.evalstep if config.mode == "online" else None,
    )


def run_offline(config: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> RunReport:
    out, err = out or sys.stdout, err or sys.stderr
    spec = load_specification(config.specs, config.qualify)
    result = analyze(spec)
    monitor = Monitor(result, collect_values=False)
    router = FeedbackRouter(monitor.feedback, out, err, Path(config.out_dir) if config.out_dir else None)
    start = time.perf_counter()
    try:
        for event in read_log(config.input, monitor.spec.inputs):
            router.route(monitor.step(event.values).feedback)
        router.route(monitor.finalize().feedback)
    finally:
        router.close()
    return _report_for(config, monitor, router, time.perf_counter() - start)


def run_online(
    config: RunConfig,
    out: TextIO | None = None,
    err: TextIO | None = None,
    lines: Iterable[str] | None = None,
) -> RunReport:
    """Evaluate a line-delimited source in batches of ``evalstep`` records.
    ``lines`` overrides the configured source."""
    out, err = out or sys.stdout, err or sys.stderr
    spec = load_specification(config.specs, config.qualify)
    result = analyze(spec)
    monitor = Monitor(result, unbounded=False, collect_values=False)
    router = FeedbackRouter(monitor.feedback, out, err, Path(config.out_dir) if config.out_dir else None)
    complete = True
    start = time.perf_counter()

    def consume(source: Iterable[str]) -> None:
        nonlocal complete
        batches = read_stream(source, monitor.spec.inputs, config.evalstep, strict=not config.lenient)
        try:
            for batch in batches:
                for event in batch:
                    router.route(monitor.step(event.values).feedback)
                out.flush()
        except (ConnectionError, TimeoutError) as exc:
            log.warning("input source disconnected: %s", exc)
            complete = False

    try:
        if lines is not None:
            consume(lines)
        else:
            with open_source(config.input, config.listen) as source:
                consume(source)
        router.route(monitor.finalize().feedback)
    finally:
        router.close()
    report = _report_for(config, monitor, router, time.perf_counter() - start)
    report.complete = complete
    return report


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lola", description="Stream runtime monitoring with Lola specifications.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument(
            "--spec", action="append", required=True, metavar="PATH",
            help="specification file (repeatable; corpus:<name> for a bundled one)",
        )
        sp.add_argument(
            "--qualify-conflicts", dest="qualify", action="store_true",
            help="when merging, rename conflicting outputs of later files to <file>__<name>",
        )

    chk = sub.add_parser("check", help="analyse specifications without evaluating")
    common(chk)

    for mode, help_ in (("offline", "evaluate a complete log file"), ("online", "evaluate a record stream")):
        sp = sub.add_parser(mode, help=help_)
        common(sp)
        sp.add_argument("--input", metavar="PATH", help="log file, or - for standard input")
        sp.add_argument("--out-dir", metavar="DIR", help="directory for tag/filter outputs")
        sp.add_argument("--stats", action="store_true", help="report wall time, throughput and peak state size")
        sp.add_argument("--json-report", metavar="PATH", help="also write the run report as JSON")
        if mode == "online":
            sp.add_argument("--listen", metavar="HOST:PORT", help="accept one TCP connection as the source")
            sp.add_argument("--evalstep", type=int, default=1, help="records buffered per evaluation burst")
            sp.add_argument("--lenient", action="store_true", help="repeat the previous record on malformed lines")

    cor = sub.add_parser("corpus", help="list or export the bundled specifications")
    cor.add_argument("--extract", metavar="DIR", help="write the bundled .lola files into DIR")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if args.mode == "corpus":
        return _corpus_command(args)
    config = RunConfig(
        specs=args.spec,
        mode=args.mode,
        input=getattr(args, "input", None),
        listen=getattr(args, "listen", None),
        out_dir=getattr(args, "out_dir", None),
        evalstep=getattr(args, "evalstep", 1),
        lenient=getattr(args, "lenient", False),
        stats=getattr(args, "stats", False),
        json_report=getattr(args, "json_report", None),
        qualify=args.qualify,
    )
    try:
        config.validate()
    except ValueError as exc:
        print(f"lola: error: {exc}", file=sys.stderr)
        return 1
    try:
        if config.mode == "check":
            return run_check(config)
        runner = run_offline if config.mode == "offline" else run_online
        report = runner(config)
    except LolaError as exc:
        print(f"lola: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"lola: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.flush()
    print(report.format(config.stats), file=sys.stderr)
    if config.json_report:
        try:
            Path(config.json_report).write_text(report.to_json() + "\n", encoding="utf-8")
        except OSError as exc:
            print(f"lola: error: cannot write report: {exc}", file=sys.stderr)
            return 2
    return 0


def _corpus_command(args: argparse.Namespace) -> int:
    if args.extract:
        target = Path(args.extract)
        target.mkdir(parents=True, exist_ok=True)
        for name in corpus.NAMES:
            (target / f"{name}.lola").write_text(corpus.source(name), encoding="utf-8")
    for name in corpus.NAMES:
        print(f"{CORPUS_PREFIX}{name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
