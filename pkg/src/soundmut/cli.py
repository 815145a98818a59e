"""Command-line front end wiring mutation, execution, detection and evaluation.

Workspace layout under ``--out``::

    programs/<name>/mutated/*.al    mutate
    programs/<name>/ledger.tsv
    programs/<name>/executable.txt  execute (plus nonexecutable.txt, traces.log)
    programs/<name>/report.<d>.txt  detect
    programs/<name>/triage.tsv      analyze (plus triage.<d>.txt)
    detectors/<d>.cfg               detector configs used by detect
    minimal/<flaw>/                 minimal examples (units + ledger.tsv)
    flaws.tsv                       analyze
    matrix.tsv                      propagate

Every stage reads only files written by the previous ones, so an external
tool can replace any of them.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from soundmut.applang import AppLangError, Program, fingerprint, load_program, parse_program, render_program, write_program
from soundmut.detectors import (
    OK,
    ConfigError,
    DetectionReport,
    DetectorConfig,
    ReportError,
    analyze,
    load_config,
    parse_config,
    parse_report,
    reference_configs,
)
from soundmut.execengine import (
    ExplorationStrategy,
    FingerprintMismatch,
    filter_executable,
    format_trace_log,
    parse_trace_log,
    replay_filter,
)
from soundmut.museval import (
    CONFIRMED,
    FingerprintError,
    FlawRecord,
    MinimalExample,
    attribute,
    collect_flaws,
    diff_undetected,
    flaws_from_tsv,
    flaws_to_tsv,
    propagation_matrix,
    triage,
)
from soundmut.mutagen import (
    DEFAULT_LEAK,
    Ledger,
    LedgerError,
    OperatorError,
    SeedingError,
    SecurityOperator,
    load_operators,
    parse_schemes,
    relocate,
    seed_all,
    seed_isolated,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_INVALID, EXIT_CRASH = 0, 1, 2, 3
FP_HEADER = "# fingerprint="
STAGES = ("mutate", "execute", "detect", "analyze", "propagate")


class UsageError(Exception):
    """Bad configuration: missing paths, unknown names, malformed flags (exit 1)."""


class ValidationError(Exception):
    """Unparsable input or artifacts that do not belong together (exit 2)."""


@dataclass
class PipelineConfig:
    out: Path
    corpus: Optional[Path] = None
    operator: Optional[Path] = None
    schemes: str = "reach,complex,taint,scope"
    strategy: str = "systematic"
    detectors: list[str] = field(default_factory=list)
    external_reports: list[Path] = field(default_factory=list)
    jobs: int = 1
    isolated: bool = False
    resume: bool = False

    def validate(self, stage: str) -> None:
        if stage in ("mutate", "run"):
            if self.corpus is None:
                raise UsageError("--corpus is required")
            if not self.corpus.is_dir():
                raise UsageError(f"corpus directory {self.corpus} does not exist")
            if self.operator is not None and not self.operator.is_file():
                raise UsageError(f"operator file {self.operator} does not exist")
            try:
                parse_schemes(self.schemes)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        if stage in ("execute", "run"):
            try:
                ExplorationStrategy.parse(self.strategy)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        for d in self.detectors:
            if d not in reference_configs() and not Path(d).is_file():
                raise UsageError(f"detector {d!r} is neither a reference name nor a config file")
        for r in self.external_reports:
            if not r.is_file():
                raise UsageError(f"external report {r} does not exist")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {self.out}: {exc}") from None

    # workspace paths
    @property
    def programs_dir(self) -> Path:
        return self.out / "programs"

    @property
    def detectors_dir(self) -> Path:
        return self.out / "detectors"

    @property
    def minimal_dir(self) -> Path:
        return self.out / "minimal"


# ----------------------------------------------------------------------
# small file helpers


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\0")
    return h.hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _stamp_path(cfg: PipelineConfig, key: str) -> Path:
    return cfg.out / ".stamps" / key


def _fresh(cfg: PipelineConfig, key: str, stamp: str, outputs: Sequence[Path]) -> bool:
    """With --resume, a stage is skipped when its inputs are unchanged and its outputs exist."""
    if not cfg.resume:
        return False
    sp = _stamp_path(cfg, key)
    return sp.is_file() and sp.read_text() == stamp and all(o.exists() for o in outputs)


def _mark(cfg: PipelineConfig, key: str, stamp: str) -> None:
    _write(_stamp_path(cfg, key), stamp)


def _tag_list(fp: str, tags: Sequence[str]) -> str:
    return f"{FP_HEADER}{fp}\n" + "".join(f"{t}\n" for t in tags)


def read_tag_list(path: Path, fp: str) -> list[str]:
    """Read ``executable.txt``-style files, insisting on a matching fingerprint header."""
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(FP_HEADER):
        raise ValidationError(f"{path} lacks a fingerprint header")
    if lines[0][len(FP_HEADER):].strip() != fp:
        raise ValidationError(f"{path} was produced for a different program")
    return [ln.strip() for ln in lines[1:] if ln.strip()]


def discover_corpus(corpus: Path) -> list[tuple[str, Path]]:
    """Programs are the directory itself (if it holds ``.al`` files) or its subdirectories."""
    if any(corpus.glob("*.al")):
        return [(corpus.name, corpus)]
    progs = [(d.name, d) for d in sorted(corpus.iterdir()) if d.is_dir() and any(d.glob("*.al"))]
    if not progs:
        raise UsageError(f"no AppLang programs found under {corpus}")
    return progs


def _workspace_programs(cfg: PipelineConfig) -> list[str]:
    if not cfg.programs_dir.is_dir():
        raise UsageError(f"{cfg.out} holds no mutated programs; run the mutate stage first")
    names = sorted(d.name for d in cfg.programs_dir.iterdir() if (d / "ledger.tsv").is_file())
    if not names:
        raise UsageError(f"{cfg.out} holds no mutated programs; run the mutate stage first")
    return names


def load_mutated(prog_dir: Path) -> tuple[Program, Ledger]:
    """Mutated program plus its ledger; the two must share a fingerprint."""
    p = load_program(prog_dir / "mutated")
    ledger = Ledger.from_tsv((prog_dir / "ledger.tsv").read_text(encoding="utf-8"), p)
    if ledger.fingerprint != fingerprint(p):
        raise ValidationError(f"ledger in {prog_dir} does not belong to the mutated sources next to it")
    return p, ledger


def _load_example(d: Path, tag: str) -> MinimalExample:
    p = load_program(d)
    ledger = Ledger.from_tsv((d / "ledger.tsv").read_text(encoding="utf-8"), p)
    if ledger.fingerprint != fingerprint(p):
        raise ValidationError(f"minimal example in {d} does not match its ledger")
    return MinimalExample(tag, p, ledger)


# ----------------------------------------------------------------------
# parallel map with picklable failures


@dataclass(frozen=True)
class _Failure:
    code: int
    message: str


def _guard(fn: Callable, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 -- mapped to an exit code in the parent
        return _Failure(exit_code_for(exc), f"{type(exc).__name__}: {exc}")


def _pmap(cfg: PipelineConfig, fn: Callable, jobs: list[tuple]) -> list:
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_guard, [fn] * len(jobs), *zip(*jobs)))
    else:
        results = [_guard(fn, *j) for j in jobs]
    for r in results:
        if isinstance(r, _Failure):
            raise (UsageError if r.code == EXIT_CONFIG else ValidationError)(r.message)
    return results


# ----------------------------------------------------------------------
# stage 1: mutate


def _operators(cfg: PipelineConfig) -> list[SecurityOperator]:
    if cfg.operator is None:
        return [DEFAULT_LEAK]
    try:
        return load_operators(cfg.operator.read_text(encoding="utf-8"))
    except OperatorError as exc:
        raise UsageError(f"operator file {cfg.operator}: {exc}") from None


def _seed_chain(p: Program, schemes, ops: list[SecurityOperator]):
    """Seed every operator in turn; earlier records are relocated after later rewrites."""
    records = []
    start = None
    dropped = []
    for op in ops:
        res = seed_all(p, schemes, op, start)
        p, start = res.program, res.next_index
        records = relocate(p, records) + list(res.ledger.records)
        dropped += res.dropped
    return p, Ledger(tuple(records), fingerprint(p)), dropped


def _mutate_one(src: str, dest_root: str, name: str, op_text: str, schemes_text: str, isolated: bool) -> list[tuple]:
    p = load_program(src)
    ops = load_operators(op_text)
    schemes = parse_schemes(schemes_text)
    outputs = []
    if isolated:
        variants = []
        for op in ops:
            variants += [(r.program, r.ledger) for r in seed_isolated(p, schemes, op)]
        for i, (mp, ledger) in enumerate(variants, start=1):
            outputs.append((f"{name}@{i:04d}", mp, ledger, 0))
    else:
        mp, ledger, dropped = _seed_chain(p, schemes, ops)
        for d in dropped:
            logger.warning("%s: %s group %s dropped at %s (%s)", name, d.scheme, d.group, d.point, d.reason)
        outputs.append((name, mp, ledger, len(dropped)))
    summary = []
    for pname, mp, ledger, ndropped in outputs:
        d = Path(dest_root) / pname
        shutil.rmtree(d / "mutated", ignore_errors=True)
        write_program(mp, d / "mutated")
        _write(d / "ledger.tsv", ledger.to_tsv())
        summary.append((pname, len(ledger.records), ndropped))
    return summary


def stage_mutate(cfg: PipelineConfig) -> int:
    progs = discover_corpus(cfg.corpus)
    ops = _operators(cfg)
    op_text = "\n".join(op.describe() for op in ops) + "\n"
    stamp = _digest("mutate", op_text, cfg.schemes, str(cfg.isolated),
                    *(f"{n}:{fingerprint(load_program(d))}" for n, d in progs))
    if _fresh(cfg, "mutate", stamp, [cfg.programs_dir]):
        logger.info("mutate: inputs unchanged, keeping %s", cfg.programs_dir)
        return EXIT_OK
    shutil.rmtree(cfg.programs_dir, ignore_errors=True)
    shutil.rmtree(cfg.out / ".stamps", ignore_errors=True)
    jobs = [(str(d), str(cfg.programs_dir), n, op_text, cfg.schemes, cfg.isolated) for n, d in progs]
    total = 0
    for summary in _pmap(cfg, _mutate_one, jobs):
        for pname, n, ndropped in summary:
            total += n
            extra = f", {ndropped} group(s) dropped" if ndropped else ""
            print(f"mutate {pname}: {n} mutants{extra}")
    print(f"mutate: {total} mutants in {len(progs)} program(s)")
    _mark(cfg, "mutate", stamp)
    return EXIT_OK


# ----------------------------------------------------------------------
# stage 2: execute


def _execute_one(prog_dir: str, strategy_text: str) -> tuple[int, int]:
    d = Path(prog_dir)
    p, ledger = load_mutated(d)
    fp = ledger.fingerprint
    result = filter_executable(p, ledger, ExplorationStrategy.parse(strategy_text))
    order = ledger.tags
    _write(d / "executable.txt", _tag_list(fp, [t for t in order if t in result.executable]))
    _write(d / "nonexecutable.txt", _tag_list(fp, [t for t in order if t in result.nonexecutable]))
    _write(d / "traces.log", f"{FP_HEADER}{fp}\n" + format_trace_log(result.traces))
    return len(result.executable), len(order)


def stage_execute(cfg: PipelineConfig) -> int:
    names = _workspace_programs(cfg)
    todo = []
    for n in names:
        d = cfg.programs_dir / n
        stamp = _digest("execute", cfg.strategy, (d / "ledger.tsv").read_text(encoding="utf-8"))
        outs = [d / "executable.txt", d / "nonexecutable.txt", d / "traces.log"]
        if not _fresh(cfg, f"{n}.execute", stamp, outs):
            todo.append((n, stamp))
    results = _pmap(cfg, _execute_one, [(str(cfg.programs_dir / n), cfg.strategy) for n, _ in todo])
    for (n, stamp), (ex, total) in zip(todo, results):
        print(f"execute {n}: {ex}/{total} executable")
        _mark(cfg, f"{n}.execute", stamp)
    return EXIT_OK


# ----------------------------------------------------------------------
# stage 3: detect


def resolve_detectors(specs: Sequence[str]) -> list[DetectorConfig]:
    """Reference names (baseline, fc1..fc5) or config files; all references when empty."""
    refs = reference_configs()
    if not specs:
        return list(refs.values())
    out = []
    for s in specs:
        if s in refs:
            out.append(refs[s])
        else:
            try:
                out.append(load_config(s))
            except (OSError, ConfigError) as exc:
                raise UsageError(f"detector config {s}: {exc}") from None
    names = [c.name for c in out]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise UsageError(f"duplicate detector name(s): {', '.join(dupes)}")
    return out


def _detect_one(prog_dir: str, config_texts: list[str]) -> list[tuple[str, str]]:
    d = Path(prog_dir)
    p, ledger = load_mutated(d)
    out = []
    for text in config_texts:
        config = parse_config(text)
        report = analyze(p, config)
        _write(d / f"report.{config.name}.txt", report.to_text())
        out.append((config.name, report.status))
    return out


def _external(cfg: PipelineConfig) -> list[tuple[Path, DetectionReport]]:
    out = []
    for path in cfg.external_reports:
        try:
            out.append((path, parse_report(path.read_text(encoding="utf-8"))))
        except ReportError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    return out


def stage_detect(cfg: PipelineConfig) -> int:
    names = _workspace_programs(cfg)
    configs = resolve_detectors(cfg.detectors)
    externals = _external(cfg)
    shutil.rmtree(cfg.detectors_dir, ignore_errors=True)
    for c in configs:
        _write(cfg.detectors_dir / f"{c.name}.cfg", c.to_text())
    ext_names = sorted({r.detector for _, r in externals})
    clash = set(ext_names) & {c.name for c in configs}
    if clash:
        raise UsageError(f"external report name(s) clash with detector configs: {', '.join(sorted(clash))}")
    for n in ext_names:
        _write(cfg.detectors_dir / f"{n}.external", "")
    texts = [c.to_text() for c in configs]
    todo = []
    for n in names:
        d = cfg.programs_dir / n
        for stale in d.glob("report.*.txt"):
            stale.unlink()
        todo.append((str(d), texts))
    crashed = []
    for n, statuses in zip(names, _pmap(cfg, _detect_one, todo)):
        for det, status in statuses:
            if status != OK:
                crashed.append((n, det, status))
                print(f"detect {n}: {det} {status}")
        print(f"detect {n}: {len(statuses)} report(s)")
    # external reports go to the program with the same fingerprint
    fps = {fingerprint(load_program(cfg.programs_dir / n / "mutated")): n for n in names}
    for path, report in externals:
        target = fps.get(report.fingerprint)
        if target is None:
            logger.info("external report %s matches no mutated program; kept for propagation", path)
            continue
        _write(cfg.programs_dir / target / f"report.{report.detector}.txt", path.read_text(encoding="utf-8"))
        print(f"detect {target}: imported external report {report.detector} ({report.status})")
    if crashed and len(configs) + len(ext_names) == 1:
        return EXIT_CRASH
    return EXIT_OK


def _detector_names(cfg: PipelineConfig) -> tuple[dict[str, DetectorConfig], list[str]]:
    if not cfg.detectors_dir.is_dir():
        raise UsageError("no detectors recorded; run the detect stage first")
    configs = {}
    for f in sorted(cfg.detectors_dir.glob("*.cfg")):
        try:
            configs[f.stem] = load_config(f)
        except ConfigError as exc:
            raise ValidationError(f"{f}: {exc}") from None
    externals = sorted(f.stem for f in cfg.detectors_dir.glob("*.external"))
    return configs, externals


# ----------------------------------------------------------------------
# stage 4: analyze (diff, triage, attribution, minimal examples)


def _analyze_one(prog_dir: str, name: str, config_texts: dict[str, str], detectors: list[str]):
    d = Path(prog_dir)
    p, ledger = load_mutated(d)
    fp = ledger.fingerprint
    logged = parse_trace_log((d / "traces.log").read_text(encoding="utf-8"))
    head = (d / "traces.log").read_text(encoding="utf-8").splitlines()[:1]
    if head != [f"{FP_HEADER}{fp}"]:
        raise ValidationError(f"{d / 'traces.log'} was produced for a different program")
    filtered = replay_filter(p, ledger, logged)
    listed = set(read_tag_list(d / "executable.txt", fp))
    if listed != set(filtered.executable):
        raise ValidationError(f"{d / 'executable.txt'} disagrees with the recorded traces")
    configs = {n: parse_config(t) for n, t in config_texts.items()}
    undetected = {}
    statuses = {}
    tsv = [f"{FP_HEADER}{fp}"]
    header = None
    for det in detectors:
        rp = d / f"report.{det}.txt"
        if not rp.is_file():
            logger.info("%s: no report from %s", name, det)
            continue
        report = parse_report(rp.read_text(encoding="utf-8"), fp, ledger.tags)
        statuses[det] = report.status
        if report.status != OK:
            logger.warning("%s: %s reported %s; skipped in triage", name, det, report.status)
            continue
        u = diff_undetected(ledger, filtered, report)
        undetected[det] = u
        config = configs.get(det)
        classify = (lambda m, c=config: attribute(p, c, m)) if config is not None else None
        tri = triage(u, p, classify)
        rows = tri.to_tsv().splitlines()
        header = "detector\t" + rows[0]
        tsv += [f"{det}\t{r}" for r in rows[1:]]
        _write(d / f"triage.{det}.txt", tri.to_text())
    tsv.insert(1, header or "detector\ttag\tclass\tmethod\tscheme\twitness_chain\tsource\tsink\tsource_chain\tflaw_class\tsignature")
    _write(d / "triage.tsv", "\n".join(tsv) + "\n")
    flaws = collect_flaws(p, ledger, filtered, undetected, configs)
    out = []
    for f in flaws:
        ex = f.minimal_example
        units = render_program(ex.program) if ex is not None else None
        out.append((f.flaw_class, f.signature, f.tag, f.status, list(f.detectors_affected), f.schemes, f.tags,
                    units, ex.ledger.to_tsv() if ex is not None else None))
    counts = {det: len(u) for det, u in undetected.items()}
    return counts, statuses, out


def _merge_flaws(per_program: list[tuple[str, list]]) -> list[FlawRecord]:
    """Deduplicate by (class, signature) across programs; a confirmed example wins."""
    merged: dict[tuple[str, str], FlawRecord] = {}
    for prog, flaws in per_program:
        for fc, sig, tag, status, dets, schemes, tags, units, ledger_text in flaws:
            ex = None
            if units is not None:
                p = parse_program(units)
                ex = MinimalExample(tag, p, Ledger.from_tsv(ledger_text, p))
            rec = FlawRecord("", fc, sig, tag, ex, list(dets), status, tuple(schemes),
                             tuple(f"{prog}:{t}" for t in tags), prog)
            cur = merged.get((fc, sig))
            if cur is None:
                merged[(fc, sig)] = rec
                continue
            cur.detectors_affected += [x for x in dets if x not in cur.detectors_affected]
            cur.schemes = tuple(sorted(set(cur.schemes) | set(schemes)))
            cur.tags = cur.tags + rec.tags
            if cur.status != CONFIRMED and status == CONFIRMED:
                cur.tag, cur.minimal_example, cur.status, cur.program = tag, ex, status, prog
    out = sorted(merged.values(), key=lambda f: (f.flaw_class, f.signature))
    for i, f in enumerate(out, start=1):
        f.flaw_id = f"F{i}"
        f.detectors_affected.sort()
    return out


def _corpus_header(cfg: PipelineConfig, names: list[str]) -> str:
    fps = [(cfg.programs_dir / n / "ledger.tsv").read_text(encoding="utf-8").splitlines()[0][len(FP_HEADER):]
           for n in names]
    return f"# corpus={_digest(*fps)} programs={len(names)}\n"


def stage_analyze(cfg: PipelineConfig) -> int:
    names = _workspace_programs(cfg)
    configs, externals = _detector_names(cfg)
    detectors = sorted(set(configs) | set(externals))
    if not detectors:
        raise UsageError("no detectors recorded; run the detect stage first")
    texts = {n: c.to_text() for n, c in configs.items()}
    jobs = [(str(cfg.programs_dir / n), n, texts, detectors) for n in names]
    results = _pmap(cfg, _analyze_one, jobs)
    crashed = False
    per_program = []
    for n, (counts, statuses, flaws) in zip(names, results):
        crashed |= any(s != OK for s in statuses.values())
        desc = ", ".join(f"{det}={c}" for det, c in sorted(counts.items()))
        print(f"analyze {n}: undetected {desc}")
        per_program.append((n, flaws))
    flaws = _merge_flaws(per_program)
    shutil.rmtree(cfg.minimal_dir, ignore_errors=True)
    for f in flaws:
        if f.minimal_example is not None:
            d = cfg.minimal_dir / f.flaw_id
            write_program(f.minimal_example.program, d)
            _write(d / "ledger.tsv", f.minimal_example.ledger.to_tsv())
    _write(cfg.out / "flaws.tsv", _corpus_header(cfg, names) + flaws_to_tsv(flaws))
    confirmed = sum(f.status == CONFIRMED for f in flaws)
    print(f"analyze: {len(flaws)} flaw(s), {confirmed} confirmed")
    if crashed and len(detectors) == 1:
        return EXIT_CRASH
    return EXIT_OK


# ----------------------------------------------------------------------
# stage 5: propagate


def load_flaws(cfg: PipelineConfig) -> list[FlawRecord]:
    path = cfg.out / "flaws.tsv"
    if not path.is_file():
        raise UsageError("no flaws.tsv; run the analyze stage first")
    text = path.read_text(encoding="utf-8")
    examples = {}
    for ln in text.splitlines()[2:]:
        cols = ln.split("\t")
        if len(cols) > 4 and (cfg.minimal_dir / cols[0]).is_dir():
            examples[cols[0]] = _load_example(cfg.minimal_dir / cols[0], cols[4])
    try:
        return flaws_from_tsv(text, examples)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def stage_propagate(cfg: PipelineConfig) -> int:
    flaws = load_flaws(cfg)
    configs, recorded = _detector_names(cfg)
    for c in resolve_detectors(cfg.detectors) if cfg.detectors else []:
        configs.setdefault(c.name, c)
    columns: list = [configs[n] for n in sorted(configs)]
    names = sorted(configs)
    by_name: dict[str, list[DetectionReport]] = {}
    for n in recorded:
        by_name.setdefault(n, [])  # no reports for the minimal examples: untestable cells
    for path, report in _external(cfg):
        by_name.setdefault(report.detector, []).append(report)
    known = {f.minimal_example.ledger.fingerprint for f in flaws if f.minimal_example is not None}
    workspace = set()
    if cfg.programs_dir.is_dir():
        for n in _workspace_programs(cfg):
            workspace.add((cfg.programs_dir / n / "ledger.tsv").read_text(encoding="utf-8").splitlines()[0][len(FP_HEADER):])
    for n in sorted(by_name):
        reports = by_name[n]
        stray = [r for r in reports if r.fingerprint not in known | workspace]
        if stray:
            raise ValidationError(f"external report {n} names fingerprint {stray[0].fingerprint[:12]} "
                                  "that matches no program or minimal example")
        columns.append(reports)
        names.append(n)
    matrix = propagation_matrix(flaws, columns, names)
    header = (cfg.out / "flaws.tsv").read_text(encoding="utf-8").splitlines()[0]
    _write(cfg.out / "matrix.tsv", header + "\n" + matrix.to_tsv())
    print(f"propagate: {len(flaws)} flaw(s) x {len(names)} detector(s)")
    return EXIT_OK


# ----------------------------------------------------------------------


def run_pipeline(cfg: PipelineConfig, stages: Sequence[str] = STAGES) -> int:
    """Run ``stages`` in order; returns the process exit status."""
    cfg.validate("run" if len(stages) > 1 else stages[0])
    handlers = {"mutate": stage_mutate, "execute": stage_execute, "detect": stage_detect,
                "analyze": stage_analyze, "propagate": stage_propagate}
    status = EXIT_OK
    for s in stages:
        code = handlers[s](cfg)
        status = status or code
    return status


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ValidationError, AppLangError, LedgerError, ReportError, FingerprintMismatch,
                        FingerprintError)):
        return EXIT_INVALID
    if isinstance(exc, (UsageError, ConfigError, OperatorError, SeedingError, FileNotFoundError)):
        return EXIT_CONFIG
    if isinstance(exc, ValueError):
        return EXIT_INVALID
    raise exc


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, required=True, help="workspace directory for all artifacts")
    common.add_argument("--jobs", type=int, default=1, help="programs processed in parallel")
    common.add_argument("--resume", action="store_true", help="skip stages whose inputs are unchanged")
    common.add_argument("-v", "--verbose", action="count", default=0)

    mut = argparse.ArgumentParser(add_help=False)
    mut.add_argument("--corpus", type=Path, help="directory of programs (one subdirectory each)")
    mut.add_argument("--operator", type=Path, help="operator spec file (default: the timezone leak)")
    mut.add_argument("--schemes", default="reach,complex,taint,scope")
    mut.add_argument("--isolated", action="store_true", help="one program copy per mutant group")

    exe = argparse.ArgumentParser(add_help=False)
    exe.add_argument("--strategy", default="systematic", help="systematic or brute:K")

    det = argparse.ArgumentParser(add_help=False)
    det.add_argument("--detector", nargs="+", default=[], metavar="FILE",
                     help="detector config files or reference names (baseline, fc1..fc5)")
    det.add_argument("--external-report", nargs="+", default=[], type=Path, metavar="FILE",
                     help="reports produced by third-party tools")

    ap = argparse.ArgumentParser(prog="soundmut", description="Mutation-based soundness evaluation of taint detectors.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("mutate", parents=[common, mut], help="seed mutants and write the ledger")
    sub.add_parser("execute", parents=[common, exe], help="filter executable mutants")
    sub.add_parser("detect", parents=[common, det], help="run detectors or import external reports")
    sub.add_parser("analyze", parents=[common], help="diff, triage and confirm flaws")
    sub.add_parser("propagate", parents=[common, det], help="build the propagation matrix")
    sub.add_parser("run", parents=[common, mut, exe, det], help="all stages end to end")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig(
        out=args.out,
        corpus=getattr(args, "corpus", None),
        operator=getattr(args, "operator", None),
        schemes=getattr(args, "schemes", "reach,complex,taint,scope"),
        strategy=getattr(args, "strategy", "systematic"),
        detectors=list(getattr(args, "detector", [])),
        external_reports=list(getattr(args, "external_report", [])),
        jobs=args.jobs,
        isolated=getattr(args, "isolated", False),
        resume=args.resume,
    )
    stages = STAGES if args.command == "run" else (args.command,)
    try:
        return run_pipeline(cfg, stages)
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        print(f"soundmut: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
