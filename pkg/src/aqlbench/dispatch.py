"""Tool dispatch: configuration, capability routing, execution, caching.

A query is routed to the highest-priority tool whose capabilities cover
its (subject, scope).  Inter-app queries without a capable tool may fall
back to a preprocessor (an app combiner) plus an intra-app tool.  Results
are cached under a key derived from the canonical query text, the tool
identity and the app hashes, so an unchanged question never launches the
tool again.

Tool failures never raise: the run record carries the failure kind and
the answer is empty, letting the caller decide how to score it.
"""

from __future__ import annotations

import enum
import hashlib
import os
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional
import xml.etree.ElementTree as ET

from aqlbench.appmodel import AppModel, ingest_app
from aqlbench.aql.model import Answer, Provenance, Query, Subject, Unify
from aqlbench.aql.ops import apply_post_ops
from aqlbench.aql.printer import print_query
from aqlbench.aql.xmlio import deserialize_answer, serialize_answer
from aqlbench.converters import ConverterRegistry, default_registry
from aqlbench.errors import (
    AqlBenchError,
    ConfigSyntaxError,
    DuplicateToolError,
    NoCapableToolError,
)
from aqlbench.hashing import hash_path


class QueryScope(enum.Enum):
    INTRA_APP = "IntraApp"
    INTER_APP = "InterApp"


@dataclass(frozen=True)
class QueryCapability:
    subject: Subject
    scope: QueryScope


@dataclass(frozen=True)
class ToolSpec:
    name: str
    version: str
    run_template: str
    capabilities: frozenset[QueryCapability]
    converter_id: str
    timeout: float = 60.0
    memory_hint: int = 2048
    priority: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "capabilities",
                           frozenset(self.capabilities))
        if "%APP%" not in self.run_template:
            raise ConfigSyntaxError(
                f"tool {self.name!r}: run template must contain %APP%")
        if self.timeout <= 0:
            raise ConfigSyntaxError(
                f"tool {self.name!r}: timeout must be positive")


@dataclass(frozen=True)
class Preprocessor:
    name: str
    run_template: str
    scope: QueryScope = QueryScope.INTER_APP

    def __post_init__(self) -> None:
        if "%APP%" not in self.run_template or "%OUT%" not in self.run_template:
            raise ConfigSyntaxError(
                f"preprocessor {self.name!r}: run template must contain "
                f"%APP% and %OUT%")


class ExitStatus(enum.Enum):
    SUCCESS = "Success"
    NON_ZERO_EXIT = "NonZeroExit"
    TIMEOUT = "Timeout"
    CONVERSION_FAILURE = "ConversionFailure"


@dataclass(frozen=True)
class ToolRun:
    tool: str
    exit_status: ExitStatus
    wall_time: float
    raw_output_path: Optional[str] = None
    answer: Optional[Answer] = None
    cache_hit: bool = False
    detail: str = ""

    def __post_init__(self) -> None:
        has_answer = self.answer is not None
        if has_answer != (self.exit_status is ExitStatus.SUCCESS):
            raise ValueError("answer present iff the run succeeded")


@dataclass
class Config:
    tools: tuple[ToolSpec, ...]
    preprocessors: tuple[Preprocessor, ...]
    cache_dir: Path
    timeout_slack: float = 2.0
    registry: ConverterRegistry = field(default_factory=default_registry)
    _locks: dict[str, threading.Lock] = field(default_factory=dict, repr=False)
    _locks_guard: threading.Lock = field(default_factory=threading.Lock,
                                         repr=False)

    def __post_init__(self) -> None:
        self.tools = tuple(self.tools)
        self.preprocessors = tuple(self.preprocessors)
        self.cache_dir = Path(self.cache_dir)
        seen: set[str] = set()
        for tool in self.tools:
            if tool.name in seen:
                raise DuplicateToolError(f"duplicate tool name: {tool.name!r}")
            seen.add(tool.name)
        for tool in self.tools:
            # every converter must resolve while loading, not mid-run
            self.registry.spec(tool.converter_id)

    def lock_for(self, tool_name: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(tool_name, threading.Lock())


def _parse_capability(elem: ET.Element, tool_name: str) -> QueryCapability:
    subject_text = elem.get("subject", "")
    scope_text = elem.get("scope", "")
    try:
        subject = Subject(subject_text)
    except ValueError:
        raise ConfigSyntaxError(
            f"tool {tool_name!r}: unknown capability subject "
            f"{subject_text!r}") from None
    try:
        scope = QueryScope(scope_text)
    except ValueError:
        raise ConfigSyntaxError(
            f"tool {tool_name!r}: unknown capability scope "
            f"{scope_text!r}") from None
    return QueryCapability(subject, scope)


def load_config(path: str | Path,
                registry: Optional[ConverterRegistry] = None) -> Config:
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise ConfigSyntaxError(f"cannot load config {path}: {exc}") from exc
    if root.tag != "config":
        raise ConfigSyntaxError(f"root element must be config, got {root.tag}")

    tools: list[ToolSpec] = []
    tools_elem = root.find("tools")
    if tools_elem is not None:
        for tool_elem in tools_elem.findall("tool"):
            name = tool_elem.get("name")
            if not name:
                raise ConfigSyntaxError("tool element needs a name")
            version = tool_elem.get("version", "")
            priority_text = tool_elem.get("priority", "0")
            try:
                priority = int(priority_text)
            except ValueError:
                raise ConfigSyntaxError(
                    f"tool {name!r}: priority must be an integer") from None
            execute_elem = tool_elem.find("execute")
            if execute_elem is None or not (execute_elem.text or "").strip():
                raise ConfigSyntaxError(f"tool {name!r}: missing execute")
            capabilities = []
            caps_elem = tool_elem.find("capabilities")
            if caps_elem is not None:
                capabilities = [_parse_capability(c, name)
                                for c in caps_elem.findall("capability")]
            if not capabilities:
                raise ConfigSyntaxError(f"tool {name!r}: no capabilities")
            converter_elem = tool_elem.find("converter")
            if converter_elem is None or not converter_elem.get("id"):
                raise ConfigSyntaxError(f"tool {name!r}: missing converter id")
            timeout = 60.0
            timeout_elem = tool_elem.find("timeout")
            if timeout_elem is not None:
                try:
                    timeout = float(timeout_elem.get("seconds", ""))
                except ValueError:
                    raise ConfigSyntaxError(
                        f"tool {name!r}: timeout seconds must be a "
                        f"number") from None
            memory = 2048
            memory_elem = tool_elem.find("memory")
            if memory_elem is not None:
                try:
                    memory = int(memory_elem.get("megabytes", ""))
                except ValueError:
                    raise ConfigSyntaxError(
                        f"tool {name!r}: memory megabytes must be an "
                        f"integer") from None
            tools.append(ToolSpec(
                name=name, version=version,
                run_template=(execute_elem.text or "").strip(),
                capabilities=frozenset(capabilities),
                converter_id=converter_elem.get("id", ""),
                timeout=timeout, memory_hint=memory, priority=priority))

    preprocessors: list[Preprocessor] = []
    pre_elem = root.find("preprocessors")
    if pre_elem is not None:
        for p_elem in pre_elem.findall("preprocessor"):
            name = p_elem.get("name")
            if not name:
                raise ConfigSyntaxError("preprocessor element needs a name")
            execute_elem = p_elem.find("execute")
            if execute_elem is None or not (execute_elem.text or "").strip():
                raise ConfigSyntaxError(
                    f"preprocessor {name!r}: missing execute")
            scope_text = p_elem.get("scope", QueryScope.INTER_APP.value)
            try:
                scope = QueryScope(scope_text)
            except ValueError:
                raise ConfigSyntaxError(
                    f"preprocessor {name!r}: unknown scope "
                    f"{scope_text!r}") from None
            preprocessors.append(Preprocessor(
                name=name, run_template=(execute_elem.text or "").strip(),
                scope=scope))

    cache_dir = path.parent / "cache"
    cache_elem = root.find("cache")
    if cache_elem is not None and cache_elem.get("dir"):
        cache_dir = Path(cache_elem.get("dir", ""))
        if not cache_dir.is_absolute():
            cache_dir = path.parent / cache_dir

    return Config(tools=tuple(tools), preprocessors=tuple(preprocessors),
                  cache_dir=cache_dir,
                  registry=registry if registry is not None
                  else default_registry())


def derive_scope(query: Query) -> QueryScope:
    # only the IN or FROM/TO apps count; post-op apps are not tool inputs
    if len(query.target_app_paths()) >= 2:
        return QueryScope.INTER_APP
    return QueryScope.INTRA_APP


@dataclass(frozen=True)
class SelectionPlan:
    tool: ToolSpec
    preprocessor: Optional[Preprocessor] = None
    scope: QueryScope = QueryScope.INTRA_APP


def _best(tools: list[ToolSpec]) -> ToolSpec:
    best = tools[0]
    for tool in tools[1:]:
        if tool.priority > best.priority:
            best = tool
    return best


def select_tool(query: Query, config: Config) -> SelectionPlan:
    scope = derive_scope(query)
    wanted = QueryCapability(query.subject, scope)
    capable = [t for t in config.tools if wanted in t.capabilities]
    if capable:
        return SelectionPlan(_best(capable), None, scope)
    if scope is QueryScope.INTER_APP:
        # a combiner can lower the question to a single-app one
        pre = next((p for p in config.preprocessors
                    if p.scope is QueryScope.INTER_APP), None)
        if pre is not None:
            lowered = QueryCapability(query.subject, QueryScope.INTRA_APP)
            intra = [t for t in config.tools if lowered in t.capabilities]
            if intra:
                return SelectionPlan(_best(intra), pre, scope)
    raise NoCapableToolError(query.subject.value, scope.value)


def _find_model(path: str, context: tuple[AppModel, ...]) -> Optional[AppModel]:
    for model in context:
        names = {model.file, model.id, Path(model.file).name}
        if model.source_path:
            names.add(model.source_path)
        if path in names or Path(path).name == Path(model.file).name:
            return model
    return None


def cache_key(query: Query, tool: ToolSpec,
              context: tuple[AppModel, ...]) -> str:
    digests: list[str] = []
    for path in query.app_paths():
        model = _find_model(path, context)
        if model is not None:
            sha = next((h.value for h in model.hashes
                        if h.algorithm == "SHA-256"), None)
            digests.append(sha if sha else path)
        elif Path(path).is_file():
            digests.append(hash_path(path).value)
        else:
            digests.append(path)
    material = "\0".join([print_query(query), tool.name, tool.version]
                         + sorted(digests))
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _input_paths(query: Query, context: tuple[AppModel, ...]) -> list[str]:
    paths: list[str] = []
    for path in query.target_app_paths():
        model = _find_model(path, context)
        if model is not None and model.source_path:
            paths.append(model.source_path)
        else:
            paths.append(path)
    return paths


def _expand(template: str, app_paths: list[str], memory: int,
            out_path: str) -> list[str]:
    argv: list[str] = []
    for token in shlex.split(template):
        if token == "%APP%":
            argv.extend(app_paths)
            continue
        token = token.replace("%APP%", ",".join(app_paths))
        token = token.replace("%MEMORY%", str(memory))
        token = token.replace("%OUT%", out_path)
        argv.append(token)
    return argv


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def execute(query: Query, config: Config,
            context: tuple[AppModel, ...] = (),
            strictness=None) -> tuple[Answer, ToolRun]:
    """Answer a query through the configured toolchain.

    Returns the final answer (post-ops applied) plus the run record.
    Failures surface in the record, not as exceptions.
    """
    plan = select_tool(query, config)
    tool = plan.tool
    key = cache_key(query, tool, context)
    cache_file = config.cache_dir / f"{key}.xml"

    if cache_file.is_file():
        answer = deserialize_answer(cache_file.read_bytes())
        run = ToolRun(tool=tool.name, exit_status=ExitStatus.SUCCESS,
                      wall_time=0.0, raw_output_path=str(cache_file),
                      answer=answer, cache_hit=True)
        return answer, run

    work_dir = config.cache_dir / "work"
    raw_path = work_dir / f"{key}.raw"
    started = time.monotonic()

    def failed(status: ExitStatus, detail: str) -> tuple[Answer, ToolRun]:
        wall = time.monotonic() - started
        run = ToolRun(tool=tool.name, exit_status=status, wall_time=wall,
                      raw_output_path=str(raw_path) if raw_path.exists()
                      else None,
                      answer=None, detail=detail)
        empty = Answer(frozenset(),
                       Provenance(tool=tool.name, timestamp=_now(),
                                  notes=(detail,) if detail else ()))
        return empty, run

    app_paths = _input_paths(query, context)
    context = tuple(context)

    if plan.preprocessor is not None:
        combined_path = work_dir / f"combined-{key[:16]}.xml"
        work_dir.mkdir(parents=True, exist_ok=True)
        argv = _expand(plan.preprocessor.run_template, app_paths,
                       tool.memory_hint, str(combined_path))
        try:
            proc = subprocess.run(argv, capture_output=True,
                                  timeout=tool.timeout)
        except subprocess.TimeoutExpired:
            return failed(ExitStatus.TIMEOUT,
                          f"preprocessor {plan.preprocessor.name} timed out")
        except OSError as exc:
            return failed(ExitStatus.NON_ZERO_EXIT,
                          f"preprocessor {plan.preprocessor.name}: {exc}")
        if proc.returncode != 0:
            tail = proc.stderr.decode("utf-8", "replace")[-500:]
            return failed(ExitStatus.NON_ZERO_EXIT,
                          f"preprocessor {plan.preprocessor.name} exited "
                          f"{proc.returncode}: {tail}")
        try:
            combined = ingest_app(combined_path)
        except AqlBenchError as exc:
            return failed(ExitStatus.CONVERSION_FAILURE,
                          f"preprocessor output rejected: {exc}")
        context = context + (combined,)
        app_paths = [str(combined_path)]

    argv = _expand(tool.run_template, app_paths, tool.memory_hint,
                   str(raw_path))
    uses_out = "%OUT%" in tool.run_template
    work_dir.mkdir(parents=True, exist_ok=True)

    with config.lock_for(tool.name):
        launched = time.monotonic()
        try:
            proc = subprocess.run(argv, capture_output=True,
                                  timeout=tool.timeout)
        except subprocess.TimeoutExpired as exc:
            if exc.stdout:
                _write_atomic(raw_path, exc.stdout)
            return failed(ExitStatus.TIMEOUT,
                          f"timed out after {tool.timeout}s")
        except OSError as exc:
            return failed(ExitStatus.NON_ZERO_EXIT, f"cannot launch: {exc}")
        wall = time.monotonic() - launched

    if proc.returncode != 0:
        tail = proc.stderr.decode("utf-8", "replace")[-500:]
        if proc.stdout:
            _write_atomic(raw_path, proc.stdout)
        return failed(ExitStatus.NON_ZERO_EXIT,
                      f"exited {proc.returncode}: {tail}")

    if uses_out:
        if not raw_path.is_file():
            return failed(ExitStatus.CONVERSION_FAILURE,
                          "tool wrote no output file")
        raw = raw_path.read_bytes()
    else:
        raw = proc.stdout
        _write_atomic(raw_path, raw)

    try:
        answer = config.registry.convert(tool.converter_id, raw,
                                         list(context), strictness,
                                         tool=tool.name)
    except AqlBenchError as exc:
        return failed(ExitStatus.CONVERSION_FAILURE, str(exc))

    auxiliary = {}
    for op in query.post_ops:
        if isinstance(op, Unify):
            aux_answer, _aux_run = execute(op.query, config, context,
                                           strictness)
            auxiliary[op.query] = aux_answer
    answer = apply_post_ops(answer, query.post_ops, auxiliary)
    answer = Answer(answer.flows,
                    Provenance(tool=tool.name, timestamp=_now(),
                               notes=answer.provenance.notes))

    _write_atomic(cache_file, serialize_answer(answer))
    run = ToolRun(tool=tool.name, exit_status=ExitStatus.SUCCESS,
                  wall_time=wall, raw_output_path=str(raw_path),
                  answer=answer)
    return answer, run
