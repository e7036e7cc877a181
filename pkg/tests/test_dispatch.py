"""Dispatcher behavior: routing, execution, caching, failure records."""

import sys

import pytest

from aqlbench.appmodel import Strictness, ingest_app
from aqlbench.aql.model import Subject
from aqlbench.dispatch import (
    Config,
    ExitStatus,
    Preprocessor,
    QueryCapability,
    QueryScope,
    ToolSpec,
    cache_key,
    derive_scope,
    execute,
    load_config,
    select_tool,
)
from aqlbench.aql.parser import parse_query
from aqlbench.errors import (
    ConfigSyntaxError,
    DuplicateToolError,
    NoCapableToolError,
    UnknownConverterError,
)
from conftest import FIXTURES, TOOLS, tool_entry, write_config

APPS = FIXTURES / "apps"


def make_tool(name="flowfinder", script="flow_tool.py", template=None,
              subject=Subject.FLOWS, scope=QueryScope.INTRA_APP,
              converter="sink-xml", version="1.0", priority=0,
              timeout=30.0, extra_scopes=()):
    if template is None:
        template = f"{sys.executable} {TOOLS / script} %APP%"
    caps = {QueryCapability(subject, scope)}
    caps |= {QueryCapability(subject, s) for s in extra_scopes}
    return ToolSpec(name=name, version=version, run_template=template,
                    capabilities=frozenset(caps), converter_id=converter,
                    timeout=timeout, priority=priority)


def make_config(tmp_path, tools, preprocessors=()):
    return Config(tools=tuple(tools), preprocessors=tuple(preprocessors),
                  cache_dir=tmp_path / "cache")


def combiner():
    return Preprocessor(
        name="combiner",
        run_template=f"{sys.executable} -m aqlbench app combine %APP% -o %OUT%")


@pytest.fixture
def directleak():
    return ingest_app(APPS / "directleak1.xml")


@pytest.fixture
def locationleak():
    return ingest_app(APPS / "locationleak1.xml")


def in_query(*paths, tail=""):
    apps = " -> ".join(f"App('{p}')" for p in paths)
    return parse_query(f"Flows IN {apps} {tail}?".replace("  ", " "))


# --- configuration loading ------------------------------------------------

def test_sample_config_loads():
    config = load_config(FIXTURES / "sample-config.xml")
    assert [t.name for t in config.tools] == ["flowfinder", "tuplefinder"]
    assert config.tools[0].priority == 10
    assert [p.name for p in config.preprocessors] == ["combiner"]
    assert config.cache_dir.is_absolute()


@pytest.mark.parametrize("body", [
    '<tool version="1"><execute>x %APP%</execute></tool>',
    '<tool name="t"><capabilities>'
    '<capability subject="Flows" scope="IntraApp"/></capabilities>'
    '<converter id="sink-xml"/></tool>',
    '<tool name="t"><execute>x %APP%</execute>'
    '<converter id="sink-xml"/></tool>',
    '<tool name="t"><execute>x %APP%</execute><capabilities>'
    '<capability subject="Leaks" scope="IntraApp"/></capabilities>'
    '<converter id="sink-xml"/></tool>',
    '<tool name="t"><execute>x %APP%</execute><capabilities>'
    '<capability subject="Flows" scope="Everywhere"/></capabilities>'
    '<converter id="sink-xml"/></tool>',
    '<tool name="t"><execute>x %APP%</execute><capabilities>'
    '<capability subject="Flows" scope="IntraApp"/></capabilities></tool>',
    '<tool name="t" priority="high"><execute>x %APP%</execute>'
    '<capabilities><capability subject="Flows" scope="IntraApp"/>'
    '</capabilities><converter id="sink-xml"/></tool>',
    '<tool name="t"><execute>x %APP%</execute><capabilities>'
    '<capability subject="Flows" scope="IntraApp"/></capabilities>'
    '<converter id="sink-xml"/><timeout seconds="soon"/></tool>',
])
def test_config_syntax_errors(tmp_path, body):
    path = tmp_path / "config.xml"
    path.write_text(f"<config><tools>{body}</tools></config>")
    with pytest.raises(ConfigSyntaxError):
        load_config(path)


def test_config_rejects_non_xml(tmp_path):
    path = tmp_path / "config.xml"
    path.write_text("not xml at all")
    with pytest.raises(ConfigSyntaxError):
        load_config(path)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigSyntaxError):
        load_config(tmp_path / "nope.xml")


def test_duplicate_tool_names_rejected(tmp_path):
    with pytest.raises(DuplicateToolError):
        make_config(tmp_path, [make_tool(name="same"), make_tool(name="same")])


def test_unknown_converter_rejected_at_load(tmp_path):
    with pytest.raises(UnknownConverterError):
        make_config(tmp_path, [make_tool(converter="martian")])


def test_template_must_mention_app():
    with pytest.raises(ConfigSyntaxError):
        make_tool(template=f"{sys.executable} tool.py")


def test_timeout_must_be_positive():
    with pytest.raises(ConfigSyntaxError):
        make_tool(timeout=0)


def test_preprocessor_template_needs_both_slots():
    with pytest.raises(ConfigSyntaxError):
        Preprocessor(name="p", run_template="combine %APP%")


def test_relative_cache_dir_resolves_next_to_config(tmp_path):
    path = tmp_path / "config.xml"
    path.write_text(
        f"<config><tools>{tool_entry('t', 'flow_tool.py')}</tools>"
        f'<cache dir="store"/></config>')
    config = load_config(path)
    assert config.cache_dir == tmp_path / "store"


# --- routing --------------------------------------------------------------

def test_scope_follows_app_count():
    assert derive_scope(in_query("a.xml")) is QueryScope.INTRA_APP
    two = parse_query("Flows FROM App('a.xml') TO App('b.xml') ?")
    assert derive_scope(two) is QueryScope.INTER_APP


def test_highest_priority_tool_wins(tmp_path):
    config = make_config(tmp_path, [
        make_tool(name="low", priority=1),
        make_tool(name="high", priority=9),
    ])
    assert select_tool(in_query("a.xml"), config).tool.name == "high"


def test_priority_tie_keeps_registry_order(tmp_path):
    config = make_config(tmp_path, [
        make_tool(name="first", priority=3),
        make_tool(name="second", priority=3),
    ])
    assert select_tool(in_query("a.xml"), config).tool.name == "first"


def test_interapp_tool_selected_without_preprocessor(tmp_path):
    config = make_config(
        tmp_path,
        [make_tool(name="wide", extra_scopes=(QueryScope.INTER_APP,))],
        preprocessors=[combiner()])
    plan = select_tool(
        parse_query("Flows FROM App('a') TO App('b') ?"), config)
    assert plan.tool.name == "wide"
    assert plan.preprocessor is None


def test_interapp_falls_back_to_combiner(tmp_path):
    config = make_config(tmp_path, [make_tool()],
                         preprocessors=[combiner()])
    plan = select_tool(
        parse_query("Flows FROM App('a') TO App('b') ?"), config)
    assert plan.preprocessor is not None
    assert plan.tool.name == "flowfinder"
    assert plan.scope is QueryScope.INTER_APP


def test_no_capable_tool_raises(tmp_path):
    config = make_config(tmp_path, [make_tool()])
    with pytest.raises(NoCapableToolError) as info:
        select_tool(parse_query("Flows FROM App('a') TO App('b') ?"), config)
    assert "Flows" in str(info.value)
    assert "InterApp" in str(info.value)


def test_no_capable_tool_for_subject(tmp_path):
    config = make_config(tmp_path, [make_tool()])
    with pytest.raises(NoCapableToolError):
        select_tool(parse_query("Intents IN App('a') ?"), config)


# --- cache keys -----------------------------------------------------------

def test_cache_key_shape_and_stability(tmp_path, directleak):
    tool = make_tool()
    query = in_query(str(APPS / "directleak1.xml"))
    key = cache_key(query, tool, (directleak,))
    assert len(key) == 64 and all(c in "0123456789abcdef" for c in key)
    assert key == cache_key(query, tool, (directleak,))


def test_cache_key_varies_with_tool_identity(directleak):
    query = in_query(str(APPS / "directleak1.xml"))
    keys = {
        cache_key(query, make_tool(), (directleak,)),
        cache_key(query, make_tool(name="other"), (directleak,)),
        cache_key(query, make_tool(version="2.0"), (directleak,)),
    }
    assert len(keys) == 3


def test_cache_key_varies_with_query(directleak):
    tool = make_tool()
    path = str(APPS / "directleak1.xml")
    with_filter = parse_query(
        f"Flows IN App('{path}') FILTER Statement('x()') -> App('{path}') ?")
    assert cache_key(in_query(path), tool, (directleak,)) \
        != cache_key(with_filter, tool, (directleak,))


def test_cache_key_varies_with_app_content(tmp_path, directleak):
    original = (APPS / "directleak1.xml").read_text()
    changed_path = tmp_path / "directleak1.xml"
    changed_path.write_text(original.replace('"phone"', '"wifi"'))
    changed = ingest_app(changed_path)
    tool = make_tool()
    assert cache_key(in_query(str(APPS / "directleak1.xml")), tool,
                     (directleak,)) \
        != cache_key(in_query(str(changed_path)), tool, (changed,))


def test_cache_key_hashes_on_disk_files_without_context():
    # no model in context: the digest comes straight from the file bytes
    tool = make_tool()
    path = str(APPS / "directleak1.xml")
    a = cache_key(in_query(path), tool, ())
    b = cache_key(in_query(path), tool, ())
    assert a == b


# --- execution ------------------------------------------------------------

def test_execute_success_records_run(tmp_path, directleak):
    config = make_config(tmp_path, [make_tool()])
    answer, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                          (directleak,))
    assert run.exit_status is ExitStatus.SUCCESS
    assert not run.cache_hit
    assert run.wall_time > 0
    assert run.raw_output_path is not None
    assert len(answer.flows) == 1
    flow = next(iter(answer.flows))
    assert flow.source.statement == "deviceId = telephonyManager.getDeviceId()"


def test_execute_honors_out_slot(tmp_path, directleak):
    template = f"{sys.executable} {TOOLS / 'flow_tool.py'} %APP% --out %OUT%"
    config = make_config(tmp_path, [make_tool(template=template)])
    answer, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                          (directleak,))
    assert run.exit_status is ExitStatus.SUCCESS
    assert len(answer.flows) == 1


def test_cache_hit_skips_launch(tmp_path, directleak, monkeypatch):
    log = tmp_path / "launches.log"
    monkeypatch.setenv("TOOL_LAUNCH_LOG", str(log))
    config = make_config(tmp_path, [make_tool()])
    query = in_query(str(APPS / "directleak1.xml"))

    first, run1 = execute(query, config, (directleak,))
    assert not run1.cache_hit
    assert len(log.read_text().splitlines()) == 1

    second, run2 = execute(query, config, (directleak,))
    assert run2.cache_hit
    assert run2.exit_status is ExitStatus.SUCCESS
    assert run2.wall_time == 0.0
    assert len(log.read_text().splitlines()) == 1
    assert second == first


def test_failing_tool_reports_exit_code(tmp_path, directleak, monkeypatch):
    log = tmp_path / "launches.log"
    monkeypatch.setenv("TOOL_LAUNCH_LOG", str(log))
    config = make_config(tmp_path,
                         [make_tool(name="broken", script="failing_tool.py")])
    query = in_query(str(APPS / "directleak1.xml"))
    answer, run = execute(query, config, (directleak,))
    assert run.exit_status is ExitStatus.NON_ZERO_EXIT
    assert "exited 3" in run.detail
    assert run.answer is None
    assert answer.flows == frozenset()

    # failures are never cached: a retry launches again
    _, run2 = execute(query, config, (directleak,))
    assert not run2.cache_hit
    assert len(log.read_text().splitlines()) == 2


def test_timeout_is_cut_off_within_slack(tmp_path, directleak, monkeypatch):
    monkeypatch.setenv("SLEEP_TOOL_SECONDS", "30")
    config = make_config(
        tmp_path,
        [make_tool(name="sleeper", script="sleep_tool.py", timeout=0.5)])
    answer, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                          (directleak,))
    assert run.exit_status is ExitStatus.TIMEOUT
    assert run.answer is None
    assert answer.flows == frozenset()
    assert 0.5 <= run.wall_time <= 0.5 + config.timeout_slack


def test_unconvertible_output_is_a_conversion_failure(tmp_path, directleak):
    config = make_config(
        tmp_path, [make_tool(name="noisy", script="garbage_tool.py")])
    answer, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                          (directleak,))
    assert run.exit_status is ExitStatus.CONVERSION_FAILURE
    assert run.raw_output_path is not None
    assert answer.flows == frozenset()


def test_missing_out_file_is_a_conversion_failure(tmp_path, directleak):
    template = f"{sys.executable} -c pass %APP% --out %OUT%"
    config = make_config(tmp_path, [make_tool(template=template)])
    _, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                     (directleak,))
    assert run.exit_status is ExitStatus.CONVERSION_FAILURE
    assert "no output file" in run.detail


def test_empty_report_still_succeeds(tmp_path, directleak):
    config = make_config(tmp_path,
                         [make_tool(name="quiet", script="empty_tool.py")])
    answer, run = execute(in_query(str(APPS / "directleak1.xml")), config,
                          (directleak,))
    assert run.exit_status is ExitStatus.SUCCESS
    assert answer.flows == frozenset()


def test_preprocessor_route_combines_apps(tmp_path):
    sender = ingest_app(APPS / "intentsender.xml")
    receiver = ingest_app(APPS / "intentreceiver.xml")
    config = make_config(tmp_path, [make_tool()],
                         preprocessors=[combiner()])
    query = parse_query(
        f"Flows FROM App('{APPS / 'intentsender.xml'}') "
        f"TO App('{APPS / 'intentreceiver.xml'}') ?")
    answer, run = execute(query, config, (sender, receiver))
    assert run.exit_status is ExitStatus.SUCCESS
    # answers come back in combined-app coordinates
    apps = {f.source.app.path for f in answer.flows}
    assert apps == {"intentsender+intentreceiver.apk"}
    assert len(answer.flows) == 2


def test_preprocessor_failure_is_reported(tmp_path, directleak):
    bad = Preprocessor(
        name="badcombine",
        run_template=f"{sys.executable} {TOOLS / 'failing_tool.py'} "
                     f"%APP% --out %OUT%")
    config = make_config(tmp_path, [make_tool()], preprocessors=[bad])
    query = parse_query("Flows FROM App('a.xml') TO App('b.xml') ?")
    answer, run = execute(query, config, ())
    assert run.exit_status is ExitStatus.NON_ZERO_EXIT
    assert "badcombine" in run.detail
    assert answer.flows == frozenset()


def test_unify_post_op_runs_subquery(tmp_path, directleak, locationleak):
    config = make_config(tmp_path, [make_tool()])
    dl = APPS / "directleak1.xml"
    ll = APPS / "locationleak1.xml"
    query = parse_query(
        f"Flows IN App('{dl}') UNIFY [ Flows IN App('{ll}') ? ] ?")
    answer, run = execute(query, config, (directleak, locationleak))
    assert run.exit_status is ExitStatus.SUCCESS
    apps = {f.source.app.path for f in answer.flows}
    assert apps == {"DirectLeak1.apk", "LocationLeak1.apk"}
    assert len(answer.flows) == 1 + 6


def test_filter_post_op_narrows_answer(tmp_path, directleak):
    config = make_config(tmp_path, [make_tool()])
    dl = APPS / "directleak1.xml"
    # answers are written in apk coordinates, so the pattern names the apk
    kept = parse_query(
        f"Flows IN App('{dl}') "
        f"FILTER Statement('getDeviceId()') -> App('DirectLeak1.apk') ?")
    answer, _ = execute(kept, config, (directleak,))
    assert len(answer.flows) == 1
    dropped = parse_query(
        f"Flows IN App('{dl}') "
        f"FILTER Statement('neverCalled()') -> App('DirectLeak1.apk') ?")
    answer, _ = execute(dropped, config, (directleak,))
    assert answer.flows == frozenset()


def test_strictness_override_reaches_converter(tmp_path, locationleak):
    # tuple_tool reports bare method names; exact and name-only both
    # resolve, but name-only fans out nothing extra here
    template = f"{sys.executable} {TOOLS / 'tuple_tool.py'} %APP%"
    config = make_config(
        tmp_path,
        [make_tool(name="tuples", template=template,
                   converter="flow-tuples")])
    query = in_query(str(APPS / "locationleak1.xml"))
    exact, _ = execute(query, config, (locationleak,),
                       strictness=Strictness.EXACT)
    loose, _ = execute(query, config, (locationleak,),
                       strictness=Strictness.NAME_ONLY)
    assert exact.flows <= loose.flows
