"""Raw output conversion: format parsers and the endpoint resolver."""

import pytest

from aqlbench.appmodel import Strictness, ingest_app
from aqlbench.aql.xmlio import deserialize_answer, serialize_answer
from aqlbench.converters import (
    ConverterRegistry,
    ConverterSpec,
    RawEndpoint,
    RawFlow,
    default_registry,
    parse_flow_tuples,
    parse_sink_xml,
    resolve_endpoint,
    resolve_flows,
)
from aqlbench.errors import (
    DuplicateConverterIdError,
    UnknownConverterError,
    UnparsableOutputError,
    UnresolvableEndpointError,
)
from conftest import FIXTURES


@pytest.fixture()
def directleak():
    return ingest_app(FIXTURES / "apps" / "directleak1.xml")


@pytest.fixture()
def locationleak():
    return ingest_app(FIXTURES / "apps" / "locationleak1.xml")


# --- both reference formats land on the frozen answer ---------------------

def test_sink_xml_matches_frozen_answer(directleak):
    raw = (FIXTURES / "raw" / "directleak1.sink.xml").read_bytes()
    answer = default_registry().convert("sink-xml", raw, [directleak])
    frozen = (FIXTURES / "raw" / "directleak1.answer.xml").read_bytes()
    assert serialize_answer(answer) == frozen


def test_flow_tuples_matches_frozen_answer(directleak):
    raw = (FIXTURES / "raw" / "directleak1.tuples.txt").read_bytes()
    answer = default_registry().convert("flow-tuples", raw, [directleak])
    frozen = (FIXTURES / "raw" / "directleak1.answer.xml").read_bytes()
    assert serialize_answer(answer) == frozen


def test_formats_agree_byte_for_byte(directleak):
    registry = default_registry()
    a = registry.convert(
        "sink-xml",
        (FIXTURES / "raw" / "directleak1.sink.xml").read_bytes(),
        [directleak])
    b = registry.convert(
        "flow-tuples",
        (FIXTURES / "raw" / "directleak1.tuples.txt").read_bytes(),
        [directleak])
    assert serialize_answer(a) == serialize_answer(b)
    assert a == b


def test_frozen_answer_round_trips():
    frozen = (FIXTURES / "raw" / "directleak1.answer.xml").read_bytes()
    assert serialize_answer(deserialize_answer(frozen)) == frozen


# --- sink-xml parser ------------------------------------------------------

def test_sink_xml_groups_sources_under_sink():
    raw = (b"<results>"
           b"<sink statement='s()'>"
           b"<source statement='a()'/><source statement='b()'/>"
           b"</sink>"
           b"<sink statement='t()'><source statement='a()'/></sink>"
           b"</results>")
    flows = parse_sink_xml(raw)
    assert [(f.source.statement, f.sink.statement) for f in flows] \
        == [("a()", "s()"), ("b()", "s()"), ("a()", "t()")]


def test_sink_xml_rejects_malformed_bytes():
    with pytest.raises(UnparsableOutputError) as info:
        parse_sink_xml(b"<results>\n  <sink oops\n</results>")
    assert info.value.offset > 0


def test_sink_xml_rejects_wrong_root():
    with pytest.raises(UnparsableOutputError) as info:
        parse_sink_xml(b"<flows/>")
    assert info.value.offset == 0


def test_sink_xml_empty_results_is_no_flows():
    assert parse_sink_xml(b"<results/>") == []


# --- flow-tuples parser ---------------------------------------------------

def test_flow_tuples_parses_via_hops():
    raw = b"flow((a(); m; C; app), (hop(); m; C; app), (b(); m; C; app))\n"
    flows = parse_flow_tuples(raw)
    assert len(flows) == 1
    assert flows[0].source.statement == "a()"
    assert flows[0].sink.statement == "b()"
    assert [ep.statement for ep in flows[0].via] == ["hop()"]


def test_flow_tuples_short_tuple_pads_missing_fields():
    flows = parse_flow_tuples(b"flow((a()), (b(); m))\n")
    assert flows[0].source == RawEndpoint(statement="a()")
    assert flows[0].sink == RawEndpoint(statement="b()", method="m")


def test_flow_tuples_skips_comments_and_blanks():
    raw = b"% header\n\nflow((a()), (b()))\n"
    assert len(parse_flow_tuples(raw)) == 1


def test_flow_tuples_keeps_commas_inside_statement_parens():
    raw = b'flow((f(x, y, "a,b"); m; C; app), (g(); m; C; app))\n'
    flows = parse_flow_tuples(raw)
    assert flows[0].source.statement == 'f(x, y, "a,b")'


@pytest.mark.parametrize("raw,expected_offset", [
    (b"nonsense\n", 0),
    (b"flow((a()))\n", 0),
    (b"flow(a(), b())\n", 0),
    (b"flow((a;b;c;d;e), (x))\n", 0),
    (b"% fine\nflow((a()), (b()))\nbroken line\n", 26),
])
def test_flow_tuples_errors_point_at_the_line(raw, expected_offset):
    with pytest.raises(UnparsableOutputError) as info:
        parse_flow_tuples(raw)
    assert info.value.offset == expected_offset


def test_flow_tuples_rejects_bad_utf8():
    with pytest.raises(UnparsableOutputError) as info:
        parse_flow_tuples(b"flow\xff\xfe")
    assert info.value.offset == 4


# --- endpoint resolution --------------------------------------------------

def test_exact_refuses_ambiguous_endpoint(locationleak):
    # two sendTextMessage calls in onResume; statement text alone cannot
    # pick one
    ep = RawEndpoint(statement="sendTextMessage(a, b, c, d, e)")
    with pytest.raises(UnresolvableEndpointError) as info:
        resolve_endpoint(ep, [locationleak], Strictness.EXACT, [])
    assert "2 statements" in str(info.value)


def test_exact_literal_text_settles_sibling_tie(locationleak):
    lat = 'sms.sendTextMessage("+49 1234", null, "Lat: " + latitude, ' \
          "null, null)"
    refs = resolve_endpoint(RawEndpoint(statement=lat), [locationleak],
                            Strictness.EXACT, [])
    assert len(refs) == 1
    assert refs[0].statement == lat
    # the same text in name-only mode still fans out over both siblings
    loose = resolve_endpoint(RawEndpoint(statement=lat), [locationleak],
                             Strictness.NAME_ONLY, [])
    assert len(loose) == 2


def test_name_only_fans_out_and_notes(locationleak):
    ep = RawEndpoint(statement="sendTextMessage(...)")
    notes = []
    refs = resolve_endpoint(ep, [locationleak], Strictness.NAME_ONLY, notes)
    assert len(refs) == 2
    assert any("ambiguous" in n for n in notes)


def test_exact_subset_of_name_only(locationleak, directleak):
    context = [locationleak, directleak]
    raw = RawFlow(RawEndpoint(statement="getDeviceId()"),
                  RawEndpoint(statement='sms.sendTextMessage("+49 1234", '
                                        "null, deviceId, null, null)"))
    exact = resolve_flows([raw], context, Strictness.EXACT)
    loose = resolve_flows([raw], context, Strictness.NAME_ONLY)
    assert exact.flows <= loose.flows


def test_unresolvable_when_nothing_matches(directleak):
    ep = RawEndpoint(statement="unknownCall()")
    with pytest.raises(UnresolvableEndpointError):
        resolve_endpoint(ep, [directleak], Strictness.EXACT, [])


def test_endpoint_without_statement_is_unresolvable(directleak):
    with pytest.raises(UnresolvableEndpointError):
        resolve_endpoint(RawEndpoint(method="void onCreate(android.os.Bundle)"),
                         [directleak], Strictness.EXACT, [])


def test_app_field_narrows_context(directleak, locationleak):
    ep = RawEndpoint(statement="getDeviceId()", app="DirectLeak1.apk")
    refs = resolve_endpoint(ep, [directleak, locationleak],
                            Strictness.EXACT, [])
    assert len(refs) == 1
    assert refs[0].app.path == "DirectLeak1.apk"


def test_wrong_app_field_resolves_nothing(directleak):
    ep = RawEndpoint(statement="getDeviceId()", app="Other.apk")
    with pytest.raises(UnresolvableEndpointError):
        resolve_endpoint(ep, [directleak], Strictness.EXACT, [])


def test_bare_method_name_matches_signature(directleak):
    ep = RawEndpoint(statement="getDeviceId()", method="onCreate")
    refs = resolve_endpoint(ep, [directleak], Strictness.EXACT, [])
    assert refs[0].method == "void onCreate(android.os.Bundle)"


def test_class_suffix_matches(directleak):
    ep = RawEndpoint(statement="getDeviceId()", classname="MainActivity")
    refs = resolve_endpoint(ep, [directleak], Strictness.EXACT, [])
    assert refs[0].classname == "de.ecspride.MainActivity"


def test_arity_disambiguates_in_exact_mode(directleak):
    # getDefault() in the model has arity 0; a two-argument call text of
    # the same name must not land on it
    ep = RawEndpoint(statement="getDefault(a, b)")
    with pytest.raises(UnresolvableEndpointError):
        resolve_endpoint(ep, [directleak], Strictness.EXACT, [])
    refs = resolve_endpoint(ep, [directleak], Strictness.NAME_ONLY, [])
    assert len(refs) == 1


def test_via_hops_survive_resolution(directleak):
    raw = RawFlow(
        RawEndpoint(statement="deviceId = telephonyManager.getDeviceId()"),
        RawEndpoint(statement='sms.sendTextMessage("+49 1234", null, '
                              "deviceId, null, null)"),
        via=(RawEndpoint(statement="scratch = transform(deviceId)"),),
    )
    answer = resolve_flows([raw], [directleak], Strictness.EXACT)
    flow = next(iter(answer.flows))
    assert len(flow.via) == 1
    # unmatched hop text is kept verbatim
    assert flow.via[0].statement == "scratch = transform(deviceId)"


def test_provenance_carries_tool_name(directleak):
    raw = RawFlow(RawEndpoint(statement="getDeviceId()"),
                  RawEndpoint(statement="getDefault()"))
    answer = resolve_flows([raw], [directleak], Strictness.EXACT,
                           tool="sometool")
    assert answer.provenance.tool == "sometool"


# --- registry -------------------------------------------------------------

def test_registry_lists_builtins():
    assert default_registry().ids() == ["flow-tuples", "sink-xml"]


def test_registry_rejects_duplicate_ids():
    registry = ConverterRegistry()
    registry.register(ConverterSpec("fmt"), lambda raw: [])
    with pytest.raises(DuplicateConverterIdError):
        registry.register(ConverterSpec("fmt"), lambda raw: [])


def test_registry_unknown_converter():
    with pytest.raises(UnknownConverterError):
        default_registry().convert("nope", b"", [])


def test_registry_spec_default_strictness(directleak):
    registry = ConverterRegistry()
    registry.register(
        ConverterSpec("loose", strictness=Strictness.NAME_ONLY),
        parse_flow_tuples)
    raw = b"flow((sendTextMessage(...)), (getDefault()))\n"
    # spec default kicks in when no override is passed
    answer = registry.convert("loose", raw, [directleak])
    assert len(answer.flows) == 1
    with pytest.raises(UnresolvableEndpointError):
        registry.convert("loose", raw, [directleak],
                         strictness=Strictness.EXACT)
