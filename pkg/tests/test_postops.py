"""FILTER/UNIFY algebra and the pattern matching behind FILTER."""

import pytest

from aqlbench.aql.model import (
    Answer,
    AppIdentifier,
    Filter,
    Flow,
    Reference,
    Unify,
    reference_matches,
)
from aqlbench.aql.ops import apply_post_ops
from aqlbench.aql.parser import parse_query
from aqlbench.errors import MissingAuxiliaryAnswerError
from aqlbench.hashing import hash_pair


def ref(stmt, app="A.apk", classname=None, method=None, hashes=()):
    return Reference(app=AppIdentifier(app, hashes), classname=classname,
                     method=method, statement=stmt)


def flow(src, dst, **kw):
    return Flow(ref(src, **kw), ref(dst, **kw))


CONCRETE = Reference(
    app=AppIdentifier("DirectLeak1.apk", hash_pair(b"apk bytes")),
    classname="de.ecspride.MainActivity",
    method="void onCreate(android.os.Bundle)",
    statement="deviceId = telephonyManager.getDeviceId()",
)


# --- reference_matches ----------------------------------------------------

def test_wildcard_app_matches_anything():
    assert reference_matches(ref("getDeviceId()", app="*"), CONCRETE)


def test_app_basename_tolerance():
    pattern = ref("getDeviceId()", app="/downloads/DirectLeak1.apk")
    assert reference_matches(pattern, CONCRETE)
    assert not reference_matches(ref("getDeviceId()", app="Other.apk"),
                                 CONCRETE)


def test_pattern_hashes_must_be_on_candidate():
    good = Reference(app=AppIdentifier("*", hash_pair(b"apk bytes")),
                     statement="getDeviceId()")
    bad = Reference(app=AppIdentifier("*", hash_pair(b"different")),
                    statement="getDeviceId()")
    assert reference_matches(good, CONCRETE)
    assert not reference_matches(bad, CONCRETE)


def test_class_suffix_tolerance():
    assert reference_matches(
        ref("getDeviceId()", app="*", classname="MainActivity"), CONCRETE)
    assert not reference_matches(
        ref("getDeviceId()", app="*", classname="Activity"), CONCRETE)


def test_method_name_tolerance():
    for spelling in ("onCreate", "onCreate(...)",
                     "onCreate(android.os.Bundle)",
                     "void onCreate(android.os.Bundle)"):
        assert reference_matches(
            ref("getDeviceId()", app="*", method=spelling), CONCRETE), spelling
    assert not reference_matches(
        ref("getDeviceId()", app="*", method="onPause"), CONCRETE)


def test_statement_callee_and_arity_tolerance():
    assert reference_matches(ref("getDeviceId()", app="*"), CONCRETE)
    # same callee, wrong arity
    assert not reference_matches(ref("getDeviceId(1, 2)", app="*"), CONCRETE)
    assert not reference_matches(ref("getOtherId()", app="*"), CONCRETE)


def test_constrained_part_requires_a_value():
    bare = Reference(app=AppIdentifier("*"),
                     statement="getDeviceId()")
    pattern = ref("getDeviceId()", app="*", classname="MainActivity")
    assert not reference_matches(pattern, bare)


def test_none_parts_are_unconstrained():
    assert reference_matches(Reference(app=AppIdentifier("*")), CONCRETE)


# --- FILTER ---------------------------------------------------------------

def test_filter_keeps_flows_touching_pattern():
    flows = frozenset({
        flow("getDeviceId()", "send(x)"),
        flow("getLatitude()", "send(x)"),
    })
    out = apply_post_ops(Answer(flows),
                         [Filter(ref("getDeviceId()", app="*"))])
    assert {f.source.statement for f in out.flows} == {"getDeviceId()"}


def test_filter_matches_sink_side_too():
    flows = frozenset({flow("a()", "send(x)"), flow("b()", "log(x)")})
    out = apply_post_ops(Answer(flows), [Filter(ref("send(y)", app="*"))])
    assert {f.sink.statement for f in out.flows} == {"send(x)"}


def test_filter_can_empty_an_answer():
    flows = frozenset({flow("a()", "b()")})
    out = apply_post_ops(Answer(flows), [Filter(ref("nothing()", app="*"))])
    assert out.flows == frozenset()


def test_filters_fold_left_to_right():
    flows = frozenset({
        flow("getDeviceId()", "send(x)"),
        flow("getDeviceId()", "log(x)"),
        flow("getLatitude()", "send(x)"),
    })
    out = apply_post_ops(Answer(flows), [
        Filter(ref("getDeviceId()", app="*")),
        Filter(ref("send(x)", app="*")),
    ])
    assert len(out.flows) == 1


# --- UNIFY ----------------------------------------------------------------

def test_unify_unions_auxiliary_answer():
    sub = parse_query("Flows IN App('y') ?")
    base = Answer(frozenset({flow("a()", "b()")}))
    aux = Answer(frozenset({flow("c()", "d()")}))
    out = apply_post_ops(base, [Unify(sub)], {sub: aux})
    assert len(out.flows) == 2


def test_unify_without_auxiliary_raises():
    sub = parse_query("Flows IN App('y') ?")
    with pytest.raises(MissingAuxiliaryAnswerError):
        apply_post_ops(Answer(frozenset()), [Unify(sub)], {})


def test_unify_then_filter_applies_in_order():
    sub = parse_query("Flows IN App('y') ?")
    base = Answer(frozenset({flow("a()", "b()")}))
    aux = Answer(frozenset({flow("c()", "d()")}))
    out = apply_post_ops(base, [Unify(sub), Filter(ref("c()", app="*"))],
                         {sub: aux})
    assert {f.source.statement for f in out.flows} == {"c()"}


# --- target apps vs all mentioned apps ------------------------------------

def test_target_apps_exclude_post_op_apps():
    query = parse_query(
        "Flows IN App('x') FILTER App('y') UNIFY [ Flows IN App('z') ? ] ?")
    assert query.target_app_paths() == ("x",)
    assert query.app_paths() == ("x", "y", "z")


def test_target_apps_from_to_deduplicates():
    query = parse_query(
        "Flows FROM Statement('a()') -> App('x') "
        "TO Statement('b()') -> App('x') ?")
    assert query.target_app_paths() == ("x",)
