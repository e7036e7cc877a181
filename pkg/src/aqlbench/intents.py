"""Intent to intent-filter matching.

Resolution rules (normative for this package, written out in
docs/intent-matching.md):

  * explicit intents match exactly the named component, filters ignored;
  * implicit intents must pass three tests in order:
      action    - intent action is a member of the filter's actions;
      category  - every intent category appears in the filter;
      data      - an intent without uri and mime matches only filters
                  declaring no data specs; otherwise some declared spec
                  must accept every provided piece.  A spec constraint on
                  a piece the intent does not provide rejects; a provided
                  piece the spec does not constrain is accepted.
  The first failing test is reported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional
from urllib.parse import urlsplit

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a cycle
    from aqlbench.appmodel import AppModel


class FailedAttribute(enum.Enum):
    ACTION = "action"
    CATEGORY = "category"
    DATA = "data"


def _check_mime_pattern(pattern: str) -> None:
    head, sep, tail = pattern.partition("/")
    if not sep or not head or not tail:
        raise ValueError(f"mime pattern must be type/subtype: {pattern!r}")
    for segment in (head, tail):
        if "*" in segment and segment != "*":
            raise ValueError(
                f"mime wildcard must cover a whole segment: {pattern!r}")


@dataclass(frozen=True)
class DataSpec:
    """One data constraint of a filter; at least one field is declared."""

    scheme: Optional[str] = None
    authority: Optional[str] = None
    path_pattern: Optional[str] = None
    mime_pattern: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.scheme is None and self.authority is None
                and self.path_pattern is None and self.mime_pattern is None):
            raise ValueError("data spec declares no constraint")
        if self.path_pattern is not None and self.path_pattern.count("*") > 1:
            raise ValueError(
                f"path pattern allows at most one '*': {self.path_pattern!r}")
        if self.mime_pattern is not None:
            _check_mime_pattern(self.mime_pattern)


@dataclass(frozen=True)
class DataUri:
    scheme: str
    authority: str = ""
    path: str = ""


@dataclass(frozen=True)
class Intent:
    action: Optional[str] = None
    categories: frozenset[str] = frozenset()
    data_uri: Optional[DataUri] = None
    mime_type: Optional[str] = None
    explicit_target: Optional[tuple[str, str]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "categories", frozenset(self.categories))
        if self.mime_type is not None and "/" not in self.mime_type:
            raise ValueError(f"mime type must be type/subtype: {self.mime_type!r}")


@dataclass(frozen=True)
class IntentFilter:
    actions: frozenset[str] = frozenset()
    categories: frozenset[str] = frozenset()
    data_specs: tuple[DataSpec, ...] = ()
    owner: tuple[str, str] = ("", "")

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", frozenset(self.actions))
        object.__setattr__(self, "categories", frozenset(self.categories))
        object.__setattr__(self, "data_specs", tuple(self.data_specs))
        object.__setattr__(self, "owner", tuple(self.owner))


@dataclass(frozen=True)
class MatchVerdict:
    matched: bool
    failed_attribute: Optional[FailedAttribute] = None


def _path_matches(pattern: str, path: str) -> bool:
    if "*" not in pattern:
        return pattern == path
    pre, _, post = pattern.partition("*")
    return (len(path) >= len(pre) + len(post)
            and path.startswith(pre) and path.endswith(post))


def _mime_matches(pattern: str, mime: str) -> bool:
    p_type, _, p_sub = pattern.partition("/")
    m_type, _, m_sub = mime.partition("/")
    return ((p_type == "*" or p_type == m_type)
            and (p_sub == "*" or p_sub == m_sub))


def _spec_accepts(spec: DataSpec, uri: Optional[DataUri],
                  mime: Optional[str]) -> bool:
    if spec.scheme is not None and (uri is None or uri.scheme != spec.scheme):
        return False
    if spec.authority is not None and (uri is None
                                       or uri.authority != spec.authority):
        return False
    if spec.path_pattern is not None and (
            uri is None or not _path_matches(spec.path_pattern, uri.path)):
        return False
    if spec.mime_pattern is not None and (
            mime is None or not _mime_matches(spec.mime_pattern, mime)):
        return False
    return True


def match_intent(intent: Intent, filt: IntentFilter) -> MatchVerdict:
    if intent.explicit_target is not None:
        return MatchVerdict(tuple(intent.explicit_target) == filt.owner)
    if intent.action is None or intent.action not in filt.actions:
        return MatchVerdict(False, FailedAttribute.ACTION)
    if not intent.categories <= filt.categories:
        return MatchVerdict(False, FailedAttribute.CATEGORY)
    if intent.data_uri is None and intent.mime_type is None:
        if filt.data_specs:
            return MatchVerdict(False, FailedAttribute.DATA)
        return MatchVerdict(True)
    if not any(_spec_accepts(spec, intent.data_uri, intent.mime_type)
               for spec in filt.data_specs):
        return MatchVerdict(False, FailedAttribute.DATA)
    return MatchVerdict(True)


def resolve_receivers(intent: Intent,
                      apps: Iterable["AppModel"]) -> list[tuple[str, str]]:
    """Components able to receive the intent, ordered by (app id, class)."""
    owners = {
        filt.owner
        for app in apps
        for filt in app.intent_filters
        if match_intent(intent, filt).matched
    }
    return sorted(owners)


# --- fixture table -------------------------------------------------------
#
# Line format used by the acceptance table:
#   INTENT <fields> | FILTER <fields> | EXPECT match
#   INTENT <fields> | FILTER <fields> | EXPECT nomatch:<attribute>
# Intent fields: action=A cats=a;b uri=scheme://host/path mime=t/s
#                target=app/Class
# Filter fields: actions=A;B cats=a;b owner=app/Class
#                data=scheme:http,authority:host,path:/x/*,mime:text/*
# '#' and '%' start comment lines; blank lines are skipped.

@dataclass(frozen=True)
class TableRow:
    intent: Intent
    filter: IntentFilter
    expect_matched: bool
    expect_failed: Optional[FailedAttribute]
    line_no: int


def _parse_fields(tokens: list[str], line_no: int) -> dict[str, list[str]]:
    fields: dict[str, list[str]] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"line {line_no}: bad field {token!r}")
        fields.setdefault(key, []).append(value)
    return fields


def _single(fields: dict[str, list[str]], key: str,
            line_no: int) -> Optional[str]:
    values = fields.get(key)
    if values is None:
        return None
    if len(values) > 1:
        raise ValueError(f"line {line_no}: field {key} given twice")
    return values[0]


def _split_list(value: Optional[str]) -> frozenset[str]:
    if not value:
        return frozenset()
    return frozenset(x for x in value.split(";") if x)


def _parse_owner(value: Optional[str], line_no: int) -> tuple[str, str]:
    if value is None:
        return ("", "")
    app, sep, cls = value.partition("/")
    if not sep:
        raise ValueError(f"line {line_no}: owner must be app/Class")
    return (app, cls)


def _parse_intent(tokens: list[str], line_no: int) -> Intent:
    fields = _parse_fields(tokens, line_no)
    uri_text = _single(fields, "uri", line_no)
    uri = None
    if uri_text is not None:
        parts = urlsplit(uri_text)
        uri = DataUri(parts.scheme, parts.netloc, parts.path)
    target_text = _single(fields, "target", line_no)
    target = None
    if target_text is not None:
        target = _parse_owner(target_text, line_no)
    return Intent(
        action=_single(fields, "action", line_no),
        categories=_split_list(_single(fields, "cats", line_no)),
        data_uri=uri,
        mime_type=_single(fields, "mime", line_no),
        explicit_target=target,
    )


def _parse_data_spec(value: str, line_no: int) -> DataSpec:
    kwargs: dict[str, str] = {}
    names = {"scheme": "scheme", "authority": "authority",
             "path": "path_pattern", "mime": "mime_pattern"}
    for pair in value.split(","):
        key, sep, val = pair.partition(":")
        if not sep or key not in names:
            raise ValueError(f"line {line_no}: bad data pair {pair!r}")
        kwargs[names[key]] = val
    try:
        return DataSpec(**kwargs)
    except ValueError as exc:
        raise ValueError(f"line {line_no}: {exc}") from exc


def _parse_filter(tokens: list[str], line_no: int) -> IntentFilter:
    fields = _parse_fields(tokens, line_no)
    specs = tuple(_parse_data_spec(v, line_no) for v in fields.get("data", []))
    return IntentFilter(
        actions=_split_list(_single(fields, "actions", line_no)),
        categories=_split_list(_single(fields, "cats", line_no)),
        data_specs=specs,
        owner=_parse_owner(_single(fields, "owner", line_no), line_no),
    )


def parse_match_table(text: str) -> list[TableRow]:
    rows: list[TableRow] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "%")):
            continue
        sections = [part.strip() for part in line.split("|")]
        if len(sections) != 3:
            raise ValueError(
                f"line {line_no}: expected INTENT | FILTER | EXPECT")
        intent_sec, filter_sec, expect_sec = sections
        for prefix, sec in (("INTENT", intent_sec), ("FILTER", filter_sec),
                            ("EXPECT", expect_sec)):
            if not sec.startswith(prefix):
                raise ValueError(f"line {line_no}: section must start "
                                 f"with {prefix}")
        intent = _parse_intent(intent_sec.split()[1:], line_no)
        filt = _parse_filter(filter_sec.split()[1:], line_no)
        expect_tokens = expect_sec.split()[1:]
        if len(expect_tokens) != 1:
            raise ValueError(f"line {line_no}: EXPECT takes one verdict")
        verdict = expect_tokens[0]
        if verdict == "match":
            rows.append(TableRow(intent, filt, True, None, line_no))
        elif verdict == "nomatch":
            rows.append(TableRow(intent, filt, False, None, line_no))
        elif verdict.startswith("nomatch:"):
            attr = FailedAttribute(verdict.split(":", 1)[1])
            rows.append(TableRow(intent, filt, False, attr, line_no))
        else:
            raise ValueError(f"line {line_no}: bad verdict {verdict!r}")
    return rows
