"""Query text parser.

Hand-rolled recursive descent over a small token stream.  Errors carry
line, column, byte offset and the set of token kinds that would have been
accepted, so callers can point at the exact spot.
"""

from __future__ import annotations

from dataclasses import dataclass

from aqlbench.aql.model import (
    AppIdentifier,
    Filter,
    FromToMode,
    InMode,
    PostOp,
    Query,
    Reference,
    Subject,
    Unify,
)
from aqlbench.errors import QuerySyntaxError

_SUBJECTS = {s.value: s for s in Subject}
_PART_ORDER = ("Statement", "Method", "Class", "App")


@dataclass(frozen=True)
class _Token:
    kind: str       # WORD STRING ARROW LPAREN RPAREN LBRACKET RBRACKET QMARK EOF
    text: str
    line: int
    column: int
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(message: str, at_line: int, at_col: int, at_off: int) -> QuerySyntaxError:
        return QuerySyntaxError(message, at_line, at_col, at_off)

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            if c == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1
            continue
        start_line, start_col, start_off = line, col, i
        if c == "'":
            i += 1
            col += 1
            value: list[str] = []
            while True:
                if i >= n:
                    raise err("unterminated string", start_line, start_col,
                              start_off)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in ("'", "\\"):
                        raise err("invalid escape sequence", line, col, i)
                    value.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                if c == "'":
                    i += 1
                    col += 1
                    break
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                value.append(c)
                i += 1
            tokens.append(_Token("STRING", "".join(value), start_line,
                                 start_col, start_off))
            continue
        if c == "-" and i + 1 < n and text[i + 1] == ">":
            tokens.append(_Token("ARROW", "->", line, col, i))
            i += 2
            col += 2
            continue
        single = {"(": "LPAREN", ")": "RPAREN", "[": "LBRACKET",
                  "]": "RBRACKET", "?": "QMARK"}.get(c)
        if single:
            tokens.append(_Token(single, c, line, col, i))
            i += 1
            col += 1
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(_Token("WORD", word, line, col, i))
            col += j - i
            i = j
            continue
        raise err(f"unexpected character {c!r}", line, col, i)
    tokens.append(_Token("EOF", "", line, col, i))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _advance(self) -> _Token:
        tok = self._tokens[self._pos]
        if tok.kind != "EOF":
            self._pos += 1
        return tok

    def _fail(self, expected: tuple[str, ...]):
        tok = self._peek()
        what = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise QuerySyntaxError(f"unexpected {what}", tok.line, tok.column,
                               tok.offset, expected)

    def _expect(self, kind: str, expected_desc: str) -> _Token:
        if self._peek().kind != kind:
            self._fail((expected_desc,))
        return self._advance()

    def _expect_word(self, word: str) -> _Token:
        tok = self._peek()
        if tok.kind != "WORD" or tok.text != word:
            self._fail((f"'{word}'",))
        return self._advance()

    def parse_query(self) -> Query:
        tok = self._peek()
        if tok.kind != "WORD" or tok.text not in _SUBJECTS:
            self._fail(tuple(f"'{name}'" for name in _SUBJECTS))
        subject = _SUBJECTS[self._advance().text]

        tok = self._peek()
        if tok.kind == "WORD" and tok.text == "IN":
            self._advance()
            mode: InMode | FromToMode = InMode(self.parse_reference())
        elif tok.kind == "WORD" and tok.text == "FROM":
            self._advance()
            source = self.parse_reference()
            self._expect_word("TO")
            mode = FromToMode(source, self.parse_reference())
        else:
            self._fail(("'IN'", "'FROM'"))

        post_ops: list[PostOp] = []
        while True:
            tok = self._peek()
            if tok.kind == "WORD" and tok.text == "FILTER":
                self._advance()
                post_ops.append(Filter(self.parse_reference()))
            elif tok.kind == "WORD" and tok.text == "UNIFY":
                self._advance()
                self._expect("LBRACKET", "'['")
                inner = self.parse_query()
                self._expect("RBRACKET", "']'")
                post_ops.append(Unify(inner))
            elif tok.kind == "QMARK":
                self._advance()
                break
            else:
                self._fail(("'FILTER'", "'UNIFY'", "'?'"))
        return Query(subject, mode, tuple(post_ops))

    def parse_reference(self) -> Reference:
        parts: dict[str, str] = {}
        next_allowed = 0
        while True:
            tok = self._peek()
            allowed = _PART_ORDER[next_allowed:]
            if tok.kind != "WORD" or tok.text not in allowed:
                self._fail(tuple(f"'{name}'" for name in allowed))
            name = self._advance().text
            self._expect("LPAREN", "'('")
            value = self._expect("STRING", "string").text
            self._expect("RPAREN", "')'")
            parts[name] = value
            if name == "App":
                break
            next_allowed = _PART_ORDER.index(name) + 1
            self._expect("ARROW", "'->'")
        return Reference(
            app=AppIdentifier(parts["App"]),
            classname=parts.get("Class"),
            method=parts.get("Method"),
            statement=parts.get("Statement"),
        )


def parse_query(text: str) -> Query:
    parser = _Parser(_tokenize(text))
    query = parser.parse_query()
    tail = parser._peek()
    if tail.kind != "EOF":
        raise QuerySyntaxError(f"trailing input {tail.text!r}", tail.line,
                               tail.column, tail.offset, ("end of input",))
    return query
