from __future__ import annotations

import pytest

from lola.errors import LexError
from lola.lexer import KEYWORDS, tokenize


def kinds(src: str) -> list[tuple[str, str]]:
    return [(t.kind, t.text) for t in tokenize(src) if t.kind != "eof"]


def test_declaration_tokens():
    assert kinds("output double v := x[-1,0.0]") == [
        ("output", "output"), ("ident", "double"), ("ident", "v"), (":=", ":="), ("ident", "x"),
        ("[", "["), ("-", "-"), ("int", "1"), (",", ","), ("double", "0.0"), ("]", "]"),
    ]


def test_absolute_offset_tokens():
    assert kinds("time#[0,0.0]") == [
        ("ident", "time"), ("#", "#"), ("[", "["), ("int", "0"), (",", ","), ("double", "0.0"), ("]", "]"),
    ]


def test_unknown_character_reports_location():
    with pytest.raises(LexError) as info:
        tokenize("a @ b")
    assert info.value.loc.line == 1 and info.value.loc.col == 3
    assert "@" in str(info.value)


def test_comments_and_lines_are_skipped_and_tracked():
    toks = tokenize("// header\ninput int a // trailing\n  output")
    assert [t.kind for t in toks] == ["input", "ident", "ident", "output", "eof"]
    assert toks[3].loc.line == 3 and toks[3].loc.col == 3


@pytest.mark.parametrize("word", sorted(KEYWORDS))
def test_keywords_are_classified(word):
    (tok, _eof) = tokenize(word)
    assert tok.kind == word


def test_all_operators():
    ops = "+ - * / ^ = != < <= > >= & | ! := ( ) { } [ ] # ,"
    assert [k for k, _ in kinds(ops)] == ops.split()


def test_literal_values():
    toks = tokenize('12 3.5 1e3 2.5e-1 "a\\"b\\n"')
    assert [t.value for t in toks[:-1]] == [12, 3.5, 1000.0, 0.25, 'a"b\n']
    assert [t.kind for t in toks[:-1]] == ["int", "double", "double", "double", "string"]


def test_unterminated_string():
    with pytest.raises(LexError):
        tokenize('"abc')


def test_identifier_shape():
    assert kinds("_a1 b_2") == [("ident", "_a1"), ("ident", "b_2")]
