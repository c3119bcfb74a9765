import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archloop.errors import OversizeInputError
from archloop.lexshingle import (
    MAX_SOURCE_BYTES,
    ShingleSet,
    Token,
    TokenSequence,
    shingle,
    shingle_source,
    tokenize,
)


def kinds_texts(seq):
    return [(t.kind, t.text) for t in seq.tokens]


class TestTokenize:
    def test_empty_input(self):
        assert tokenize("").tokens == ()

    def test_assignment_with_comment(self):
        # hand-lexed oracle: comment contributes nothing
        assert kinds_texts(tokenize("x = 1  # note")) == [
            ("identifier", "x"),
            ("operator", "="),
            ("number", "1"),
        ]

    def test_import_statement(self):
        assert kinds_texts(tokenize("import torch")) == [
            ("keyword", "import"),
            ("identifier", "torch"),
        ]

    def test_string_prefixes_and_triple_quotes(self):
        seq = tokenize('f"lr={x}" + r\'raw\' + """multi\nline"""')
        assert [t.kind for t in seq.tokens] == [
            "string", "operator", "string", "operator", "string",
        ]
        assert seq.tokens[0].text == 'f"lr={x}"'

    def test_numbers(self):
        texts = [t.text for t in tokenize("0x1F 0b10 1_000 3.14 .5 1e-3 2j").tokens]
        assert texts == ["0x1F", "0b10", "1_000", "3.14", ".5", "1e-3", "2j"]

    def test_operators_longest_match(self):
        assert kinds_texts(tokenize("a **= b // c -> d")) == [
            ("identifier", "a"),
            ("operator", "**="),
            ("identifier", "b"),
            ("operator", "//"),
            ("identifier", "c"),
            ("operator", "->"),
            ("identifier", "d"),
        ]

    def test_unlexable_run_becomes_single_delimiter(self):
        seq = tokenize("x = $$? + 1")
        assert ("delimiter", "$$?") in kinds_texts(seq)

    def test_malformed_code_never_fails(self):
        tokenize("def f(:\n    'unterminated\n  ???")

    def test_every_token_text_nonempty(self):
        for tok in tokenize("class Net:\n    pass  # c\n").tokens:
            assert tok.text

    def test_oversize_input_rejected(self):
        with pytest.raises(OversizeInputError):
            tokenize("x" * (MAX_SOURCE_BYTES + 1))

    def test_deterministic(self):
        src = "class Net(nn.Module):\n    def forward(self, x):\n        return x\n"
        assert tokenize(src) == tokenize(src)


class TestShingle:
    def test_below_window_size_is_empty(self):
        seq = TokenSequence(tuple(Token("identifier", f"v{i}") for i in range(9)))
        assert len(shingle(seq, 10)) == 0

    def test_window_count_bound(self):
        seq = TokenSequence(tuple(Token("identifier", f"v{i}") for i in range(12)))
        assert len(shingle(seq, 10)) <= 3

    def test_equal_tokens_equal_shingles(self):
        a = tokenize("x = 1\ny = 2\nz = x + y\n")
        b = tokenize("x=1\ny=2\nz=x+y")
        assert kinds_texts(a) == kinds_texts(b)
        assert shingle(a, 3) == shingle(b, 3)

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            shingle(TokenSequence(()), 0)

    def test_duplicate_windows_collapse(self):
        tokens = tuple(Token("identifier", "a") for _ in range(20))
        assert len(shingle(TokenSequence(tokens), 3)) == 1


class TestProperties:
    @given(st.text(max_size=400))
    @settings(max_examples=200, deadline=None)
    def test_render_idempotence(self, source):
        first = tokenize(source)
        second = tokenize(first.render())
        assert kinds_texts(first) == kinds_texts(second)

    @given(st.text(alphabet="abc xyz=+-()123\n\t", max_size=200), st.integers(1, 8))
    @settings(max_examples=200, deadline=None)
    def test_whitespace_insensitivity(self, source, k):
        spaced = source.replace(" ", "   ").replace("\n", "\n\n\n")
        assert shingle_source(source, k) == shingle_source(spaced, k)

    @given(st.text(alphabet="abc=+()123\n", max_size=200), st.integers(1, 8))
    @settings(max_examples=200, deadline=None)
    def test_comment_insensitivity(self, source, k):
        commented = "# leading comment\n" + source.replace(
            "\n", "\n# interleaved comment\n"
        )
        assert shingle_source(source, k) == shingle_source(commented, k)

    @given(st.text(max_size=300), st.integers(1, 12))
    @settings(max_examples=200, deadline=None)
    def test_monotone_window_bound(self, source, k):
        seq = tokenize(source)
        result = shingle(seq, k)
        assert len(result) <= max(0, len(seq) - k + 1)
        assert result.source_token_count == len(seq)


def test_shingle_set_invariants():
    s = shingle_source("x = 1", 2)
    assert isinstance(s, ShingleSet)
    assert s.k == 2
    assert s.source_token_count == 3
    assert len(s) == 2
