from hypothesis import given, strategies as st

import oracles
from ctxforge.tokens import STOPWORDS, matched_tokens, token_matches, tokenize


def test_rng_survives_at_length_three():
    expected = oracles.tokenize("Deterministic RNG Synchronization")
    assert expected == ["deterministic", "rng", "synchronization"]
    assert tokenize("Deterministic RNG Synchronization") == expected


def test_empty_and_stopwords():
    assert tokenize("") == []
    assert tokenize("the and for") == []


def test_duplicates_kept_in_first_occurrence_order():
    assert tokenize("Sync-sync SYNC camera") == ["sync", "sync", "sync", "camera"]


def test_stopword_set_is_the_documented_one():
    assert STOPWORDS == oracles.STOP


@given(st.text(alphabet=st.sampled_from(list("abcXYZ019 -_./éthe")), max_size=60))
def test_matches_character_oracle(text):
    assert tokenize(text) == oracles.tokenize(text)


def test_bidirectional_substring():
    assert token_matches("sync", "synchronization")
    assert token_matches("networking", "network")
    assert not token_matches("drop", "save")
    assert matched_tokens(["sync", "camera", "zzz"], {"synchronization", "cam"}) == ["camera", "sync"]
