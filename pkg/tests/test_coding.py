import itertools
import random

import pytest

import fsmguard as fg
from fsmguard import coding


def brute_min_distance(words):
    return min(fg.hamming(a, b) for a, b in itertools.combinations(words, 2))


def test_two_symbols_distance_one():
    code = fg.generate_code(2, 1, seed=0)
    assert code.width == 1
    assert sorted(w for _, w in code.entries) == [0, 1]


def test_four_symbols_distance_two():
    code = fg.generate_code(4, 2, seed=0)
    words = [w for _, w in code.entries]
    assert brute_min_distance(words) >= 2
    assert code.width <= 4


def test_four_symbols_distance_four():
    code = fg.generate_code(4, 4, seed=1)
    assert brute_min_distance([w for _, w in code.entries]) >= 4


@pytest.mark.parametrize("count,n", [(4, 2), (8, 3), (14, 2), (6, 4)])
def test_generated_codes_meet_distance(count, n):
    code = fg.generate_code(count, n, seed=5)
    assert len(code) == count
    assert fg.min_distance(code) >= n
    assert len({w for _, w in code.entries}) == count


def test_min_distance_hand_counted():
    cb = coding.CodeBook(1, 3, (("a", 0b000), ("b", 0b111)), "a")
    assert fg.min_distance(cb) == 3
    cb2 = coding.CodeBook(1, 4, (("a", 0b0000), ("b", 0b0011), ("c", 0b0101)), "a")
    assert fg.min_distance(cb2) == 2


def test_min_distance_generated_at_least_n():
    code = fg.generate_code(8, 3, seed=7)
    assert fg.min_distance(code) >= 3


def test_min_distance_needs_two_entries():
    cb = coding.CodeBook(1, 2, (("a", 0),), "a")
    with pytest.raises(coding.CodingError):
        fg.min_distance(cb)


def test_nearest_codeword_exact_and_flipped():
    code = fg.generate_code(8, 3, seed=2)
    for sym, word in code.entries:
        assert fg.nearest_codeword(code, word) == (sym, 0)
        flipped = word ^ (1 << (word % code.width))
        got_sym, got_d = fg.nearest_codeword(code, flipped)
        assert (got_sym, got_d) == (sym, 1)  # distance 3 code: 1-flip spheres disjoint


def test_nearest_codeword_matches_linear_scan():
    code = fg.generate_code(10, 2, seed=9)
    rng = random.Random(0)
    for _ in range(200):
        w = rng.randrange(1 << code.width)
        sym, d = fg.nearest_codeword(code, w)
        best = min(fg.hamming(cw, w) for _, cw in code.entries)
        assert d == best
        assert fg.hamming(code.codeword(sym), w) == d


def test_nearest_codeword_width_mismatch():
    code = fg.generate_code(4, 2, seed=0)
    with pytest.raises(coding.CodingError):
        fg.nearest_codeword(code, 1 << code.width)


def test_generation_deterministic():
    a = fg.generate_code(14, 3, seed=42)
    b = fg.generate_code(14, 3, seed=42)
    assert a == b
    c = fg.generate_code(14, 3, seed=43)
    assert a != c  # overwhelmingly likely for a shuffled search


def test_error_codeword_is_all_zeros_and_distant():
    code = fg.generate_code(9, 3, seed=3)
    assert code.error_codeword == 0
    for sym, w in code.entries:
        if sym != code.error_symbol:
            assert fg.hamming(w, 0) >= 3


def test_sub_n_flips_never_reach_another_codeword():
    code = fg.generate_code(6, 3, seed=4)
    assert code.width <= 16
    words = {w for _, w in code.entries}
    for w in words:
        for nflips in (1, 2):
            for positions in itertools.combinations(range(code.width), nflips):
                mutated = w
                for p in positions:
                    mutated ^= 1 << p
                assert mutated not in words


def test_state_codebook_covers_states_and_error(ref14_fsm):
    code = fg.state_codebook(ref14_fsm, 2, seed=0)
    assert set(code.symbols()) == set(ref14_fsm.states) | {fg.ERROR_SYMBOL}
    assert fg.min_distance(code) >= 2


def test_control_codebook_one_entry_per_guard_config(ref14_fsm):
    code = fg.control_codebook(ref14_fsm, 2, seed=0)
    labels = coding.control_symbols(ref14_fsm)
    assert set(code.symbols()) == set(labels) | {coding.INVALID_CONTROL_SYMBOL}
    assert "default" in labels
    assert fg.min_distance(code) >= 2


def test_codebook_json_round_trip():
    code = fg.generate_code(5, 2, seed=8)
    doc = code.to_json_dict()
    again = coding.CodeBook.from_json_dict(doc)
    assert again == code
