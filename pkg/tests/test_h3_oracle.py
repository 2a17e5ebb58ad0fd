import json

import pytest

from toric_memory.analysis.h3_oracle import DATA_FILE, ChainEnumerator, h2_table, h3_table

FROZEN = json.loads(DATA_FILE.read_text())


def test_single_defect_counts():
    enum = ChainEnumerator()
    assert enum.count(1, 0) == 4  # four unit edges from the anchor
    assert enum.count(0, 1) == 1  # one spacetime point


def test_two_dimensional_mode_has_no_ghosts():
    with pytest.raises(ValueError):
        ChainEnumerator(mode="2d").count(0, 1)


def test_time_translation_free_for_real_errors():
    # without ghosts nothing can be seen late, so 3d and 2d counts agree on [2]-chains
    assert ChainEnumerator(mode="3d").count(2, 0) == ChainEnumerator(mode="2d").count(2, 0)


def test_frozen_table_matches_enumeration():
    entries = [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (2, 1), (1, 2)]
    fresh = h3_table(entries=entries)
    for key, value in fresh.items():
        assert FROZEN["h3"][key] == pytest.approx(value)
    assert h2_table(((1, 0), (2, 0))) == {k: FROZEN["h2"][k] for k in ("1,0", "2,0")}


def test_frozen_four_error_entries():
    fresh = h3_table(entries=[(4, 0)])
    assert FROZEN["h3"]["4,0"] == pytest.approx(fresh["4,0"])


def test_two_dimensional_count_within_published_bound():
    assert FROZEN["h2"]["4,0"] <= 4997
