from __future__ import annotations

import numpy as np
import pytest

from conftest import track_table
from court_fusion.errors import EmptyInputError
from court_fusion.fusion.occlusion import IdCountSeries, diff_series, extract_sessions, format_session


def _spans(counts):
    return [(s.t_s, s.t_e, s.n_ref, s.open) for s in extract_sessions(IdCountSeries.from_counts(counts))]


@pytest.mark.parametrize(
    "counts, expected",
    [
        ([4, 4, 3, 3, 4, 4], [(3, 5, 4, False)]),
        ([4, 3, 2, 3, 4], [(2, 5, 4, False)]),
        ([4, 3, 5, 5], [(2, 3, 4, False)]),
        ([3, 4, 3, 4, 2, 3], [(3, 4, 4, False), (5, 6, 4, True)]),
        ([4, 3, 3], [(2, 3, 4, True)]),
        ([2, 2, 3, 3], []),
        ([5], []),
    ],
)
def test_extract_sessions_state_machine(counts, expected):
    assert _spans(counts) == expected


def test_diff_series():
    assert diff_series([4, 4, 3, 5]) == [0, -1, 2]
    with pytest.raises(EmptyInputError):
        diff_series([4])


def test_empty_series_is_rejected():
    with pytest.raises(EmptyInputError):
        IdCountSeries(())


def _brute_force_covered(counts: list[int]) -> set[int]:
    """Frame numbers (1-based) that lie inside some occlusion, by direct rescan."""
    covered: set[int] = set()
    i = 1
    while i < len(counts):
        if counts[i] < counts[i - 1]:
            ref = counts[i - 1]
            j = i
            while j < len(counts) and counts[j] < ref:
                covered.add(j + 1)
                j += 1
            i = j + 1
        else:
            i += 1
    return covered


def test_sessions_match_brute_force_rescan(rng):
    for _ in range(200):
        counts = rng.integers(0, 6, size=int(rng.integers(2, 40))).tolist()
        sessions = extract_sessions(IdCountSeries.from_counts(counts))

        covered: set[int] = set()
        for s in sessions:
            end = s.t_e + 1 if s.open else s.t_e
            covered.update(range(s.t_s, end))
            assert counts[s.t_s - 2] == s.n_ref
            assert all(c < s.n_ref for c in counts[s.t_s - 1:end - 1])
            if not s.open:
                assert counts[s.t_e - 1] >= s.n_ref
        assert covered == _brute_force_covered(counts)

        # Sessions are disjoint and ordered.
        for a, b in zip(sessions, sessions[1:]):
            assert a.t_e <= b.t_s
        assert [s.k for s in sessions] == list(range(1, len(sessions) + 1))


def _swap_table():
    # 1 and 2 stand together; 2 disappears behind 1 and comes back as 4.
    paths = {
        1: [(f, 5.0, 5.0) for f in range(1, 8)],
        2: [(f, 5.5, 5.0) for f in range(1, 4)],
        3: [(f, 15.0, 5.0) for f in range(1, 8)],
        4: [(f, 5.2, 5.0) for f in range(6, 8)],
    }
    return track_table(paths)


def test_sessions_from_track_table_carry_lost_gain_and_neighbors():
    series = IdCountSeries.from_table(_swap_table())
    assert series.counts.tolist() == [3, 3, 3, 2, 2, 3, 3]
    [s] = extract_sessions(series)
    assert (s.t_s, s.t_e, s.n_ref) == (4, 6, 3)
    assert s.lost_ids == {2}
    assert s.gain_ids == {4}
    assert s.neighbor_lost_ids == {1}
    assert s.neighbor_gain_ids == {1}
    assert s.pre_ids == {1, 2}
    assert s.post_ids == {1, 4}


def test_neighbor_radius_excludes_distant_survivors():
    [s] = extract_sessions(IdCountSeries.from_table(_swap_table()), neighbor_radius=0.1)
    assert s.neighbor_lost_ids == frozenset()
    assert s.neighbor_gain_ids == frozenset()


def test_format_session():
    [s] = extract_sessions(IdCountSeries.from_table(_swap_table()))
    assert format_session(s) == "1 4 6 3 lost=[2] gain=[4]"
    [open_session] = extract_sessions(IdCountSeries.from_counts([4, 3, 3]))
    assert format_session(open_session).endswith(" open")
    assert isinstance(open_session.gain_ids, frozenset)
    assert np.array_equal(IdCountSeries.from_counts([4, 3, 3]).counts, [4, 3, 3])
