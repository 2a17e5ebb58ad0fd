import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toric_memory import decoder2d as d2
from toric_memory.decoder2d import (
    MalformedSyndromeError,
    cantor_recursion_bound,
    decode,
    expand_and_pair,
    make_rng,
    pair_by_distance,
    recovery_bits,
    ring_max_chain_search,
    run_trial,
)
from toric_memory.lattice import (
    BETA,
    ErrorConfig,
    HomologyClass,
    RingLattice,
    Syndrome,
    TorusLattice,
    homology_class,
    shortest_path,
    syndrome_of,
)


def staged_pairings(lat, defects):
    """Every pairing the staged algorithm can return: maximal matchings of each stage's candidate graph."""
    def maximal_matchings(edges):
        out = set()

        def rec(chosen, used):
            avail = [e for e in edges if e[0] not in used and e[1] not in used]
            if not avail:
                out.add(frozenset(chosen))
                return
            for e in avail:
                rec(chosen | {e}, used | set(e))

        rec(frozenset(), frozenset())
        return out

    def rec(free, acc):
        if not free:
            yield acc
            return
        cand = list(itertools.combinations(free, 2))
        coord = lat.vertex_coord
        t = min(lat.distance(coord(a), coord(b)) for a, b in cand)
        edges = [(a, b) for a, b in cand if lat.distance(coord(a), coord(b)) == t]
        for m in maximal_matchings(edges):
            used = {v for e in m for v in e}
            yield from rec(tuple(v for v in free if v not in used), acc | m)

    yield from rec(tuple(sorted(defects)), frozenset())


def residual_class(cfg, pairs):
    lat = cfg.lattice
    bits = cfg.bits.copy()
    for a, b in pairs:
        bits[shortest_path(lat, lat.vertex_coord(a), lat.vertex_coord(b))] ^= True
    return homology_class(ErrorConfig(lat, bits))


def test_empty_and_malformed():
    lat = TorusLattice(5)
    assert len(expand_and_pair(Syndrome(lat, frozenset()), make_rng(0))) == 0
    with pytest.raises(MalformedSyndromeError):
        expand_and_pair(Syndrome(lat, frozenset({0, 1, 2})), make_rng(0))
    out = decode(ErrorConfig.empty(lat), make_rng(0))
    assert out.success and out.recovery.weight == 0


def test_adjacent_pair_at_first_stage():
    lat = TorusLattice(7)
    syn = Syndrome(lat, frozenset({lat.vertex_index(2, 2), lat.vertex_index(3, 2), lat.vertex_index(6, 6), lat.vertex_index(6, 2)}))
    pairing = expand_and_pair(syn, make_rng(3))
    assert (lat.vertex_index(2, 2), lat.vertex_index(3, 2)) in pairing.pairs


def test_noncontractible_row_is_invisible():
    lat = TorusLattice(6)
    cfg = ErrorConfig.from_edges(lat, [lat.edge_index(x, 1, 0) for x in range(6)])
    out = decode(cfg, make_rng(1))
    assert not out.success and out.residual_class == HomologyClass(1, 0)


def test_ring_example_two_complementary_patterns():
    ring = RingLattice(8)
    cfg = ErrorConfig.from_edges(ring, [1, 2, 6])
    assert sorted(syndrome_of(cfg).defects) == [1, 3, 6, 7]
    for seed in range(50):
        residual = (cfg.bits ^ decode(cfg, make_rng(seed)).recovery.bits)
        assert residual.all() or not residual.any()


def test_ring_tie_gives_both_patterns():
    ring = RingLattice(8)
    cfg = ErrorConfig.from_edges(ring, [0, 1, 4, 5])  # particles 0, 2, 4, 6 all two apart
    outcomes = {bool(decode(cfg, make_rng(s)).success) for s in range(60)}
    assert outcomes == {True, False}


def test_all_two_error_configs_on_k4_match_oracle():
    lat = TorusLattice(4)
    for e1, e2 in itertools.combinations(range(lat.n_edges), 2):
        cfg = ErrorConfig.from_edges(lat, [e1, e2])
        defects = syndrome_of(cfg).defects
        possible = {residual_class(cfg, m).trivial for m in staged_pairings(lat, defects)}
        seen = {decode(cfg, make_rng(s)).success for s in range(12)}
        assert seen <= possible, (e1, e2)
        if len(possible) == 1:
            assert seen == possible


def test_run_trial_extremes():
    assert not any(run_trial(8, 0.0, s) for s in range(5))
    # every edge flipped: empty syndrome, winding parity k in both directions
    assert all(run_trial(5, 1.0, s) for s in range(3))
    assert not any(run_trial(6, 1.0, s) for s in range(3))


def test_run_trial_snapshot():
    expected = [True, True, True, False, False, True, True, False, False, False, True, False]
    assert [run_trial(9, 0.08, s) for s in range(12)] == expected


def test_array_and_list_pairing_agree():
    rng = np.random.default_rng(5)
    lat = TorusLattice(12)
    for _ in range(20):
        v = np.sort(rng.choice(lat.n_vertices, size=30, replace=False))
        dist = d2.distance_matrix(lat, v)
        a = pair_by_distance(dist, make_rng(1))
        b = d2._pair_small(dist, make_rng(1), None, np.ones(len(v), dtype=bool))
        assert a == b


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 9), st.floats(0.0, 0.2), st.integers(0, 2**32))
def test_decode_leaves_closed_residual(k, p, seed):
    lat = TorusLattice(k)
    rng = make_rng(seed)
    cfg = ErrorConfig(lat, rng.random(lat.n_edges) < p)
    out = decode(cfg, rng)
    assert not syndrome_of(cfg ^ out.recovery).defects
    # each pair's chain relocates only its own two particles
    assert syndrome_of(out.recovery).defects == out.pairing.vertices()


def test_recovery_bits_match_shortest_paths():
    lat = TorusLattice(7)
    rng = np.random.default_rng(2)
    for _ in range(30):
        v = rng.choice(lat.n_vertices, size=6, replace=False)
        pairs = tuple((int(v[i]), int(v[i + 1])) for i in (0, 2, 4))
        expected = np.zeros(lat.n_edges, dtype=bool)
        for a, b in pairs:
            expected[shortest_path(lat, lat.vertex_coord(a), lat.vertex_coord(b))] ^= True
        assert np.array_equal(recovery_bits(lat, d2.Pairing(pairs)), expected)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 3), (3, 5), (4, 9), (5, 11)])
def test_ring_chain_search_small(n, expected):
    assert ring_max_chain_search(n) == expected
    assert expected <= n ** (1 / BETA) + 1e-9


def test_recursion_bound_matches_cantor_powers():
    assert [cantor_recursion_bound(2**L) for L in range(6)] == [3**L for L in range(6)]
