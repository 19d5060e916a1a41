"""Blueprints, the gated graph, selectors, factor maps, the full pipeline."""

import pytest

from ttrealize.core import Path, canonical_index_list, inverse, validate_graph
from ttrealize.maps import transition_matrix, MapChain
from ttrealize.traintrack import (
    LongTurn,
    check_train_track_morphism,
    enumerate_long_turns,
    fixes_all_gates,
    gate_index_list,
    intrinsic_gate_structure,
    long_turn_image,
    verify_legalizing,
)
from ttrealize.realize import (
    CASE_EVEN,
    CASE_MAX_ODD,
    CASE_ODD,
    InvalidIndexList,
    RealizationResult,
    build_graph,
    build_legalizing_map,
    build_mixing_factors,
    build_mixing_map,
    build_turn_legalizers,
    realize,
    select_paths,
    validate_and_classify,
)


# -- blueprints ----------------------------------------------------------------


def test_classify_even_case():
    bp = validate_and_classify(7, (1, 2, 1, 2, 2))
    assert bp.case == CASE_EVEN
    assert bp.gate_counts == (3, 4, 3, 4, 4)
    assert (bp.r, bp.s, bp.has_d) == (4, 2, False)


def test_classify_max_odd_case():
    bp = validate_and_classify(6, (2, 2, 1, 2, 2))
    assert bp.case == CASE_MAX_ODD
    assert (bp.r, bp.s, bp.has_d) == (4, 1, False)


def test_classify_odd_case_loop_count():
    # the rank constraint (edge count minus vertex count plus one) forces
    # two loop edges here, the d-loop making up the difference
    bp = validate_and_classify(8, (2, 2, 1, 2, 2))
    assert bp.case == CASE_ODD
    assert (bp.r, bp.s, bp.has_d) == (4, 2, True)
    graph, _ = build_graph(bp)
    assert graph.rank == 8


def test_classify_rejects_out_of_range():
    with pytest.raises(InvalidIndexList):
        validate_and_classify(4, (3, 3))  # sum 3 exceeds 4 - 3/2
    with pytest.raises(InvalidIndexList):
        validate_and_classify(2, (1,))
    with pytest.raises(InvalidIndexList):
        validate_and_classify(5, ())
    with pytest.raises(InvalidIndexList):
        validate_and_classify(5, (0, 2))


# -- graph construction -----------------------------------------------------------


def test_build_graph_even_case(even_graph):
    graph, gates = even_graph
    assert set(graph.positive_edges) == {
        "c1", "c2", "c3", "c4", "c5", "b1", "b2", "b3", "b4", "a1", "a2",
    }
    assert graph.rank == 7
    assert [gates.gate_count(v) for v in graph.vertices] == [3, 4, 3, 4, 4]
    assert validate_graph(graph).ok
    # merged gates at v1 only
    assert set(gates.gate_tokens(gates.gate_of("c1"))) == {"c1", "a1", "a2"}
    assert set(gates.gate_tokens(gates.gate_of("~c5"))) == {"~c5", "~a1", "~a2"}


def test_build_graph_smallest_instance():
    bp = validate_and_classify(3, (1,))
    graph, gates = build_graph(bp)
    assert set(graph.positive_edges) == {"c1", "a1", "d"}
    assert graph.rank == 3
    assert gates.gate_count("v1") == 3
    assert set(gates.gate_tokens(gates.gate_of("d"))) == {"d", "~d"}


def test_build_graph_max_odd_gates(max_odd_instance):
    gates = max_odd_instance.gates
    assert set(gates.gate_tokens(gates.gate_of("c1"))) == {"c1", "a1"}
    # the reversed loop and reversed last circle edge sit in their own gates
    assert gates.gate_tokens(gates.gate_of("~a1")) == ("~a1",)
    assert gates.gate_tokens(gates.gate_of("~c5")) == ("~c5",)
    assert gates.gate_count("v1") == max_odd_instance.blueprint.gate_counts[0]


def test_gate_counts_match_blueprint_everywhere():
    for rank, entries in [(5, (2, 2)), (6, (1, 1, 1)), (4, (1, 2)), (4, (5,))]:
        bp = validate_and_classify(rank, entries)
        graph, gates = build_graph(bp)
        assert [gates.gate_count(v) for v in graph.vertices] == list(bp.gate_counts)
        assert graph.rank == rank


# -- selectors ---------------------------------------------------------------------


def test_selector_trivial_cases():
    bp = validate_and_classify(5, (1, 1))  # even, r=1, s=3
    graph, gates = build_graph(bp)
    sel = select_paths(graph, gates, bp)
    # a secondary loop is its own carrier: u and u' empty
    assert sel.carrier["a2"] == ((), ())
    # loops exit through the reversed anchor gate, so their extension is empty
    assert sel.outgoing["a2"][0] == ()


def test_selector_detour_is_d_loop_without_chords():
    bp = validate_and_classify(3, (1,))  # odd with r = 0: no chord edges at all
    graph, gates = build_graph(bp)
    sel = select_paths(graph, gates, bp)
    for e in sel.outgoing:
        assert sel.outgoing[e][1] == ("d",)
    for e in sel.incoming:
        assert sel.incoming[e][1] == ("d",)


def test_selectors_are_deterministic(even_graph):
    graph, gates = even_graph
    bp = validate_and_classify(7, (1, 2, 1, 2, 2))
    first = select_paths(graph, gates, bp)
    second = select_paths(graph, gates, bp)
    assert first.to_json() == second.to_json()


# -- factor maps -------------------------------------------------------------------


def test_link_map_threads_anchor_and_edge(even_instance):
    for rec in even_instance.mixing_factors:
        if not rec.name.startswith("link"):
            continue
        e = rec.name[5:-1]
        image_of_anchor = rec.map.image_edges("a1")
        image_of_e = rec.map.image_edges(e)
        assert e in image_of_anchor
        assert "a1" in image_of_e
        assert image_of_e.count(e) == 2


def test_stamp_maps_touch_only_anchor(even_instance):
    for rec in even_instance.mixing_factors:
        if not rec.name.startswith("stamp"):
            continue
        for e in even_instance.graph.positive_edges:
            if e != "a1":
                assert rec.map.image_edges(e) == (e,)
        assert rec.map.image_edges("a1")[-1] == "a1"


def test_mixing_map_is_positive_and_expanding(even_instance):
    m = transition_matrix(even_instance.h)
    assert m.is_positive
    assert all(
        even_instance.h.image_length(e) >= 2
        for e in even_instance.graph.positive_edges
    )


def test_half_mix_crosses_anchor_both_ways(even_instance):
    """Every half-mix image crosses the anchor loop, and the anchor's image
    crosses every edge: positivity of the full mix follows."""
    graph = even_instance.graph
    half = MapChain(graph, [r.map for r in even_instance.mixing_factors])
    m = transition_matrix(half)
    for e in graph.positive_edges:
        assert m.entry("a1", e) >= 1  # a1 appears in the image of e
        assert m.entry(e, "a1") >= 1  # e appears in the image of a1


def test_max_odd_legalizer_on_single_circle():
    """Frozen long-turn image for the one-vertex maximal odd instance.

    With one circle edge and the chord at the base vertex, the legalizer's
    image of the long turn (a1 c1, c1 c1) is computed by hand to be
    (b1 a1 c1, c1 b1 a1 c1)."""
    res = realize(3, (3,))
    assert res.blueprint.case == CASE_MAX_ODD
    rec = res.legalizers[0]
    assert set(rec.turn.tokens()) == {"a1", "c1"}
    lt = LongTurn(Path("v1", ("a1", "c1")), Path("v1", ("c1", "c1")))
    image = long_turn_image(rec.map, lt)
    branches = {image.branch_a.edges, image.branch_b.edges}
    assert branches == {("b1", "a1", "c1"), ("c1", "b1", "a1", "c1")}
    assert image.is_legal(res.gates)


def test_every_factor_is_train_track_and_fixes_gates(max_odd_instance):
    gates = max_odd_instance.gates
    for rec in max_odd_instance.mixing_factors + max_odd_instance.legalizers:
        assert check_train_track_morphism(rec.map, gates).ok, rec.name
        assert rec.map.fixes_all_vertices(), rec.name
        assert fixes_all_gates(rec.map, gates), rec.name
        for e in max_odd_instance.graph.positive_edges:
            if rec.name.startswith(("link", "stamp")):
                # the image of every edge crosses the edge itself
                word = [t for t in rec.map.image_edges(e)]
                assert e in word or inverse(e) in word, (rec.name, e)


# -- the legalizing search -----------------------------------------------------------


def test_even_case_certificate_small_branch_length(even_instance):
    cert = even_instance.legalizing_cert
    assert cert.ok
    assert cert.branch_length <= 8
    assert intrinsic_gate_structure(even_instance.g, assume_train_track=True) == even_instance.gates


def test_legalizing_search_log_records_rounds(even_instance):
    assert even_instance.search_log
    assert "legalizing at C=" in even_instance.search_log[-1]


# -- the full pipeline ----------------------------------------------------------------


def test_realize_even_case_index_list(even_instance):
    assert even_instance.report.level == "full_theorem_62"
    assert even_instance.report.index_list == (2, 2, 2, 1, 1)


def test_realize_smallest_instance(odd_instance):
    assert odd_instance.report.index_list == (1,)
    assert odd_instance.graph.rank == 3
    assert len(odd_instance.graph.vertices) == 1


def test_realize_uses_max_odd_pipeline_at_the_boundary():
    for rank in (3, 4):
        entries = (2 * rank - 3,)
        res = realize(rank, entries)
        assert res.blueprint.case == CASE_MAX_ODD
        assert res.report.index_list == canonical_index_list(entries)


def test_realized_gate_index_list_matches_input(max_odd_instance):
    got = gate_index_list(
        max_odd_instance.graph,
        max_odd_instance.gates,
        max_odd_instance.graph.vertices,
    )
    assert got == max_odd_instance.blueprint.index_list


def test_result_json_round_trip(odd_instance):
    data = odd_instance.to_json()
    clone = RealizationResult.from_json(data)
    assert clone.graph.to_json() == odd_instance.graph.to_json()
    assert clone.gates == odd_instance.gates
    assert clone.final.to_json() == odd_instance.final.to_json()
    cert = verify_legalizing(
        clone.g, clone.gates, odd_instance.legalizing_cert.branch_length
    )
    assert cert.ok
