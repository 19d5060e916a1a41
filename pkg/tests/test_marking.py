"""Fundamental-group markings and induced endomorphisms."""

import random

import pytest

from ttrealize.core import Graph, tighten_word
from ttrealize.maps import GraphMap, compose_maps
from ttrealize.marking import (
    MarkingError,
    build_marking,
    pi1_automorphism,
    verify_homotopy_equivalence,
)
from ttrealize.realize import build_edge_link_map, build_turn_legalizer
from tests.test_maps import random_self_map


def test_rose_marking_and_fibonacci_endomorphism(rose2):
    marking = build_marking(rose2)
    assert marking.tree_edges == frozenset()
    assert marking.basis == {"a": "x1", "b": "x2"}
    f = GraphMap(rose2, {"a": ("a", "b"), "b": ("a",)})
    endo = pi1_automorphism(f, marking)
    assert endo == {"x1": ("x1", "x2"), "x2": ("x1",)}


def test_identity_induces_identity(even_instance):
    marking = even_instance.marking
    ident = GraphMap.identity(even_instance.graph)
    endo = pi1_automorphism(ident, marking)
    for gen, word in endo.items():
        assert word == (gen,)


def test_even_case_marking_has_rank_many_letters(even_instance):
    graph = even_instance.graph
    marking = even_instance.marking
    # the deterministic tree prefers the circle edges
    assert marking.tree_edges == frozenset({"c1", "c2", "c3", "c4"})
    basis_edges = sorted(marking.basis)
    assert basis_edges == ["a1", "a2", "b1", "b2", "b3", "b4", "c5"]
    assert len(marking.basis) == graph.rank == 7


def test_marking_requires_connectivity():
    two = Graph(["u", "v"], [("a", "u", "u"), ("b", "v", "v")])
    with pytest.raises(MarkingError):
        build_marking(two)


def test_homotopy_equivalence_identity(even_instance):
    ident = GraphMap.identity(even_instance.graph)
    assert verify_homotopy_equivalence(ident, ident, even_instance.marking)


def test_homotopy_equivalence_turn_stamp_style(even_instance):
    graph = even_instance.graph
    marking = even_instance.marking
    # a1 -> v a1 against a1 -> v-reversed a1, for a legal loop v at v1
    v = ("c1", "c2", "c3", "c4", "c5")
    v_back = ("~c5", "~c4", "~c3", "~c2", "~c1")
    fwd = GraphMap.from_updates(graph, {"a1": v + ("a1",)})
    back = GraphMap.from_updates(graph, {"a1": v_back + ("a1",)})
    assert verify_homotopy_equivalence(fwd, back, marking)
    wrong = GraphMap.from_updates(graph, {"a1": v + ("a1", "a1")})
    assert not verify_homotopy_equivalence(fwd, wrong, marking)


def test_homotopy_equivalence_loop_turn_legalizer(odd_instance):
    """The d-loop legalizer against its listed inverse."""
    rec = next(r for r in odd_instance.legalizers if set(r.turn.tokens()) == {"d", "~d"})
    assert verify_homotopy_equivalence(rec.map, rec.inverse, odd_instance.marking)


def test_all_factor_inverses_on_small_instance(odd_instance):
    for rec in odd_instance.mixing_factors + odd_instance.legalizers:
        assert verify_homotopy_equivalence(
            rec.map, rec.inverse, odd_instance.marking
        ), rec.name


def test_pi1_respects_composition(rose2):
    marking = build_marking(rose2)
    rng = random.Random(13)
    for _ in range(25):
        f = random_self_map(rose2, rng)
        g = random_self_map(rose2, rng)
        endo_fg = pi1_automorphism(compose_maps(f, g), marking)
        endo_f = pi1_automorphism(f, marking)
        endo_g = pi1_automorphism(g, marking)

        def apply(endo, word):
            out = []
            for token in word:
                if token.startswith("~"):
                    out.extend(
                        "~" + t if not t.startswith("~") else t[1:]
                        for t in reversed(endo[token[1:]])
                    )
                else:
                    out.extend(endo[token])
            return tighten_word(tuple(out))

        for gen in endo_g:
            assert endo_fg[gen] == apply(endo_f, endo_g[gen])


def test_pi1_needs_fixed_basepoint():
    square = Graph(
        ["u", "v"],
        [("p", "u", "v"), ("q", "u", "v"), ("r", "u", "v")],
    )
    marking = build_marking(square)
    swap = GraphMap(
        square,
        {"p": ("~p",), "q": ("~q",), "r": ("~r",)},
        {"u": "v", "v": "u"},
    )
    with pytest.raises(MarkingError):
        pi1_automorphism(swap, marking)
