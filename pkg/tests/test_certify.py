"""Certification tiers, stable index lists, conjugacy-class cross-checks."""

import dataclasses

import pytest

from ttrealize.core import Graph, tighten_word
from ttrealize.maps import GraphMap, MapChain, MapError, compose_maps
from ttrealize.traintrack import LegalizingCertificate
from ttrealize.certify import (
    CONDITIONAL,
    FAILED,
    FULL_THEOREM,
    _LEVEL_ORDER,
    certify_realization,
    cyclic_tighten,
    cyclically_equal,
    expanding_power,
    periodic_class_status,
    periodic_class_survey,
    stable_index_list,
)


def fib(rose2):
    return GraphMap(rose2, {"a": ("a", "b"), "b": ("a",)})


def test_full_certificate_on_realization(even_instance):
    report = even_instance.report
    assert report.level == FULL_THEOREM
    assert report.train_track_ok
    assert report.primitivity_ok
    assert report.primitivity_witness is not None
    assert all(report.whitehead_connected.values())
    assert report.inp.verdict == "none_found"
    assert report.index_list == even_instance.blueprint.index_list


def test_identity_second_factor_fails_certification(odd_instance):
    """Swapping the certified second factor for the identity loses the
    certificate: the identity legalizes nothing."""
    result = _clone(odd_instance)
    ident = GraphMap.identity(odd_instance.graph)
    result.g = MapChain(odd_instance.graph, [ident])
    result.final = odd_instance.h
    result.legalizing_cert = dataclasses.replace(
        odd_instance.legalizing_cert, verdict="failed", witness=None
    )
    report = certify_realization(result)
    assert report.level != FULL_THEOREM
    assert any("legalizing" in note for note in report.notes) or report.level == CONDITIONAL


def _clone(result):
    import copy

    return copy.copy(result)


def test_certification_level_monotone(odd_instance):
    result = _clone(odd_instance)
    result.legalizing_cert = dataclasses.replace(
        odd_instance.legalizing_cert, verdict="failed"
    )
    downgraded = certify_realization(result)
    result.legalizing_cert = odd_instance.legalizing_cert
    restored = certify_realization(result)
    assert _LEVEL_ORDER[restored.level] >= _LEVEL_ORDER[downgraded.level]


def test_index_sum_stays_in_admissible_region(even_instance, max_odd_instance):
    for inst in (even_instance, max_odd_instance):
        doubled_sum = sum(inst.report.index_list)
        assert doubled_sum <= 2 * (inst.blueprint.rank - 1)


def test_stable_index_list_fibonacci(rose2):
    doubled, caveat = stable_index_list(fib(rose2))
    assert doubled == (1,)
    assert caveat  # the search had to run on a power: coverage is thinned


def test_stable_index_list_on_realization(odd_instance):
    doubled, caveat = stable_index_list(odd_instance.final)
    assert doubled == odd_instance.blueprint.index_list
    assert not caveat


def test_stable_index_list_edge_permutation(rose2):
    swap = GraphMap(rose2, {"a": ("b",), "b": ("a",)})
    doubled, caveat = stable_index_list(swap)
    assert caveat  # no positive power expands
    assert expanding_power(swap) is None


def test_stable_index_list_needs_train_track(rose2):
    unred = GraphMap(rose2, {"a": ("a", "b"), "b": ("~b",)})
    with pytest.raises(MapError):
        stable_index_list(unred)


def test_cyclic_tighten_and_equality():
    assert cyclic_tighten(("a", "b", "~b", "~a", "c")) == ("c",)
    assert cyclically_equal(("a", "b"), ("b", "a"))
    assert not cyclically_equal(("a", "b"), ("a", "~b"))
    assert cyclically_equal((), ("a", "~a"))


def test_fibonacci_commutator_class_is_periodic(rose2):
    """Hand oracle: the image of a b a^-1 b^-1 is conjugate to its inverse,
    so the class returns to itself after two applications."""
    f = fib(rose2)
    word = ("a", "b", "~a", "~b")
    image = []
    for token in word:
        image.extend(f.image_edges(token))
    once = cyclic_tighten(tuple(image))
    inverse_class = cyclic_tighten(tuple(reversed([_inv(t) for t in word])))
    assert cyclically_equal(once, inverse_class)
    status, t = periodic_class_status(f, word, t_max=4)
    assert (status, t) == ("recurrent", 2)


def _inv(token):
    return token[1:] if token.startswith("~") else "~" + token


def test_no_short_periodic_classes_on_realization(odd_instance):
    survey = periodic_class_survey(odd_instance.final, count=12, max_len=5, t_max=4)
    assert survey["recurrent"] == 0
    assert survey["words"] == 12


def test_report_json_shape(even_instance):
    data = even_instance.report.to_json()
    assert data["level"] == "full_theorem_62"
    assert data["primitivity"]["ok"] is True
    assert set(data["whitehead"]) == set(even_instance.graph.vertices)
    assert data["index_list"] == ["1", "1", "1", "1/2", "1/2"]
    assert data["inp"]["verdict"] == "none_found"
