import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from falforge.io import dumps
from falforge.nerve import (
    Dimer,
    DimerError,
    Nerve,
    NerveError,
    dual_with_matching,
    genus2,
    octahedron,
    random_nerve,
    subdivide_with_dimer,
    tetrahedron,
    torus7,
    validate_dimer,
    validate_nerve,
    vertex_split,
)


def counts(N):
    r = validate_nerve(N)
    return r.vertices, r.edges, r.faces, r.genus


@pytest.mark.parametrize("make,expected", [
    (tetrahedron, (4, 6, 4, 0)),
    (octahedron, (6, 12, 8, 0)),
    (torus7, (7, 21, 14, 1)),
    (genus2, (11, 39, 26, 2)),
])
def test_standard_nerves(make, expected):
    assert counts(make()) == expected


def test_torus7_is_degree_regular():
    N = torus7()
    assert {N.degree(v) for v in range(7)} == {6}


def test_reversed_face_is_an_orientation_defect():
    faces = list(tetrahedron().faces)
    faces[3] = faces[3][::-1]
    with pytest.raises(NerveError) as info:
        validate_nerve(Nerve.from_faces(4, faces))
    assert any("orientation" in d for d in info.value.defects)


def test_open_surface_reports_non_manifold_edges():
    with pytest.raises(NerveError) as info:
        validate_nerve(Nerve.from_faces(4, [(0, 1, 2), (0, 2, 3)]))
    assert any("non-manifold" in d for d in info.value.defects)


def test_disconnected_complex_rejected():
    T = tetrahedron()
    faces = list(T.faces) + [tuple(v + 4 for v in f) for f in T.faces]
    with pytest.raises(NerveError) as info:
        validate_nerve(Nerve.from_faces(8, faces))
    assert any("connected" in d for d in info.value.defects)


def test_isolated_vertex_rejected():
    with pytest.raises(NerveError):
        validate_nerve(Nerve.from_faces(5, tetrahedron().faces))


def test_edges_are_sorted_pairs_in_lexicographic_order():
    N = tetrahedron()
    assert N.edges == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def test_vertex_rings_are_cyclic():
    N = genus2()
    for v in range(N.n_vertices):
        ring = N.vertex_faces[v]
        assert sorted(ring) == sorted(f for f, face in enumerate(N.faces) if v in face)
        link = N.link(v)
        assert len(set(link)) == len(link) == N.degree(v)


# -- subdivision and dimers ------------------------------------------------------

def test_subdivided_tetrahedron_counts():
    S, D = subdivide_with_dimer(tetrahedron())
    assert counts(S) == (8, 18, 12, 0)
    assert len(D) == 6 and validate_dimer(S, D)


def test_subdivision_formula_on_torus():
    N = torus7()
    V, E, F, _ = counts(N)
    S, D = subdivide_with_dimer(N)
    assert counts(S) == (V + F, E + 3 * F, 3 * F, 1)
    # every new face holds exactly one original edge
    old = set(D.edges)
    assert all(sum(e in old for e in ids) == 1 for ids in S.face_edge_ids)


def test_double_subdivision_still_has_dimer():
    S, _ = subdivide_with_dimer(tetrahedron())
    S2, D2 = subdivide_with_dimer(S)
    assert validate_dimer(S2, D2) and len(D2) == len(S2.faces) // 2


def test_empty_and_full_colourings_are_not_dimers():
    N = tetrahedron()
    assert not validate_dimer(N, Dimer.of([]))
    assert not validate_dimer(N, Dimer.of(range(len(N.edges))))


def test_out_of_range_dimer_edge():
    with pytest.raises(DimerError):
        validate_dimer(tetrahedron(), Dimer.of([99]))


def test_opposite_edges_of_tetrahedron_form_a_dimer():
    N = tetrahedron()
    idx = N.edge_index
    assert validate_dimer(N, Dimer.of([idx[(0, 1)], idx[(2, 3)]]))


# -- dual graph ------------------------------------------------------------------

def test_dual_of_subdivided_tetrahedron():
    S, D = subdivide_with_dimer(tetrahedron())
    G = dual_with_matching(S, D)
    assert G.n_nodes == 12
    assert all(len(set(rot)) == 3 for rot in G.rotation)
    assert len(G.matching) == 6 and G.is_perfect_matching()


def test_dual_rejects_non_dimer():
    with pytest.raises(DimerError):
        dual_with_matching(tetrahedron(), Dimer.of([0]))


@pytest.mark.parametrize("make", [tetrahedron, torus7, genus2])
def test_dual_of_dual_recovers_vertex_incidence(make):
    N = make()
    G = dual_with_matching(N)
    cycles = sorted(tuple(sorted(c)) for c in G.face_cycles())
    rings = sorted(tuple(sorted(r)) for r in N.vertex_faces)
    assert cycles == rings


# -- random growth ---------------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.integers(0, 25), st.sampled_from(["tetrahedron", "torus7"]))
def test_vertex_splits_preserve_the_surface(seed, splits, base):
    B = {"tetrahedron": tetrahedron, "torus7": torus7}[base]()
    N = random_nerve(np.random.default_rng(seed), splits, B)
    r = validate_nerve(N)
    assert r.genus == B.genus and r.vertices == B.n_vertices + splits
    assert 3 * r.faces == 2 * r.edges
    assert min(N.degree(v) for v in range(N.n_vertices)) >= 3


@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.sampled_from(["tetrahedron", "torus7"]))
def test_subdivision_always_yields_a_perfect_matching(seed, splits, base):
    B = {"tetrahedron": tetrahedron, "torus7": torus7}[base]()
    S, D = subdivide_with_dimer(random_nerve(np.random.default_rng(seed), splits, B))
    assert validate_dimer(S, D)
    assert len(D) == len(S.faces) // 2
    G = dual_with_matching(S, D)
    assert G.is_perfect_matching() and len(G.matching) == len(S.faces) // 2


def test_vertex_split_rejects_equal_positions():
    with pytest.raises(ValueError):
        vertex_split(tetrahedron(), 0, 1, 1)


# -- serialization ---------------------------------------------------------------

def test_json_round_trip_with_dimer():
    S, D = subdivide_with_dimer(tetrahedron())
    text = dumps(S.to_dict(D))
    N2, D2 = Nerve.from_dict(json.loads(text))
    assert N2 == S and D2 == D
    assert text == dumps(N2.to_dict(D2))


def test_canonical_form_is_sorted_and_compact():
    text = dumps(tetrahedron().to_dict(Dimer.of([5, 0])))
    assert text == '{"dimer":[0,5],"faces":[[0,1,2],[0,2,3],[0,3,1],[1,3,2]],"vertices":4}\n'


def test_malformed_dict_rejected():
    with pytest.raises(NerveError):
        Nerve.from_dict({"faces": [[0, 1, 2]]})
