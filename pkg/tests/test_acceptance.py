"""Acceptance criteria 1 to 9, each one test printing a single verdict line."""

import json
import math
import time

import numpy as np

from falforge.cli import main
from falforge.filling import (
    CuspShape,
    aggregate_length,
    crossing_count,
    min_crossings,
    normalized_length,
)
from falforge.geometry import bilinear, mobius_apply, normalize_to_infinity
from falforge.io import dumps
from falforge.link import merging_circles, reduce_to_knot, toggle_twist, trace_components
from falforge.nerve import (
    Dimer,
    genus2,
    random_nerve,
    subdivide_with_dimer,
    tetrahedron,
    torus7,
    validate_dimer,
)
from falforge.packing import angle_sum, develop_layout, solve_packing_label
from falforge.scoop import build_scoop, rectangle_shape

from test_link import random_diagram, twisted_arcs, union_find_count

TWO_PI = 2 * math.pi
E1 = math.e - 1


def verdict(k, ok, detail):
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _named_nerves():
    S, _ = subdivide_with_dimer(tetrahedron())
    return {"tetrahedron": tetrahedron(), "subdivided tetrahedron": S, "torus7": torus7(), "genus2": genus2()}


def test_criterion_1_packing_solver():
    """Packing residual < 1e-10 on the four named nerves, rechecked independently, < 10 s each."""
    worst, slowest = 0.0, 0.0
    for N in _named_nerves().values():
        t = time.perf_counter()
        L = solve_packing_label(N)
        slowest = max(slowest, time.perf_counter() - t)
        worst = max(worst, max(abs(angle_sum(N, L, v) - TWO_PI) for v in range(N.n_vertices)))
    verdict(1, worst < 1e-10 and slowest < 10.0, f"max residual {worst:.2e}, slowest solve {slowest:.2f} s")


def test_criterion_2_layout_fidelity():
    """Tangency and dual orthogonality residuals < 1e-8 on the four named nerves."""
    tang, orth = 0.0, 0.0
    for N in _named_nerves().values():
        Lyt = develop_layout(N, solve_packing_label(N))
        for f, trip in enumerate(Lyt.face_circles):
            for k in range(3):
                tang = max(tang, abs(bilinear(trip[k], trip[(k + 1) % 3]) + 1.0))
                orth = max(orth, abs(bilinear(trip[k], Lyt.dual_circles[f])))
    verdict(2, tang < 1e-8 and orth < 1e-8, f"tangency {tang:.2e}, orthogonality {orth:.2e}")


def test_criterion_3_dimer_construction(rng):
    """100 random nerves: subdivision yields a valid dimer with exactly F/2 edges."""
    bad = 0
    for k in range(100):
        base = [tetrahedron, torus7, genus2][k % 3]()
        S, D = subdivide_with_dimer(random_nerve(rng, int(rng.integers(0, 30)), base))
        bad += not (validate_dimer(S, D) and 2 * len(D) == len(S.faces))
    verdict(3, bad == 0, f"{100 - bad}/100 valid")


def _scoop_cases():
    N = tetrahedron()
    idx = N.edge_index
    yield N, Dimer.of([idx[(0, 1)], idx[(2, 3)]])
    for base in (tetrahedron, torus7, genus2):
        yield subdivide_with_dimer(base())
    rng = np.random.default_rng(7)
    for k in range(6):
        yield subdivide_with_dimer(random_nerve(rng, int(rng.integers(0, 12)), [tetrahedron, torus7][k % 2]()))


def test_criterion_4_scoop_audits():
    """Ideal vertices 4-valent and alternating, exact counts, rectangles orthogonal within 1e-8."""
    worst_angle, failures, cases = 0.0, [], 0
    for N, D in _scoop_cases():
        cases += 1
        S = build_scoop(N, D, develop_layout(N, solve_packing_label(N)))
        if (len(S.white_faces), len(S.black_faces), len(S.ideal_vertices)) != (
                N.n_vertices, len(N.faces), len(N.edges)):
            failures.append("counts")
        for v, iv in enumerate(S.ideal_vertices):
            if [c for c, _ in iv.faces] != ["white", "black", "white", "black"] or len(set(iv.faces)) != 4:
                failures.append(f"valence at {v}")
            phi = normalize_to_infinity(iv.point)
            W1, W2, B1, B2 = (mobius_apply(phi, C) for C in iv.circles)
            for X, Y in ((W1, B1), (W1, B2), (W2, B1), (W2, B2)):
                cos = abs((X.b * Y.b.conjugate()).real) / (abs(X.b) * abs(Y.b))
                worst_angle = max(worst_angle, abs(math.acos(min(1.0, cos)) - math.pi / 2))
            rectangle_shape(S, v)
    verdict(4, not failures and worst_angle < 1e-8,
            f"{cases} complexes, worst right-angle error {worst_angle:.2e}, defects {failures[:3]}")


def test_criterion_5_link_tracing():
    """500 random diagrams: merging toggles drop the count by exactly 1; reduction ends with one knot."""
    rng = np.random.default_rng(5)
    bad = []
    for trial in range(500):
        G, F = random_diagram(rng, subdivided=trial % 4 != 0)
        k = trace_components(F).count
        if k != union_find_count(G, twisted_arcs(F)):
            bad.append((trial, "oracle"))
        for i in merging_circles(F):
            T = toggle_twist(F, i)
            if trace_components(T).count != k - 1 or union_find_count(G, twisted_arcs(T)) != k - 1:
                bad.append((trial, i))
        if trace_components(reduce_to_knot(F)).count != 1:
            bad.append((trial, "reduce"))
    verdict(5, not bad, f"500 diagrams, failures {bad[:3]}")


def test_criterion_6_normalized_length():
    """L >= sqrt(c) on 10^4 samples, equality within 1e-9 exactly when w/b = c, exact minimum for c <= 100."""
    rng = np.random.default_rng(6)
    bad = 0
    for k in range(10_000):
        c = int(rng.integers(1, 101))
        b = float(np.exp(rng.uniform(-5, 5)))
        w = c * b if k % 2 else float(np.exp(rng.uniform(-5, 5)))
        L = normalized_length(CuspShape(w, b), c)
        x = w / b
        equal = abs(L - math.sqrt(c)) < 1e-9
        if L < math.sqrt(c) * (1 - 1e-15):
            bad += 1
        elif k % 2 and not equal:
            bad += 1
        elif abs(x - c) > 1e-3 * c and equal:
            bad += 1
    exact = all(normalized_length(CuspShape(float(c), 1.0), c) == math.sqrt(c) for c in range(1, 101))
    verdict(6, bad == 0 and exact, f"{bad} violations, exact minimum {exact}")


def test_criterion_7_effective_planner():
    """Threshold 733 at (delta=1, epsilon=e-1, n=6) and monotone over a 20x20 grid."""
    C = min_crossings(E1, 1.0, 6).C
    deltas = np.linspace(0.1, 5.0, 20)
    epss = np.linspace(0.05, 5.0, 20)
    grid = np.array([[min_crossings(e, d, 6).C for e in epss] for d in deltas])
    monotone = bool(np.all(np.diff(grid, axis=0) <= 0) and np.all(np.diff(grid, axis=1) <= 0))
    verdict(7, C == 733 and monotone, f"C = {C}, monotone {monotone}")


def test_criterion_8_slope_arithmetic():
    """Crossing parity follows the twist flag on [-100, 100]; n copies of sqrt(C) aggregate to sqrt(C/n)."""
    parity = all(crossing_count(n, t) % 2 == int(t) for n in range(-100, 101) for t in (False, True))
    err = max(abs(aggregate_length([math.sqrt(733)] * n) - math.sqrt(733 / n)) for n in range(1, 101))
    verdict(8, parity and err < 1e-12, f"parity {parity}, aggregate error {err:.1e}")


def test_criterion_9_end_to_end(tmp_path):
    """Subdivided tetrahedron: 6 circles, 12 strands, one knot, passing certificate, byte-identical reruns."""
    src = tmp_path / "tet.json"
    src.write_text(dumps(tetrahedron().to_dict()))
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        codes = (main(["build", "--input", str(src), "--out", str(out)]),
                 main(["plan", "--input", str(out / "fal.json"), "--out", str(out),
                       "--epsilon", repr(E1), "--bigR", "1.0", "--delta", "1.0"]))
        files = sorted(p.name for p in out.iterdir())
        runs.append((codes, {f: (out / f).read_bytes() for f in files}))
    (codes, art), (_, art2) = runs
    fal = json.loads(art["fal.json"])
    plan = json.loads(art["plan.json"])
    cert = json.loads(art["certificate.json"])
    share = math.ceil(733 / 6)
    per_circle = all(s["c"] >= share and s["c"] % 2 == int(s["half_twist"]) for s in plan["circles"])
    ok = (codes == (0, 0) and len(fal["crossing_circles"]) == 6 and len(fal["strand_arcs"]) == 12
          and fal["component_count"] == 1 and cert["passed"] and plan["threshold"] == 733 and per_circle
          and art == art2)
    verdict(9, ok, f"circles {len(fal['crossing_circles'])}, strands {len(fal['strand_arcs'])}, "
                   f"components {fal['component_count']}, certificate {cert['passed']}, "
                   f"min c {min(s['c'] for s in plan['circles'])}, identical {art == art2}")
