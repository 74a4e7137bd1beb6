import os

import numpy as np
import pytest
from hypothesis import settings

from falforge.nerve import genus2, subdivide_with_dimer, tetrahedron, torus7
from falforge.packing import develop_layout, solve_packing_label

SEED = int(os.environ.get("FALFORGE_SEED", "20240611"))

settings.register_profile("falforge", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("falforge")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


BASES = {"tetrahedron": tetrahedron, "torus7": torus7, "genus2": genus2}


@pytest.fixture(scope="session")
def packed():
    """Label and layout for each base nerve and its subdivision, computed once."""
    out = {}
    for name, make in BASES.items():
        N = make()
        L = solve_packing_label(N)
        out[name] = (N, None, L, develop_layout(N, L))
        S, D = subdivide_with_dimer(N)
        LS = solve_packing_label(S)
        out[name + "/sub"] = (S, D, LS, develop_layout(S, LS))
    return out


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = item.name
    if rep.when == "call" and name.startswith("test_criterion_"):
        k = int(name.split("_")[2])
        doc = (item.function.__doc__ or name).strip().splitlines()[0]
        ACCEPTANCE[k] = ("PASS" if rep.passed else "FAIL", doc)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE):
        verdict, doc = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {verdict}  {doc}")
