"""Shared fixtures.

The expensive pipeline artifacts (homoclinic sets, heteroclinic sets,
tube cuts) are session-scoped so the acceptance suite and the module
tests share one computation.  The acceptance tests request them first
(alphabetical collection order), so their construction cost lands
inside the timed acceptance windows.
"""

import numpy as np
import pytest

from saddletubes.models import PhysicalPendulum, PointMassPendulum, PCR3BP
from saddletubes.equilibria import equilibrium_by_label
from saddletubes.integrate import IntegratorConfig
from saddletubes.upo import upo_at_energy
from saddletubes.connections import (find_homoclinics,
                                     heteroclinics_between_saddles)
from saddletubes.itinerary import build_graph


@pytest.fixture(scope="session")
def physical_model():
    return PhysicalPendulum()


@pytest.fixture(scope="session")
def point_mass_model():
    return PointMassPendulum()


@pytest.fixture(scope="session")
def tbp_model():
    return PCR3BP()


@pytest.fixture(scope="session")
def du_saddle(physical_model):
    return equilibrium_by_label(physical_model, "DownUp")


@pytest.fixture(scope="session")
def ud_saddle(physical_model):
    return equilibrium_by_label(physical_model, "UpDown")


@pytest.fixture(scope="session")
def cut_cfg():
    # tube globalization tolerance: keeps the cut-energy invariant (1e-8)
    # satisfied with ~3 decades of margin while staying affordable
    return IntegratorConfig(rel_tol=1e-10, abs_tol=1e-10)


@pytest.fixture(scope="session")
def du_upo_007(physical_model, du_saddle):
    return upo_at_energy(physical_model, du_saddle, -0.07)


@pytest.fixture(scope="session")
def homs_007(physical_model, du_upo_007, cut_cfg):
    return find_homoclinics(physical_model, du_upo_007, n_seeds=160,
                            cut_cfg=cut_cfg)


@pytest.fixture(scope="session")
def hom_graph_007(physical_model, du_upo_007, homs_007):
    return build_graph([du_upo_007], homs_007)


@pytest.fixture(scope="session")
def hets_02(physical_model, du_saddle, ud_saddle, cut_cfg):
    return heteroclinics_between_saddles(physical_model, du_saddle,
                                         ud_saddle, 0.2, n_seeds=160,
                                         cut_cfg=cut_cfg)


# --- acceptance-criteria reporting -----------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def acceptance_record():
    def record(criterion, passed, detail=""):
        _ACCEPTANCE[criterion] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[num]
        line = "criterion %d: %s" % (num, "PASS" if ok else "FAIL")
        if detail:
            line += " - " + detail
        terminalreporter.write_line(line)
