import numpy as np
import pytest

from trescafem.assembly import ElasticMaterial, assemble_body_load, assemble_stiffness
from trescafem.data import disk_f, disk_g2, disk_z0
from trescafem.mesh import build_boundary_topology, generate_disk_mesh

MU, LAM = 0.3846, 0.5769


class DiskCase:
    """Assembled disk example at a given resolution."""

    def __init__(self, n_boundary: int):
        self.mesh = generate_disk_mesh(n_boundary)
        self.topology = build_boundary_topology(self.mesh)
        self.material = ElasticMaterial(MU, LAM)
        self.system = assemble_stiffness(self.mesh, self.material, self.topology)
        self.b = assemble_body_load(self.mesh, disk_f)
        self.g1 = np.full(self.topology.n_neumann, 2.0)
        self.g2 = self.topology.evaluate(disk_g2)
        self.z0 = self.topology.evaluate(disk_z0)
        self.g = self.g1 + self.z0 * self.g2


@pytest.fixture(scope="session")
def disk128():
    return DiskCase(128)


@pytest.fixture(scope="session")
def disk32():
    return DiskCase(32)


_ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome.upper(), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")
