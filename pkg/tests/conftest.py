import numpy as np
import pytest

from gapcert.domain import disk, interval, square
from gapcert.elliptic_spectrum import assemble, low_spectrum
from gapcert.fields import (
    CutoffRotationalField,
    QuadraticGradientField,
    ZeroVectorField,
    make_scalar_field,
)
from gapcert.modulus import find_sigma2
from gapcert.operator_model import OperatorSpec

_ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] acceptance criterion {number}: {detail}"
    _ACCEPTANCE_LINES.append((number, line))
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sigma2_d1():
    return find_sigma2(1.0)


@pytest.fixture(scope="session")
def sigma2_d2():
    return find_sigma2(2.0)


@pytest.fixture(scope="session")
def interval_operator():
    return OperatorSpec(domain=interval(1.0), B=ZeroVectorField(dim=1),
                        c=make_scalar_field("zero", dim=1))


@pytest.fixture(scope="session")
def interval_spectra(interval_operator):
    """(coarse, fine) spectra of the slope-free interval operator."""
    return (low_spectrum(assemble(interval_operator, 1 / 256), 3),
            low_spectrum(assemble(interval_operator, 1 / 512), 3))


@pytest.fixture(scope="session")
def phi_operator():
    phi = QuadraticGradientField(Q=0.8 * np.eye(2))
    return OperatorSpec(domain=square(1.0), B=phi,
                        c=make_scalar_field("quadratic", dim=2, A=np.eye(2).tolist()),
                        phi=phi)


@pytest.fixture(scope="session")
def phi_spectra(phi_operator):
    return (low_spectrum(assemble(phi_operator, 1 / 48), 3),
            low_spectrum(assemble(phi_operator, 1 / 96), 3))


@pytest.fixture(scope="session")
def rotating_disk_operator():
    return OperatorSpec(domain=disk(1.0),
                        B=CutoffRotationalField(omega=0.5, R0=0.85),
                        c=make_scalar_field("zero", dim=2))


@pytest.fixture(scope="session")
def rotating_disk_spectra(rotating_disk_operator):
    return (low_spectrum(assemble(rotating_disk_operator, 2 / 64), 5),
            low_spectrum(assemble(rotating_disk_operator, 2 / 128), 5))
