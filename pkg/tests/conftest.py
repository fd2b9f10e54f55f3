import pytest

from internal_bores import dj
from internal_bores.conjugate_flow import make_parameters


@pytest.fixture(scope="session")
def params21():
    return make_parameters(2.0, 1.0)


@pytest.fixture(scope="session")
def small_bore(params21):
    """Converged front at lam* - 0.02 on the default grid (L = 12/kappa)."""
    lam = params21.lambda_star - 0.02
    grid = dj.make_grid(params21, lam)
    return dj.newton_solve(dj.seed_from_mcc(params21, lam, grid))


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, tuple[str, str]] = {}


def _criterion_number(nodeid: str) -> int | None:
    name = nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in nodeid or not name.startswith("test_criterion_"):
        return None
    return int(name.split("_")[2])


def pytest_runtest_logreport(report):
    n = _criterion_number(report.nodeid)
    if n is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _CRITERIA[n] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}" + (f" ({detail})" if detail else ""))
