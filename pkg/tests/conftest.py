import math

import pytest

from energybill.distributions import QueryVolumeDistribution as Q

# every continuous family at mean 1, Pareto at a few shapes
CONTINUOUS = [Q.uniform(1.0), Q.pareto(1.0, 2.5), Q.pareto(1.0, 4.0), Q.pareto(1.0, 8.0),
              Q.exponential(1.0), Q.half_gaussian(1.0)]
ALL = CONTINUOUS + [Q.fixed(1.0)]


def ids(ds):
    return [str(d) for d in ds]


def make(family, mean, alpha=None):
    return Q(family, mean, alpha if family == "pareto" else None)


@pytest.fixture(params=CONTINUOUS, ids=ids(CONTINUOUS))
def continuous(request):
    return request.param


@pytest.fixture(params=ALL, ids=ids(ALL))
def any_dist(request):
    return request.param


def rel_close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b)) or (a == 0 and abs(b) < 1e-300)


# measured deployment constants
G_E, I_E = 1.78e-6, 6.10e-7
G_B, I_B, P_B = 2.09e-10, 6.27e-11, 6.27e-10
LN11 = math.log(11.0)


# acceptance verdicts, echoed once more in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
