import numpy as np
import pytest

from robustnet.network import Network, build_path_set
from robustnet.synthetic import make_demands, make_network


def triangle(capacity=0.0, cost=1.0):
    # edge ids follow the commodity order {0,1}, {1,2}, {0,2}
    return Network(("a", "b", "c"), ((0, 0, 1, capacity, cost), (1, 1, 2, capacity, cost),
                                     (2, 0, 2, capacity, cost)))


# demand order follows generate_commodities: d_01, d_02, d_12
D1 = np.array([1.0, 1.0, 1.0])
D2 = np.array([2.0, 0.0, 1.0])


@pytest.fixture
def tri():
    net = triangle()
    return net, build_path_set(net)


@pytest.fixture(scope="session")
def small():
    net = make_network(5, 7, seed=3)
    paths = build_path_set(net)
    train = make_demands(net, 40, seed=4, tag="train")
    return net, paths, train


_ACCEPTANCE = []


@pytest.fixture
def criterion(request, capsys):
    """Record and print a one-line PASS/FAIL verdict for an acceptance criterion.

    Usage: ``with criterion(3, "conservativeness chain") as note: ...``; call
    ``note("...")`` to attach measured values to the verdict line.
    """
    import contextlib

    @contextlib.contextmanager
    def run(number, title):
        details = []
        try:
            yield details.append
        except BaseException as exc:
            line = f"[FAIL] criterion {number}: {title}" + (f" ({'; '.join(details)})" if details else "")
            line += f" -- {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            _emit(capsys, line)
            raise
        line = f"[PASS] criterion {number}: {title}" + (f" ({'; '.join(details)})" if details else "")
        _emit(capsys, line)

    return run


def _emit(capsys, line):
    _ACCEPTANCE.append(line)
    with capsys.disabled():
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
