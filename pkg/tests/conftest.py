import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from ptwitness import SparseState

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SQ = np.sqrt(0.5)


def sparse_states(modes: int, max_occ: int = 3, max_kets: int = 4):
    """Hypothesis strategy for normalized sparse states."""
    ket = st.tuples(*[st.integers(0, max_occ)] * modes)
    amp = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
    entries = st.dictionaries(ket, amp, min_size=1, max_size=max_kets)
    entries = entries.filter(lambda d: sum(abs(a) ** 2 for a in d.values()) > 1e-3)
    return entries.map(lambda d: SparseState.from_kets(d.items()))


def random_state(rng, modes: int, max_occ: int = 3, count: int | None = None) -> SparseState:
    count = count or int(rng.integers(1, 5))
    count = min(count, (max_occ + 1) ** modes)
    kets = {}
    while len(kets) < count:
        occ = tuple(int(x) for x in rng.integers(0, max_occ + 1, size=modes))
        kets[occ] = complex(rng.normal(), rng.normal())
    return SparseState.from_kets(kets.items())


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


@pytest.fixture
def bell():
    return SparseState.from_kets([((0, 1), SQ), ((1, 0), SQ)])


_VERDICTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line; they are echoed together at the end of the run."""
    lines = request.config.stash[_VERDICTS_KEY]

    def record(criterion: int, ok: bool, detail: str) -> None:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
