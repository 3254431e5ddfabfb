from pathlib import Path

import pytest

from chronoverify import parse_model
from chronoverify.loader import initial_states, load_model
from chronoverify.model import TIME

CORPUS = Path(__file__).resolve().parents[1] / "src" / "chronoverify" / "corpus"

# one closed Deadline, one Timer and the boiler, all owned by thread `main`
SMALL = """
type Boiler timed {
  volatile int level in 0..100;
  volatile bool on;
  invariant level == old(level) + (old(on) ? dT : 0 - dT);
  approves(owner, on);
  dynamics level = old(level) + (old(on) ? dT : 0 - dT);
}

object d: Deadline { owner = main; }
object tm: Timer { owner = main; }
object boiler: Boiler { level = 50; on = true; closed = true; owner = main; }

thread main { }
"""


def corpus(name: str) -> Path:
    return CORPUS / name


def state_of(model, updates=None, base=None):
    """First initial state with ``updates`` applied; keeps time.timed consistent."""
    s = base if base is not None else initial_states(model)[0]
    updates = dict(updates or {})
    s = s.set(updates)
    if (TIME, "timed") not in updates:
        timed = frozenset(o for o in model.timed_objects()
                          if o != TIME and s.get(o, "closed"))
        s = s.set({(TIME, "timed"): timed})
    return s


@pytest.fixture(scope="session")
def small():
    return parse_model(SMALL)


@pytest.fixture(scope="session")
def boiler_model():
    return load_model(corpus("boiler_deadline.tvk"))


@pytest.fixture(scope="session")
def timer_model():
    return load_model(corpus("boiler_timer.tvk"))


# acceptance lines, printed at the end of the run whatever the capture mode
ACCEPTANCE = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
