import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
SAMPLE_EDL = ROOT / "samples" / "leaky.edl"

TEST_STRUCT = """\
typedef struct {
  uint64_t val1;
  uint8_t  val2;
  /* 7-byte padding */
  uint64_t val3;
} test_struct;
"""


@pytest.fixture
def sample_text():
    return SAMPLE_EDL.read_text()


@pytest.fixture
def sample(sample_text):
    from padguard import parse, resolve

    return resolve(parse(sample_text))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
