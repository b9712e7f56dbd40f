import time

import pytest

from kvblowup.cascade import cascade_sequence


@pytest.fixture(scope="session")
def cascade_levels():
    """Levels 0..8 with all exact checks, plus the wall time spent building them."""
    start = time.perf_counter()
    levels = cascade_sequence(8)
    return levels, time.perf_counter() - start
