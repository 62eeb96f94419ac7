import numpy as np
import pytest

from tunnelsplit.packets import PacketSpec, build_mode_table, diagnostics_series
from tunnelsplit.potential import make_rectangular

CANONICAL_TIMES = np.linspace(0.0, 80.0, 81)


@pytest.fixture(scope="session")
def canonical_spec():
    return make_rectangular(1.0, 2.0, -9.0)


@pytest.fixture(scope="session")
def canonical_packet():
    return PacketSpec(k0=1.0, sigma_k=0.05, x0=-60.0)


@pytest.fixture(scope="session")
def canonical_table(canonical_spec, canonical_packet):
    return build_mode_table(canonical_spec, canonical_packet)


@pytest.fixture(scope="session")
def canonical_series(canonical_table):
    return diagnostics_series(canonical_table, CANONICAL_TIMES)


@pytest.fixture(scope="session")
def free_table(canonical_packet):
    return build_mode_table(make_rectangular(0.0, 2.0, -9.0), canonical_packet)
