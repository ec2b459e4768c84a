import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qamgame.phy import PacketConfig, default_tcm_config  # noqa: E402


@pytest.fixture(scope="session")
def pkt():
    return PacketConfig(100)


@pytest.fixture(scope="session")
def tcm():
    return default_tcm_config()
