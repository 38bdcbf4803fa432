import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "devfp", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("devfp")

sys.path.insert(0, str(Path(__file__).parent))  # pcapbuild / corpus helpers

from corpus import (  # noqa: E402
    REFERENCE_REGISTRY,
    TRAINING_REGISTRY,
    build_reference_capture,
    build_training_capture,
)


@pytest.fixture(scope="session")
def reference_pcap_bytes() -> bytes:
    return build_reference_capture()


@pytest.fixture(scope="session")
def training_pcap_bytes() -> bytes:
    return build_training_capture()


@pytest.fixture()
def reference_paths(tmp_path, reference_pcap_bytes):
    pcap_path = tmp_path / "reference.pcap"
    pcap_path.write_bytes(reference_pcap_bytes)
    registry_path = tmp_path / "devices.tsv"
    registry_path.write_text(REFERENCE_REGISTRY, encoding="utf-8")
    return pcap_path, registry_path


@pytest.fixture()
def training_paths(tmp_path, training_pcap_bytes):
    pcap_path = tmp_path / "training.pcap"
    pcap_path.write_bytes(training_pcap_bytes)
    registry_path = tmp_path / "training_devices.tsv"
    registry_path.write_text(TRAINING_REGISTRY, encoding="utf-8")
    return pcap_path, registry_path
