import pytest

from adapter_helpers import write_manifest, write_training_config


@pytest.fixture
def fixture_run(tmp_path):
    manifest = tmp_path / "train.jsonl"
    config = tmp_path / "training_config.json"
    rows = write_manifest(manifest)
    write_training_config(config)
    return manifest, config, rows
