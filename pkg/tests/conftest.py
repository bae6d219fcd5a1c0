import pytest

from synthdata import load_bundle_from, make_synthetic_files


@pytest.fixture
def synth_paths(tmp_path):
    return make_synthetic_files(tmp_path)


@pytest.fixture
def synth_bundle(synth_paths):
    return load_bundle_from(synth_paths)


@pytest.fixture
def sparse_bundle(tmp_path):
    return load_bundle_from(make_synthetic_files(tmp_path, sparse=True, seed=7))
