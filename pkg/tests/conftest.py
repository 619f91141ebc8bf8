import pytest

from corpus_fixtures import build_workspace


@pytest.fixture
def workspace(tmp_path):
    return build_workspace(tmp_path)
