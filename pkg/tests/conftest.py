import pathlib

import pytest

from lexfusion.sememes import load_lexicon

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def mini_lexicon_path():
    return DATA_DIR / "mini_lexicon.json"


@pytest.fixture(scope="session")
def mini_lexicon(mini_lexicon_path):
    return load_lexicon(mini_lexicon_path)
