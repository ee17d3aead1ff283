import warnings
from pathlib import Path

import pytest

from kinetype import layout_text, load_font
from kinetype.synthetic import bouncing_disk, static_disk, translating_disk

FONT_PATH = Path(__file__).parent / "fixtures" / "fonts" / "DejaVuSans.ttf"


@pytest.fixture(scope="session")
def font_path() -> Path:
    return FONT_PATH


@pytest.fixture(scope="session")
def font():
    return load_font(FONT_PATH)


@pytest.fixture(scope="session")
def sleepy_layout(font):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # 'l' is a known few-point glyph
        return layout_text("sleepy", font)


@pytest.fixture(scope="session")
def wakey_layout(font):
    return layout_text("wakey", font)


@pytest.fixture(scope="session")
def bounce():
    return bouncing_disk()


@pytest.fixture(scope="session")
def slide():
    return translating_disk()


@pytest.fixture(scope="session")
def still():
    return static_disk()
