import pathlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ROOT = pathlib.Path(__file__).resolve().parent.parent
KBS = ROOT / "kbs"
HORN = pathlib.Path(__file__).resolve().parent / "fixtures" / "horn"


@pytest.fixture(scope="session")
def weather_kb():
    from kbmc.parser import parse_kb

    return parse_kb((KBS / "weather.ikb").read_text(), "weather.ikb")


@pytest.fixture(scope="session")
def picnic_kb():
    from kbmc.parser import parse_kb

    return parse_kb((KBS / "picnic.ikb").read_text(), "picnic.ikb")


@pytest.fixture(scope="session")
def inversion_kb():
    from kbmc.parser import parse_kb

    return parse_kb((KBS / "inversion.ikb").read_text(), "inversion.ikb")


@pytest.fixture(scope="session")
def inversion_kb_nofact():
    from kbmc.parser import parse_kb

    text = (KBS / "inversion.ikb").read_text().replace("fact (inversion today).\n", "")
    return parse_kb(text, "inversion-nofact.ikb")
