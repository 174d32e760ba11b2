import inspect
from pathlib import Path

import pytest

import utils
from errors import UsageError
from utils import parse_complex

ROOT = Path(__file__).resolve().parent.parent
MODULES = ("cli.py", "hamiltonian.py", "kernels.py", "numerics.py", "zeros.py", "zeta_engine.py")


# Test 1: complex parsing
@pytest.mark.parametrize(
    "text, expected",
    [("2+0i", 2 + 0j), ("-1.5-3i", -1.5 - 3j), ("0.5 + 14.1i", 0.5 + 14.1j), ("3", 3 + 0j)],
)
def test_parse_complex(text, expected):
    assert parse_complex(text) == expected


def test_parse_complex_rejects_words():
    with pytest.raises(UsageError):
        parse_complex("two")


# Test 2: every public helper has a caller
def test_public_helpers_are_used():
    sources = "\n".join((ROOT / name).read_text() for name in MODULES)
    helpers = [
        name
        for name, obj in inspect.getmembers(utils, inspect.isfunction)
        if not name.startswith("_") and obj.__module__ == "utils"
    ]
    assert helpers
    unused = [name for name in helpers if name not in sources]
    assert unused == []
