import sys
from pathlib import Path

# Make the oracle helpers importable as a plain module.
sys.path.insert(0, str(Path(__file__).parent))


def pytest_addoption(parser):
    parser.addoption(
        "--regen-goldens",
        action="store_true",
        default=False,
        help="rewrite golden report files from the current implementation",
    )
