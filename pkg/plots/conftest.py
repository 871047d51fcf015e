"""Make render.py importable from the tests next door."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
