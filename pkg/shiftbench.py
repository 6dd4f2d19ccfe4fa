#!/usr/bin/env python3
"""
shiftbench command-line runner.

Usage:
  python shiftbench.py experiment 3 --workers 8
  python shiftbench.py --help
"""

import sys
from pathlib import Path

SRC_DIR = Path(__file__).resolve().parent / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from expcli.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
