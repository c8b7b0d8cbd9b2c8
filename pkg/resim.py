"""
resim command line entry point.

Usage:
    python resim.py --help
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
