"""
Salt package
"""
import sys

if sys.version_info < (3, 6):
    raise SystemExit("Salt requires Python 3.6 or newer")
