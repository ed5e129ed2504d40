"""
Main entry point for TDM Lab.

Allows running the package as a module:
    python -m tdm_lab [arguments]
"""

import sys

from tdm_lab.cli import main

if __name__ == '__main__':
    sys.exit(main())
