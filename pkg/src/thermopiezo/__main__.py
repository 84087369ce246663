"""Entry point for running the toolkit as a module: python -m thermopiezo"""

import sys

from thermopiezo.main import main

if __name__ == "__main__":
    sys.exit(main())
