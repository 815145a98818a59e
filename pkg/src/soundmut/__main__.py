"""Allow ``python -m soundmut``."""

import sys

from soundmut.cli import main

sys.exit(main())
