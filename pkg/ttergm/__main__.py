"""Allow ``python -m ttergm``."""

import sys

from .cli import main

sys.exit(main())
