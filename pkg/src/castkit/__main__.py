"""Allow `python -m castkit`."""

import sys

from .cli import main

sys.exit(main())
