"""``python3 -m cdlstm``."""

import sys

from .cli import main

sys.exit(main())
