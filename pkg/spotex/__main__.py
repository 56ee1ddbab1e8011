"""Allow running spotex as: python -m spotex"""

import sys

from spotex.cli import main

sys.exit(main())
