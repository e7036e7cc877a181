import sys

from aqlbench.cli import main

sys.exit(main())
