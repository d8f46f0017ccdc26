import sys

from ddadapt.cli import main

sys.exit(main())
