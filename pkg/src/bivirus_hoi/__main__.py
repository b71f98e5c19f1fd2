import sys

from bivirus_hoi.cli import main

sys.exit(main())
