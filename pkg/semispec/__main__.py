import sys

from semispec.cli import main

sys.exit(main())
