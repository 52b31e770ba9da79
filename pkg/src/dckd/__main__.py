import sys

from dckd.cli import main

sys.exit(main())
