import sys

from doorscape.cli import main

sys.exit(main())
