import sys

from advjam.cli import main

sys.exit(main())
