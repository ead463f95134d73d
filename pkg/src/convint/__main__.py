import sys

from convint.cli import main

sys.exit(main())
