import sys

from rotsync.cli import main

sys.exit(main())
