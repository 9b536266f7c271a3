import sys

from cpbtem.cli import main

sys.exit(main())
