import sys

from thermobeam.cli import main

sys.exit(main())
