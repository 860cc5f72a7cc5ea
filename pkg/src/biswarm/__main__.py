import sys

from biswarm.cli import main

sys.exit(main())
