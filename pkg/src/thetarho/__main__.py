import sys

from thetarho.cli import main

sys.exit(main())
