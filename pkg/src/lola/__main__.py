import sys

from lola.cli import main

sys.exit(main())
