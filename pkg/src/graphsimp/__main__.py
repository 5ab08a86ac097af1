import sys

from graphsimp.cli import main

sys.exit(main())
