import sys

from decoder.main import main

sys.exit(main())
