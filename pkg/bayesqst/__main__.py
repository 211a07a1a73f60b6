import sys

from bayesqst.main import main

sys.exit(main())
