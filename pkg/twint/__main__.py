import sys

from twint.main import main

sys.exit(main())
