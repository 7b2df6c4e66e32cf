import sys

from twint.main import main

if __name__ == "__main__":
    # Convenience launcher: `python run.py dist --family twin-t --nu 4 --action cdf --x 0`
    sys.exit(main())
