#!/usr/bin/env python3
"""Run the verify scenario; extra flags are passed through to the CLI."""
import sys

from adaptconv.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", *sys.argv[1:]]))
