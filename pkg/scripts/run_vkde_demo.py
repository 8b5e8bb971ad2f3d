#!/usr/bin/env python3
"""Run the vkde-demo scenario; extra flags are passed through to the CLI."""
import sys

from adaptconv.cli import main

if __name__ == "__main__":
    sys.exit(main(["vkde-demo", *sys.argv[1:]]))
