#!/usr/bin/env python
import os
import sys


def main():
    # run from anywhere: config/ and rulecache/ live next to this script
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from rulecache.cli import main as cli_main
    return cli_main(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
