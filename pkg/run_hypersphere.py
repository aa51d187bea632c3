#!/usr/bin/env python3
"""
Entry script: python run_hypersphere.py <command> [options]
"""
import sys

from hypersphere.cli import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
