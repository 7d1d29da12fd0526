#!/usr/bin/env python
"""Regenerate the bundled benchmark data (worlds, suite file, replay traces).

The generated files are committed; rerun this after editing suite_data.py.
"""
import argparse

from carobo.suite_data import write_all


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=None, help="override the package data directory")
    args = parser.parse_args()
    base = write_all(args.data_dir)
    print(f"benchmark data written under {base}")


if __name__ == "__main__":
    main()
