#!/usr/bin/env python
"""Replay both bundled model trace sets and print their benchmark reports."""
import argparse

from carobo.bench import bundled_trace_dir, default_suite_path, load_benchmark, replay_pair, run_suite
from carobo.suite_data import MODELS


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite", default=str(default_suite_path()))
    args = parser.parse_args()
    specs = load_benchmark(args.suite)
    for model in MODELS:
        report = run_suite(specs, replay_pair(bundled_trace_dir(model)))
        print(f"== {model} ==")
        print(report.to_text())
        print()


if __name__ == "__main__":
    main()
