#!/usr/bin/env python
"""Run the bundled suite with the oracle policy and print the report.

Every scenario should come out as a success; this is the quick end-to-end
health check for the simulator, the agents and the judge together.
"""
import argparse
import sys
import time

from carobo.bench import default_suite_path, load_benchmark, run_suite, scripted_pair


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite", default=str(default_suite_path()))
    parser.add_argument("--transport", default="direct", choices=("direct", "local:", "tcp:"))
    parser.add_argument("--policy", default="oracle")
    args = parser.parse_args()

    specs = load_benchmark(args.suite)
    started = time.perf_counter()
    report = run_suite(specs, scripted_pair(args.policy), transport=args.transport)
    elapsed = time.perf_counter() - started
    print(report.to_text())
    print(f"\n{len(specs)} scenarios in {elapsed:.2f}s over {args.transport}")
    return 0 if report.overall_rate == 100.0 else 1


if __name__ == "__main__":
    sys.exit(main())
