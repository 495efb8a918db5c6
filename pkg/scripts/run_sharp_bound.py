#!/usr/bin/env python3
"""Run the end-to-end sharp-bound verdicts for the three stock scenarios
(free quartic operator, second-order operator with a bounded well, quartic
operator with a confining positive potential) and print the verdict blocks.

Usage: python scripts/run_sharp_bound.py [--config PATH]
With --config, runs that single configuration instead of the stock set.
"""

import argparse
import sys
import time

from heatlab.config import config_from_text, load_config
from heatlab.experiments import verify_perturbed_bound, verify_sharp_bound

STOCK = {
    "quartic-free": """
scenario = verify
[operator]
m = 2
n = 1
domain = -4, 4
grid_n = 800
a = "1"
[verify]
tolerance = 0.05
t_list = 0.001, 0.002, 0.004, 0.01
pair_min = 0.2
pair_max = 1.0
pair_count = 40
M_list = 5
distance_method = dM
""",
    "well-m1": """
scenario = verify
[operator]
m = 1
n = 1
domain = -8, 8
grid_n = 800
a = "1"
potential = "-exp(-x^2)"
[verify]
tolerance = 0.05
t_list = 0.04, 0.08, 0.16, 0.32
pair_min = 0.2
pair_max = 1.2
pair_count = 40
M_list = 5
distance_method = dM
""",
    "quartic-confining": """
scenario = verify
[operator]
m = 2
n = 1
domain = -4, 4
grid_n = 800
a = "1"
potential = "x^4"
[verify]
tolerance = 0.05
t_list = 0.001, 0.002, 0.004, 0.01
pair_min = 0.2
pair_max = 1.0
pair_count = 40
M_list = 5
distance_method = dM
""",
}


def run_one(name, cfg):
    t0 = time.time()
    fn = verify_perturbed_bound if cfg.verify.target == "perturbed" else verify_sharp_bound
    verdict = fn(cfg)
    print(f"=== {name} ({time.time() - t0:.1f}s) ===")
    print(verdict.render())
    print()
    return verdict.passed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    if args.config:
        ok = run_one(args.config, load_config(args.config))
    else:
        ok = all(run_one(name, config_from_text(text)) for name, text in STOCK.items())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
