"""Run benchmark configs through the ``bench`` command.

    python scripts/run_benchmarks.py                  # desk-scale configs
    python scripts/run_benchmarks.py --offline        # n = 8 configs (hours)
    python scripts/run_benchmarks.py configs/x.json   # explicit configs
"""
import argparse
import sys
from pathlib import Path

from obsdecomp.cli import main

ROOT = Path(__file__).resolve().parent.parent


def parse_args():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    p.add_argument("configs", nargs="*", type=Path)
    p.add_argument("--offline", action="store_true", help="run the n = 8 configs")
    p.add_argument("--out-dir", default=str(ROOT / "runs"))
    p.add_argument("--threads", type=int, default=1)
    return p.parse_args()


def main_():
    args = parse_args()
    configs = args.configs or sorted((ROOT / "configs").glob(
        "*_offline.json" if args.offline else "*_desk.json"))
    status = 0
    for cfg in configs:
        print(f"== {cfg.name}", flush=True)
        code = main(["--threads", str(args.threads), "-v", "bench", str(cfg),
                     "--out-dir", args.out_dir])
        # 2 flags a truncated decomposition (term budget hit), not a failure
        if code not in (0, 2):
            status = code
    return status


if __name__ == "__main__":
    sys.exit(main_())
