"""Train the tabular grid policy and print its success curve.

    python3 demos/grpo_curve.py [iterations]
"""

from __future__ import annotations

import sys

from guikernel.grpo import GrpoConfig
from guikernel.grpo.toy import moving_average, train


def main() -> None:
    iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 60
    _, hist = train(GrpoConfig(iterations=iterations, seed=0))
    success = [h["success"] for h in hist]
    ma = moving_average(success[1:], 10)
    for h in hist[:: max(1, iterations // 20)]:
        bar = "#" * int(40 * h["success"])
        print(f"iter {h['iteration']:>4}  success {h['success']:.3f}  KL {h['KL']:.5f}  {bar}")
    print(f"first iteration at >= 0.9: {next((h['iteration'] for h in hist if h['success'] >= 0.9), None)}")
    print(f"10-iteration moving average never decreases: {all(b >= a for a, b in zip(ma, ma[1:]))}")


if __name__ == "__main__":
    main()
