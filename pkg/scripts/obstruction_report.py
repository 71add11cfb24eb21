"""Trace integrals toward the end of the maximal interval for the fixed ℳ₁ and O_l starts."""
import argparse
import json
import math
from dataclasses import dataclass

import numpy as np

from hypoflow.curvature import trace_integral
from hypoflow.flow import FamilyPoint


@dataclass
class ObstructionConfig:
    threshold: float = 1e3
    theta: float = 0.7


def run(cfg: ObstructionConfig) -> list[dict]:
    w = np.array([[0, 0, 0, math.cos(cfg.theta), -math.sin(cfg.theta)]]).T
    c, s = math.cos(cfg.theta), math.sin(cfg.theta)
    cases = [
        ("O1 backward", FamilyPoint("m1", (0, 1, 0, 0)), None, -1),
        ("O2 backward", FamilyPoint("m1", (0, 2, 0, 1)), None, -1),
        ("O_l forward", FamilyPoint("m2", (0, s * c, 0, s * s, 0, c * c)), w, 1),
    ]
    out = []
    for name, p, sub, direction in cases:
        rep = trace_integral(p, subspace=sub, direction=direction, threshold=cfg.threshold)
        out.append({"case": name, "params0": [float(v) for v in p.params], "verdict": rep.verdict,
                    "boundary_time": rep.boundary_time, "final_integral": float(rep.partial[-1]),
                    "criterion": rep.criterion})
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--threshold", type=float, default=1e3)
    ap.add_argument("--theta", type=float, default=0.7)
    for row in run(ObstructionConfig(**vars(ap.parse_args()))):
        print(json.dumps(row))


if __name__ == "__main__":
    main()
