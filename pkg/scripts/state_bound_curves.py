"""Upper-bound curves D_h^eps(rho || sigma) for GHZ and W families, noiseless and noisy.

    python3 scripts/state_bound_curves.py --out results/state_bounds.csv
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from keybounds.channels import dephasing, depolarizing
from keybounds.privacy import key_bound_curve
from keybounds.states import apply_local_noise, family_candidate, family_state


@dataclass
class CurveConfig:
    family: str
    parties: int
    copies: int = 1
    ghz_variant: str = "coherent"


@dataclass
class StateBoundExperiment:
    curves: list[CurveConfig] = field(
        default_factory=lambda: [
            CurveConfig("w", 3),
            CurveConfig("w", 3, copies=2),
            CurveConfig("w", 6),
            CurveConfig("ghz", 3, ghz_variant="classical"),
            CurveConfig("ghz", 3),
        ]
    )
    eps_grid: tuple[float, ...] = tuple(np.round(np.linspace(0, 0.1, 11), 6))
    noise_q: float = 0.95
    noises: tuple[str, ...] = ("none", "dephasing", "depolarizing")


NOISE = {"dephasing": dephasing, "depolarizing": depolarizing}


def run(cfg: StateBoundExperiment):
    for curve in cfg.curves:
        rho = family_state(curve.family, curve.parties, curve.copies)
        sigma = family_candidate(curve.family, curve.parties, curve.copies, curve.ghz_variant).state
        sigma = sigma.with_layout(rho.layout)
        for noise in cfg.noises:
            r, s = rho, sigma
            if noise != "none":
                ch = NOISE[noise](cfg.noise_q)
                r, s = apply_local_noise(rho, ch), apply_local_noise(sigma, ch)
            for res in key_bound_curve(r, s, cfg.eps_grid, attested=True):
                yield (curve.family, curve.parties, curve.copies, curve.ghz_variant, noise,
                       res.epsilon, res.value_bits, res.gap_bits)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/state_bounds.csv")
    p.add_argument("--q", type=float, default=0.95)
    args = p.parse_args()
    cfg = StateBoundExperiment(noise_q=args.q)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "parties", "copies", "ghz_variant", "noise", "epsilon", "bound_bits", "gap_bits"])
        for row in run(cfg):
            w.writerow(row)
            print(",".join(str(x) for x in row))


if __name__ == "__main__":
    main()
