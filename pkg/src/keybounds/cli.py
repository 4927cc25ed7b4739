"""Command-line entry point: ``keybounds {divergence,state-bound,mdi,network}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import divergences as dv
from . import mdi_bounds as mb
from . import netlower as nl
from .channels import dephasing, depolarizing
from .privacy import key_bound_curve
from .states import apply_local_noise, family_candidate, family_state, GHZ_VARIANTS
from .tensor_core import DensityOperator, operator_from_json

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SWEEP_TOL = 1e-12


class InputError(ValueError):
    pass


@dataclass
class Scenario:
    """A command plus its flag values, as stored in a scenario JSON file."""

    command: str
    params: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "Scenario":
        try:
            obj = json.loads(Path(path).read_text())
            return cls(str(obj["command"]), dict(obj.get("args", {})))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad scenario file: {exc}") from None

    def to_argv(self) -> list[str]:
        argv = [self.command]
        for key, val in self.params.items():
            flag = "--" + key.replace("_", "-")
            if val is True:
                argv.append(flag)
            elif val is not False and val is not None:
                argv += [flag, str(val)]
        return argv


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` (stop excluded, 1e-12 slack) or a comma-separated list."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise InputError("sweep step must be positive")
            out, k = [], 0
            while True:
                v = start + k * step
                if v >= stop - SWEEP_TOL:
                    break
                out.append(v)
                k += 1
        else:
            out = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad grid {spec!r}: {exc}") from None
    if not out:
        raise InputError(f"grid {spec!r} is empty")
    return out


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _csv(header: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_value(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _read_operator(path: str) -> DensityOperator:
    return operator_from_json(Path(path).read_text())


# commands


def cmd_divergence(args) -> tuple[str, int]:
    rho, sigma = _read_operator(args.rho), _read_operator(args.sigma)
    if rho.dim != sigma.dim:
        raise InputError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    kind = args.kind
    report: dict = {}
    if kind == "hyp":
        if args.epsilon is None:
            raise InputError("--epsilon is required for kind=hyp")
        res = dv.hypothesis_testing(rho, sigma, args.epsilon)
        report = {"value_bits": res.value_bits, "gap_bits": res.gap_bits, "primal": res.primal, "dual": res.dual}
    elif kind == "renyi":
        if args.alpha is None:
            raise InputError("--alpha is required for kind=renyi")
        report = {"value_bits": dv.sandwiched_renyi(rho, sigma, args.alpha)}
    elif kind == "relative":
        report = {"value_bits": dv.relative_entropy(rho, sigma)}
    elif kind == "max":
        report = {"value_bits": dv.max_relative_entropy(rho, sigma)}
    elif kind == "fidelity":
        report = {"value": dv.fidelity(rho, sigma)}
    elif kind == "trace":
        report = {"value": dv.trace_distance(rho, sigma)}
    return json.dumps({k: _json_value(v) for k, v in report.items()}) + "\n", EXIT_OK


NOISE = {"dephasing": dephasing, "depolarizing": depolarizing}


def cmd_state_bound(args) -> tuple[str, int]:
    if not 3 <= args.parties <= 6:
        raise InputError("--parties must lie in [3, 6]")
    if args.copies not in (1, 2):
        raise InputError("--copies must be 1 or 2")
    eps = parse_grid(args.eps)
    if any(not 0 <= e < 1 for e in eps):
        raise InputError("epsilon values must lie in [0, 1)")
    rho = family_state(args.family, args.parties, args.copies)
    if args.candidate == "auto":
        sigma = family_candidate(args.family, args.parties, args.copies, args.ghz_variant).state
    else:
        sigma = _read_operator(args.candidate)
        if sigma.dim != rho.dim:
            raise InputError("candidate dimension does not match the target state")
    if args.noise != "none":
        ch = NOISE[args.noise](args.q)
        rho = apply_local_noise(rho, ch)
        if args.candidate_noise == "same":
            sigma = apply_local_noise(sigma.with_layout(rho.layout), ch)
    rows = [
        (r.epsilon, r.value_bits, r.primal, r.dual, r.gap_bits)
        for r in key_bound_curve(rho, sigma, eps, attested=True)
    ]
    return _csv(["epsilon", "bound_bits", "primal", "dual", "gap"], rows), EXIT_OK


def cmd_mdi(args) -> tuple[str, int]:
    kind, q = args.channel, args.q
    header = ["param", "value_bits"]
    rows = []
    status = EXIT_OK
    if kind == "erasure":
        if args.sweep:
            sweep = mb.rate_distance_sweep(q, parse_grid(args.sweep), args.attenuation, args.leg_ratio)
            header.append("rb_bits")
            points = [((r.eta1, r.eta2), r.distance_km, [r.bound_bits, r.rb_bits]) for r in sweep]
        else:
            eta = (args.eta1, args.eta2)
            points = [(eta, args.eta1, [mb.erasure_capacity(q, *eta)])]
    else:
        lams = parse_grid(args.sweep) if args.sweep else [args.lam]
        if any(x is None for x in lams):
            raise InputError("--lam or --sweep is required for this channel")
        points = [((x,), x, [mb.closed_form(kind, (x,), q)]) for x in lams]
    if args.cross_check:
        header += ["pipeline_bits", "delta"]
    for params, label, values in points:
        if args.cross_check:
            cc = mb.choi_cross_check(kind, params, q)
            delta = abs(cc.pipeline_bits - values[0])
            values = values + [cc.pipeline_bits, delta]
            if delta > 1e-9:
                status = EXIT_NUMERIC
        rows.append([label] + values)
    return _csv(header, rows), status


def cmd_network(args) -> tuple[str, int]:
    g = nl.WeightedGraph.from_json(Path(args.graph).read_text())
    if args.method == "tree":
        value, tree = nl.max_bottleneck_spanning_tree(g)
        report = {"value": value, "tree": [[u, v, w] for u, v, w in tree]}
    else:
        rates = nl.RateMatrix.from_json(Path(args.rates).read_text()) if args.rates else g.rate_matrix()
        if args.method == "star":
            value, hub = nl.star_rate(rates)
            report = {"value": value, "hub": rates.labels[hub]}
        else:
            value, path = nl.chain_rate(rates)
            report = {"value": value, "path": [rates.labels[i] for i in path]}
    report["value"] = _json_value(float(report["value"]))
    return json.dumps(report) + "\n", EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="keybounds",
        description="Conference-key rate bounds. Grids accept start:stop:step (stop excluded "
        "up to 1e-12) or comma lists. Exit codes: 0 ok, 2 invalid input, 3 numerical failure.",
    )
    p.add_argument("--scenario", help="JSON file {'command': ..., 'args': {...}}; explicit flags override it")
    sub = p.add_subparsers(dest="command")

    d = sub.add_parser("divergence", help="evaluate a divergence between two operator files")
    d.add_argument("--kind", required=True, choices=["hyp", "renyi", "relative", "max", "fidelity", "trace"])
    d.add_argument("--rho", required=True)
    d.add_argument("--sigma", required=True)
    d.add_argument("--alpha", type=float)
    d.add_argument("--epsilon", type=float)
    d.set_defaults(func=cmd_divergence)

    s = sub.add_parser("state-bound", help="hypothesis-testing key bound for GHZ/W states")
    s.add_argument("--family", required=True, choices=["ghz", "w"])
    s.add_argument("--parties", type=int, default=3)
    s.add_argument("--copies", type=int, default=1)
    s.add_argument("--noise", choices=["none", "dephasing", "depolarizing"], default="none")
    s.add_argument("--q", type=float, default=0.95, help="noise parameter (default 0.95)")
    s.add_argument("--candidate-noise", choices=["same", "none"], default="same",
                   help="apply the local noise to the candidate too (default) or not")
    s.add_argument("--eps", default="0,0.001,0.01,0.05,0.1")
    s.add_argument("--candidate", default="auto", help="'auto' or an operator JSON file (user-attested)")
    s.add_argument("--ghz-variant", choices=list(GHZ_VARIANTS), default="coherent")
    s.add_argument("--out")
    s.set_defaults(func=cmd_state_bound)

    m = sub.add_parser("mdi", help="MDI-QKD closed-form bounds and sweeps")
    m.add_argument("--channel", required=True, choices=list(mb.KINDS))
    m.add_argument("--q", type=float, default=1.0)
    m.add_argument("--eta1", type=float, default=1.0)
    m.add_argument("--eta2", type=float, default=1.0)
    m.add_argument("--lam", type=float)
    m.add_argument("--sweep", help="distance grid in km (erasure) or lambda grid (others)")
    m.add_argument("--attenuation", type=float, default=mb.DEFAULT_ATTENUATION, help="per km (default 1/22)")
    m.add_argument("--leg-ratio", type=float, default=1.0, help="second leg length / first leg length")
    m.add_argument("--cross-check", action="store_true")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mdi)

    n = sub.add_parser("network", help="spanning-tree / star / chain lower bounds")
    n.add_argument("--graph", required=True)
    n.add_argument("--method", choices=["tree", "star", "chain"], default="tree")
    n.add_argument("--rates")
    n.set_defaults(func=cmd_network)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--scenario")
    try:
        known, rest = pre.parse_known_args(argv)
        if known.scenario:
            scenario = Scenario.load(known.scenario)
            if rest and rest[0] == scenario.command:
                rest = rest[1:]
            argv = scenario.to_argv() + rest
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_INPUT
        text, code = args.func(args)
        _emit(text, getattr(args, "out", None))
        return code
    except SystemExit as exc:
        return int(exc.code or 0)
    except (dv.NumericalFailure, mb.ModelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, IndexError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
