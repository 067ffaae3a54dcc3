"""Batch command-line front end.

    multiree compute --state w
    multiree bounds  --state ghz:0.70710678
    multiree mregs   --state w
    multiree scan    --samples 20 --seed 42
    multiree verify  --samples 200 --seed 7

Exit status: 0 on success, 1 on bad input, 2 when an asserted inequality
fails beyond its tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import (
    INEQUALITY_TOL,
    conjecture_check,
    nparty_bounds,
    random_inequality_pair,
    verify_inequality_bi,
    verify_inequality_tri,
)
from .mregs import mregs_decompose, predicted_e3_average_form
from .optimizer import OptimizerConfig, relative_entropy_of_entanglement
from .stateio import StateFileError, parse_state_spec
from .states import haar_random_pure

COMMANDS = ("compute", "bounds", "scan", "verify", "mregs")
EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2

# substream tags for the counter-based seed splitter
_STATE_STREAM, _OPTIMIZER_STREAM, _BI_STREAM, _TRI_STREAM = range(4)


@dataclass(frozen=True)
class RunConfig:
    command: str
    state: str | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    samples: int = 100
    seed: int = 0
    output_format: str = "json"
    output: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.command in ("scan", "verify") and self.samples < 1:
            raise ValueError("--samples must be >= 1")
        if self.command in ("compute", "bounds", "mregs") and not self.state:
            raise ValueError(f"{self.command} requires --state")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.output_format!r}")


def substream(seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, stream, index])


def derived_seed(seed: int, stream: int, index: int) -> int:
    return int(substream(seed, stream, index).generate_state(1)[0])


# -- commands ---------------------------------------------------------------

def _compute(cfg: RunConfig):
    state = parse_state_spec(cfg.state)
    result = relative_entropy_of_entanglement(state, cfg.optimizer)
    return EXIT_OK, {"state_label": cfg.state, **result.to_dict()}


def _bounds(cfg: RunConfig):
    report = nparty_bounds(parse_state_spec(cfg.state), cfg.optimizer, label=cfg.state)
    ok = report.sandwich_holds() and report.corollary_holds()
    return (EXIT_OK if ok else EXIT_FAILED), report.to_dict()


def _mregs(cfg: RunConfig):
    state = parse_state_spec(cfg.state)
    dec = mregs_decompose(state, cfg.optimizer)
    e3 = relative_entropy_of_entanglement(state, cfg.optimizer)
    out = {"state_label": cfg.state, **dec.to_dict(),
           "average_form": predicted_e3_average_form(state, cfg.optimizer),
           "e3_estimate": e3.value, "gap_estimate": e3.gap_estimate}
    return EXIT_OK, out


def _scan(cfg: RunConfig):
    rows, candidates = [], []
    sandwich_failures = corollary_failures = 0
    for i in range(cfg.samples):
        psi = haar_random_pure((2, 2, 2), substream(cfg.seed, _STATE_STREAM, i))
        opt = replace(cfg.optimizer, seed=derived_seed(cfg.seed, _OPTIMIZER_STREAM, i))
        report = nparty_bounds(psi, opt, label=f"haar-{i}")
        sandwich_failures += not report.sandwich_holds()
        corollary_failures += not report.corollary_holds()
        if not report.conjecture_holds():
            check = conjecture_check(psi, opt)
            if check.violated:
                candidates.append({"sample": i, "e3_estimate": check.e3_estimate,
                                   "half_sum": check.half_sum, "excess": check.excess})
        rows.append({"sample": i, **report.to_dict()})
    summary = {
        "samples": cfg.samples,
        "seed": cfg.seed,
        "min_slack_lower": min(r["slack_lower"] for r in rows),
        "min_slack_upper": min(r["slack_upper"] for r in rows),
        "min_half_sum_slack": min(r["conjecture_half_sum"] - r["e3_estimate"] for r in rows),
        "max_gap_estimate": max(r["gap_estimate"] for r in rows),
        "sandwich_failures": sandwich_failures,
        "corollary_failures": corollary_failures,
        "conjecture_candidates": candidates,
    }
    failed = sandwich_failures or corollary_failures or candidates
    return (EXIT_FAILED if failed else EXIT_OK), {"rows": rows, "summary": summary}


def _verify(cfg: RunConfig):
    bi, tri = [], []
    for i in range(cfg.samples):
        rng = np.random.default_rng(substream(cfg.seed, _BI_STREAM, i))
        bi.append(verify_inequality_bi(*random_inequality_pair((2, 2), rng)))
        rng = np.random.default_rng(substream(cfg.seed, _TRI_STREAM, i))
        tri.append(verify_inequality_tri(*random_inequality_pair((2, 2, 2), rng)))
    out = {
        "samples": cfg.samples,
        "seed": cfg.seed,
        "min_bi": min(bi),
        "min_tri": min(tri),
        "violations_bi": sum(v < -INEQUALITY_TOL for v in bi),
        "violations_tri": sum(v < -INEQUALITY_TOL for v in tri),
        "tolerance": INEQUALITY_TOL,
    }
    failed = out["violations_bi"] or out["violations_tri"]
    return (EXIT_FAILED if failed else EXIT_OK), out


_HANDLERS = {"compute": _compute, "bounds": _bounds, "mregs": _mregs,
             "scan": _scan, "verify": _verify}


# -- output -----------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def _csv_table(records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(records[0]))
    for rec in records:
        writer.writerow([_cell(v) for v in rec.values()])
    return buf.getvalue()


def render(payload: dict, output_format: str) -> str:
    if output_format == "json":
        return json.dumps(payload, indent=2) + "\n"
    if "rows" in payload:
        return _csv_table(payload["rows"]) + "\n" + _csv_table([payload["summary"]])
    return _csv_table([payload])


def run(cfg: RunConfig) -> int:
    try:
        status, payload = _HANDLERS[cfg.command](cfg)
    except (StateFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(payload, cfg.output_format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiree", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--state", help="epr | ghz:<alpha> | w | psieff:<e>,<f> | file:<path>, "
                                   "optionally suffixed with @2x2x2")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--ensemble-size", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None, help="value tolerance in bits")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed}
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.ensemble_size is not None:
        overrides["ensemble_size"] = args.ensemble_size
    if args.tolerance is not None:
        overrides["value_tolerance"] = args.tolerance
    try:
        cfg = RunConfig(
            command=args.command,
            state=args.state,
            optimizer=OptimizerConfig(**overrides),
            samples=args.samples,
            seed=args.seed,
            output_format=args.format,
            output=args.output,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
