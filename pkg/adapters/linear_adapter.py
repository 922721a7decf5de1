#!/usr/bin/env python3
"""Linear model served over the NDJSON stdio protocol.

    python3 linear_adapter.py --weights 2,-1,0.5 [--intercept 0.25]

stdout carries protocol lines only; diagnostics go to stderr. Exits nonzero
on a malformed request line.
"""
import argparse
import json
import sys


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", required=True,
                        help="comma-separated coefficients, e.g. 2,-1,0.5")
    parser.add_argument("--intercept", type=float, default=0.0)
    return parser.parse_args(argv)


def serve(weights, intercept, stdin=sys.stdin, stdout=sys.stdout):
    for line in stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        op = request["op"]
        if op == "meta":
            reply = {"d": len(weights), "task": "regression"}
        elif op == "predict":
            batch = request["x"]
            values = []
            for x in batch:
                if len(x) != len(weights):
                    raise ValueError(f"{len(x)} features, expected {len(weights)}")
                values.append(sum(w * v for w, v in zip(weights, x)) + intercept)
            reply = {"id": request["id"], "y": values}
        else:
            raise ValueError(f"unknown op {op!r}")
        print(json.dumps(reply), file=stdout, flush=True)


def main(argv=None):
    args = parse_args(argv)
    try:
        weights = [float(v) for v in args.weights.split(",") if v.strip()]
    except ValueError:
        print(f"unparseable --weights {args.weights!r}", file=sys.stderr)
        return 2
    if not weights:
        print("--weights must hold at least one coefficient", file=sys.stderr)
        return 2
    try:
        serve(weights, args.intercept)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"malformed request: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
