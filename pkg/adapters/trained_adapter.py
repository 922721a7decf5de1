#!/usr/bin/env python3
"""Stock scikit-learn model trained from a CSV, served over the NDJSON
stdio protocol.

    python3 trained_adapter.py data.csv [--label-column name] [--task auto]
                               [--class-of-interest 0] [--seed 0]

The model is fitted once at startup (random forest; classifier or regressor
chosen by --task, with `auto` inferring classification for non-numeric or
small-integer labels). Classification predictions are the probability of
--class-of-interest. stdout carries protocol lines only; startup failures
exit nonzero before the handshake.
"""
import argparse
import csv
import json
import sys


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("train_csv")
    parser.add_argument("--label-column", default=None,
                        help="label column name (default: last column)")
    parser.add_argument("--task", choices=["auto", "classification", "regression"],
                        default="auto")
    parser.add_argument("--class-of-interest", type=int, default=0)
    parser.add_argument("--trees", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args(argv)


def load_table(path, label_column):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header and at least one data row")
    header, data = rows[0], rows[1:]
    if label_column is None:
        label_column = header[-1]
    if label_column not in header:
        raise ValueError(f"{path}: no column named {label_column!r}")
    label_idx = header.index(label_column)
    feature_idx = [i for i in range(len(header)) if i != label_idx]
    X = [[float(row[i]) for i in feature_idx] for row in data]
    raw_labels = [row[label_idx] for row in data]
    return X, raw_labels


def resolve_task(raw_labels, task):
    try:
        numeric = [float(v) for v in raw_labels]
    except ValueError:
        return "classification", sorted(set(raw_labels))
    if task == "regression":
        return "regression", None
    integral = all(v == int(v) for v in numeric)
    if task == "classification" or (integral and len(set(numeric)) <= 20):
        return "classification", sorted(set(raw_labels), key=float)
    return "regression", None


def fit_model(X, raw_labels, task, classes, trees, seed):
    from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

    if task == "classification":
        mapping = {name: i for i, name in enumerate(classes)}
        y = [mapping[v] for v in raw_labels]
        model = RandomForestClassifier(n_estimators=trees, random_state=seed)
    else:
        y = [float(v) for v in raw_labels]
        model = RandomForestRegressor(n_estimators=trees, random_state=seed)
    model.fit(X, y)
    return model


def serve(model, d, task, n_classes, class_of_interest,
          stdin=sys.stdin, stdout=sys.stdout):
    for line in stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        op = request["op"]
        if op == "meta":
            reply = {"d": d, "task": task}
            if task == "classification":
                reply["classes"] = n_classes
        elif op == "predict":
            batch = request["x"]
            for x in batch:
                if len(x) != d:
                    raise ValueError(f"{len(x)} features, expected {d}")
            if task == "classification":
                proba = model.predict_proba(batch)
                column = list(model.classes_).index(class_of_interest)
                values = [float(p[column]) for p in proba]
            else:
                values = [float(v) for v in model.predict(batch)]
            reply = {"id": request["id"], "y": values}
        else:
            raise ValueError(f"unknown op {op!r}")
        print(json.dumps(reply), file=stdout, flush=True)


def main(argv=None):
    args = parse_args(argv)
    try:
        X, raw_labels = load_table(args.train_csv, args.label_column)
        task, classes = resolve_task(raw_labels, args.task)
        model = fit_model(X, raw_labels, task, classes, args.trees, args.seed)
    except (OSError, ValueError) as exc:
        print(f"startup failed: {exc}", file=sys.stderr)
        return 1
    n_classes = len(classes) if classes else 0
    if task == "classification" and not 0 <= args.class_of_interest < n_classes:
        print(f"class-of-interest {args.class_of_interest} outside [0, {n_classes})",
              file=sys.stderr)
        return 1
    try:
        serve(model, len(X[0]), task, n_classes, args.class_of_interest)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"malformed request: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
