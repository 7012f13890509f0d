"""Split a local air-quality export into one CSV per state for ``dwr real``.

Nothing is downloaded. The input is a long-format CSV with one measurement
per row and at least these columns (names configurable)::

    State, Date, Parameter, Value

Rows are pivoted to one record per (state, date) with a column per
parameter. Records missing any requested parameter are dropped, several
readings for the same cell are averaged, and each state is written as
``<out>/<state>.csv`` with the feature columns followed by ``Y``. States are
numbered in the order given by ``--states`` (or alphabetically) so the file
names match ``state01.csv``, ``state02.csv``, ... in the example config.

Example::

    python scripts/prepare_aqs.py daily_export.csv --outcome Ozone \\
        --features "Temperature,Pressure,Relative Humidity,Wind Speed,CO,NO2,SO2" \\
        --out demos/configs/states
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path


def load(path, cols):
    state_col, date_col, param_col, value_col = cols
    cells = defaultdict(lambda: defaultdict(list))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in cols if c not in (reader.fieldnames or [])]
        if missing:
            sys.exit(f"{path}: missing columns {missing}")
        for row in reader:
            try:
                v = float(row[value_col])
            except ValueError:
                continue
            cells[(row[state_col], row[date_col])][row[param_col]].append(v)
    return cells


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("export")
    ap.add_argument("--outcome", required=True, help="parameter used as Y")
    ap.add_argument("--features", required=True, help="comma-separated parameter names")
    ap.add_argument("--states", help="comma-separated state names, in file-number order")
    ap.add_argument("--columns", default="State,Date,Parameter,Value", help="state,date,parameter,value headers")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    features = [f.strip() for f in args.features.split(",")]
    cells = load(args.export, [c.strip() for c in args.columns.split(",")])
    by_state = defaultdict(list)
    for (state, date), params in sorted(cells.items()):
        if all(p in params for p in features + [args.outcome]):
            mean = lambda vs: sum(vs) / len(vs)  # noqa: E731
            by_state[state].append([mean(params[p]) for p in features] + [mean(params[args.outcome])])

    states = args.states.split(",") if args.states else sorted(by_state)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, state in enumerate(states, 1):
        rows = by_state.get(state.strip(), [])
        path = out / f"state{i:02d}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(features + ["Y"])
            w.writerows([[repr(v) for v in r] for r in rows])
        print(f"{path}: {state.strip()} ({len(rows)} days)")


if __name__ == "__main__":
    main()
