"""Convert SNDlib native-format Abilene demand matrices into a wide scenario CSV.

Each input file holds one 5-minute measurement, e.g.
``demandMatrix-abilene-zhang-5min-20040701-0005.txt``, with a section

    DEMANDS (
      ATLAng_CHINng ( ATLAng CHINng ) 1 12.345 UNLIMITED
      ...
    )

Directed demands i->j and j->i are summed into the unordered commodity {i, j};
self-demands are dropped. Rows are sorted by the timestamp in the file name.

    python scripts/convert_abilene.py DIR --month 200407 -o month07.csv
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from robustnet.network import abilene, generate_commodities, load_network
from robustnet.scenarios import ScenarioSet, save_scenarios

STAMP = re.compile(r"(\d{8})-(\d{4})")
DEMAND = re.compile(r"^\s*\S+\s*\(\s*(\S+)\s+(\S+)\s*\)\s+\S+\s+([-+0-9.eE]+)")


def parse_matrix(text: str, index: dict, kappa: int, source: str = "") -> np.ndarray:
    d = np.zeros(kappa)
    in_demands = False
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("DEMANDS"):
            in_demands = True
            continue
        if not in_demands or not s or s.startswith("#"):
            continue
        if s.startswith(")"):
            break
        m = DEMAND.match(s)
        if m is None:
            raise ValueError(f"{source}:{lineno}: cannot parse demand line {s!r}")
        a, b, value = m.group(1), m.group(2), float(m.group(3))
        if a == b:
            continue
        try:
            d[index[frozenset((a, b))]] += value
        except KeyError:
            raise ValueError(f"{source}:{lineno}: unknown node pair {a}, {b}") from None
    if not in_demands:
        raise ValueError(f"{source}: no DEMANDS section")
    return d


def convert(files, network, tag: str) -> ScenarioSet:
    names = network.node_names
    comms = generate_commodities(network)
    index = {frozenset((names[c.i], names[c.j])): c.id for c in comms}
    stamped = []
    for f in files:
        m = STAMP.search(f.name)
        if m is None:
            raise ValueError(f"{f}: no YYYYMMDD-HHMM timestamp in file name")
        day, hm = m.groups()
        stamp = f"{day[:4]}-{day[4:6]}-{day[6:]}T{hm[:2]}:{hm[2:]}"
        stamped.append((stamp, f))
    stamped.sort()
    rows = [parse_matrix(f.read_text(), index, len(comms), str(f)) for _, f in stamped]
    return ScenarioSet(np.array(rows), tuple(s for s, _ in stamped), tag)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("source", help="directory holding the demand matrix files")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--month", help="keep only files whose stamp starts with this prefix, e.g. 200407")
    p.add_argument("--network", help="network JSON (default: bundled Abilene topology)")
    p.add_argument("--tag", default=None)
    args = p.parse_args(argv)
    network = load_network(args.network) if args.network else abilene()
    files = sorted(Path(args.source).glob("*.txt"))
    if args.month:
        files = [f for f in files if (m := STAMP.search(f.name)) and m.group(1).startswith(args.month)]
    if not files:
        print("error: no matching demand matrix files", file=sys.stderr)
        return 2
    try:
        scen = convert(files, network, args.tag or Path(args.output).stem)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save_scenarios(scen, args.output)
    print(f"{args.output}: {scen.T} rows, {scen.kappa} commodities")
    return 0


if __name__ == "__main__":
    sys.exit(main())
