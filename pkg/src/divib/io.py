"""JSON and CSV serialization."""
from __future__ import annotations

import csv
import json

from .partitions import Partition
from .prob import Channel, Distribution, Joint
from .symmetry import Group, perm_from_dict

LN2 = 0.6931471805599453


def fmt(x) -> str:
    """Floats with 17 significant digits (round-trips exactly)."""
    return format(float(x), ".17g")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_distribution(path) -> Distribution:
    return Distribution.from_dict(load_json(path))


def load_joint(path) -> Joint:
    return Joint.from_dict(load_json(path))


def load_channel(path) -> Channel:
    return Channel.from_dict(load_json(path))


def load_partition(path) -> Partition:
    return Partition.from_dict(load_json(path))


def load_input(path):
    """Distribution, Joint or Channel, recognised by its keys."""
    d = load_json(path)
    if "x_labels" in d:
        return Joint.from_dict(d)
    if "input_labels" in d:
        return Channel.from_dict(d)
    if "labels" in d and "p" in d:
        return Distribution.from_dict(d)
    raise ValueError(f"{path}: unrecognised schema")


def _perm(g):
    # bare lists of images are accepted as plain permutations
    return perm_from_dict({"images": g} if isinstance(g, list) else g)


def group_from_json(obj, identity=None) -> Group:
    """Group from inline JSON, a JSON file path, a generator list or a dict."""
    if isinstance(obj, str):
        s = obj.strip()
        obj = json.loads(s) if s[:1] in "[{" else load_json(s)
    if isinstance(obj, list):
        obj = {"generators": obj}
    return Group([_perm(g) for g in obj["generators"]], identity=identity)


def trace_header(group_names) -> list[str]:
    return ["beta", "I_nats", "D_nats", "lagrangian", "eff_card", "converged"] + [f"div_{g}" for g in group_names]


def trace_row(pt, group_names) -> list[str]:
    r = pt.result
    row = [fmt(pt.beta), fmt(r.I), fmt(r.D), fmt(r.lagrangian), str(int(r.eff_card)), "1" if r.converged else "0"]
    return row + [fmt(pt.residuals[g]) for g in group_names]


class TraceWriter:
    """Streams trace rows to CSV so partial sweeps survive interruption."""

    def __init__(self, path, group_names):
        self.group_names = list(group_names)
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(trace_header(self.group_names))

    def write(self, pt):
        self._w.writerow(trace_row(pt, self.group_names))
        self._fh.flush()

    def close(self):
        self._fh.close()


def write_trace(trace, path):
    w = TraceWriter(path, trace.group_names)
    try:
        for pt in trace:
            w.write(pt)
    finally:
        w.close()


def read_trace(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: [] for k in rows[0]} if rows else {}
    for r in rows:
        for k, v in r.items():
            cols[k].append(float(v))
    return cols
