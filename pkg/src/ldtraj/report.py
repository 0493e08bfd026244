"""Delimited output shared by the CLI, and readers for it."""

import csv
import io

import numpy as np


def fmt(x):
    return f"{float(x):.12g}"


def fmt_vec(v):
    return ",".join(fmt(x) for x in np.ravel(v))


def trajectory_csv(times, mu, f, action=None, meta=None):
    """``t,mu_1..mu_k,f_1..f_k`` rows; ``# key=value`` lines before, ``# action=`` last."""
    k = mu.shape[1]
    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"mu_{a + 1}" for a in range(k)] + [f"f_{a + 1}" for a in range(k)])
    for t, m, g in zip(times, mu, f):
        w.writerow([fmt(t)] + [fmt(x) for x in m] + [fmt(x) for x in g])
    if action is not None:
        buf.write(f"# action={fmt(action)}\n")
    return buf.getvalue()


def read_table(text):
    """Parse comment metadata and a header+rows table.  Returns (meta, columns, rows)."""
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif line.strip():
            lines.append(line)
    if not lines:
        return meta, [], np.empty((0, 0))
    rows = list(csv.reader(lines))
    data = np.array([[float(x) for x in r] for r in rows[1:]]) if len(rows) > 1 else np.empty((0, len(rows[0])))
    return meta, rows[0], data


def read_trajectory_csv(text):
    """Inverse of ``trajectory_csv``: (times, mu, f, meta)."""
    meta, header, data = read_table(text)
    k = (len(header) - 1) // 2
    if header != ["t"] + [f"mu_{a + 1}" for a in range(k)] + [f"f_{a + 1}" for a in range(k)]:
        raise ValueError(f"unexpected header {header}")
    return data[:, 0], data[:, 1 : 1 + k], data[:, 1 + k :], meta


def table_csv(columns, rows, meta=None):
    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([x if isinstance(x, str) else fmt(x) for x in r])
    return buf.getvalue()
