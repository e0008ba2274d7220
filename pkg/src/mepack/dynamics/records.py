from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

CSV_COLUMNS = ["Qbar", "Pbar", "dQbar", "dPbar"]
ERR_COLUMNS = ["err_Q", "err_P", "err_dQ", "err_dP"]


def fmt(x) -> str:
    return "%.17g" % float(x)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    dQ: np.ndarray
    dP: np.ndarray
    method: str
    err: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "Q", "P", "dQ", "dP"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        for key in ("Q", "P", "dQ", "dP"):
            self.err.setdefault(key, np.zeros_like(self.times))
            self.err[key] = np.asarray(self.err[key], dtype=float)

    def columns(self) -> dict:
        return {"Qbar": self.Q, "Pbar": self.P, "dQbar": self.dQ, "dPbar": self.dP}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *CSV_COLUMNS, "method", *ERR_COLUMNS])
        for i, t in enumerate(self.times):
            w.writerow(
                [fmt(t), fmt(self.Q[i]), fmt(self.P[i]), fmt(self.dQ[i]), fmt(self.dP[i]), self.method]
                + [fmt(self.err[k][i]) for k in ("Q", "P", "dQ", "dP")]
            )
        return buf.getvalue()

    def max_difference(self, other: "TrajectoryRecord") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.columns().values(), other.columns().values()))


@dataclass
class ScanResult:
    s: np.ndarray
    nu: np.ndarray
    deviation: dict
    quantum: dict
    classical: dict
    t_probe: float
    method: str
    notes: list = field(default_factory=list)

    def decay_exponent(self, key: str = "dQ") -> float:
        """Least-squares slope of log|deviation| against log s."""
        dev = np.abs(np.asarray(self.deviation[key]))
        mask = dev > 0
        if mask.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(self.s[mask]), np.log(dev[mask]), 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "nu", *CSV_COLUMNS, "method", *ERR_COLUMNS])
        for i, s in enumerate(self.s):
            row = [fmt(s), fmt(self.nu[i])]
            row += [fmt(self.deviation[k][i]) for k in ("Q", "P", "dQ", "dP")]
            row += [self.method] + [fmt(0.0)] * 4
            w.writerow(row)
        return buf.getvalue()


def write_atomic(path: str, text: str):
    """Write via a temporary file in the target directory and rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
