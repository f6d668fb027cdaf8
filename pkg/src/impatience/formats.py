"""CSV and JSON formats shared by the library and the command line.

Sequences are CSV with header ``t,value`` and rows ``t = 0, 1, ...``
without gaps or duplicates. Tables (profiles, allocations, envelope
curves) use the same ``t`` column followed by one column per series.
CSV floats are written with 17 significant digits; JSON floats use
Python's shortest round-trip representation, which is equally exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .decompose import BetaDeltaComponent, Decomposition, MinBasis
from .errors import FormatError
from .market import EquilibriumReport, EquilibriumResult, Economy, ExponentialAgent

Source = Union[str, Path, IO[str]]


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def _read_text(source: Source) -> str:
    if hasattr(source, "read"):
        return source.read()
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {source}: {exc.strerror}") from exc


def read_table(source: Source) -> tuple[list[str], np.ndarray]:
    """Parse a ``t,...`` table into its column names and a value matrix.

    Returns the names after ``t`` and an array of shape
    ``(rows, columns)``.
    """
    text = _read_text(source)
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise FormatError("empty CSV")
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2 or header[0] != "t":
        raise FormatError(f"header must start with 't' and name at least one column, got {rows[0]}")
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            t = int(row[0])
        except ValueError:
            raise FormatError(f"line {line}: t must be an integer, got {row[0]!r}") from None
        expected = len(values)
        if t != expected:
            kind = "duplicate" if t < expected else "gap"
            raise FormatError(f"line {line}: {kind} in t (expected {expected}, got {t})")
        try:
            numbers = [float(cell) for cell in row[1:]]
        except ValueError:
            raise FormatError(f"line {line}: non-numeric value") from None
        if not all(math.isfinite(v) for v in numbers):
            raise FormatError(f"line {line}: values must be finite")
        values.append(numbers)
    if not values:
        raise FormatError("no data rows")
    return header[1:], np.array(values)


def read_sequence(source: Source) -> np.ndarray:
    """Read a ``t,value`` CSV."""
    names, table = read_table(source)
    if names != ["value"]:
        raise FormatError(f"expected header 't,value', got 't,{','.join(names)}'")
    return table[:, 0]


def write_table(stream: IO[str], names: Sequence[str], columns: Iterable[Sequence[float]]) -> None:
    columns = [np.asarray(c, dtype=float) for c in columns]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", *names])
    for t in range(len(columns[0])):
        writer.writerow([t, *(format_float(c[t]) for c in columns)])


def write_sequence(stream: IO[str], values: Sequence[float]) -> None:
    write_table(stream, ["value"], [values])


def read_profile(source: Source) -> np.ndarray:
    """Read a ``t,member_1,...`` CSV as a matrix with one row per member."""
    _, table = read_table(source)
    return table.T


def read_allocation(source: Source) -> np.ndarray:
    """Read a ``t,agent_1,...`` CSV as a matrix with one row per agent."""
    _, table = read_table(source)
    return table.T


def write_allocation(stream: IO[str], shares: np.ndarray) -> None:
    write_table(stream, [f"agent_{i + 1}" for i in range(shares.shape[0])], list(shares))


def dumps(document) -> str:
    return json.dumps(document, indent=2) + "\n"


def _loads(source: Source):
    try:
        return json.loads(_read_text(source))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def economy_to_dict(e: Economy) -> dict:
    return {"horizon": e.horizon, "agents": [{"delta": a.delta, "wealth": a.wealth} for a in e.agents]}


def economy_from_dict(doc) -> Economy:
    try:
        agents = tuple(ExponentialAgent(float(a["delta"]), float(a["wealth"])) for a in doc["agents"])
        horizon = doc["horizon"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed economy document: {exc!r}") from exc
    if not isinstance(horizon, int):
        raise FormatError("horizon must be an integer")
    return Economy(agents, horizon)


def read_economy(source: Source) -> Economy:
    return economy_from_dict(_loads(source))


def result_to_dict(result: EquilibriumResult) -> dict:
    return {
        "method": result.method,
        "iterations": result.iterations,
        "residual": result.residual,
        "prices": result.prices.tolist(),
        "join_weights": result.join_weights.tolist(),
        "supports": [list(s) for s in result.supports],
        "allocation": result.allocation.shares.tolist(),
    }


def report_to_dict(report: EquilibriumReport) -> dict:
    return {
        "verdict": "pass" if report.ok else "fail",
        "residual": report.residual,
        "violations": list(report.violations),
    }


def decomposition_to_dict(d: Decomposition) -> dict:
    """Attribute-value document; ``eta`` is written as an exact fraction string."""
    return {
        "horizon": d.horizon,
        "scale": d.scale,
        "gamma": d.gamma,
        "components": [
            {"beta": c.beta, "delta": c.delta, "switch": c.switch, "eta": str(c.eta)} for c in d.components
        ],
        "h": d.h.tolist(),
        "alpha": d.basis.alpha.tolist(),
    }


def decomposition_from_dict(doc) -> Decomposition:
    try:
        components = tuple(
            BetaDeltaComponent(
                beta=float(c["beta"]),
                delta=float(c["delta"]),
                switch=int(c["switch"]),
                eta=Fraction(c["eta"]),
            )
            for c in doc["components"]
        )
        scale = float(doc["scale"])
        gamma = float(doc["gamma"])
        h = np.array(doc["h"], dtype=float)
        alpha = np.array(doc["alpha"], dtype=float)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"malformed decomposition document: {exc!r}") from exc
    if h.ndim != 1 or h.size != int(doc.get("horizon", -1)) + 1 or alpha.size != h.size - 1:
        raise FormatError("h and alpha do not match the horizon")
    g = scale * np.exp(-h)
    for arr in (h, g):
        arr.setflags(write=False)
    return Decomposition(scale=scale, gamma=gamma, components=components, h=h, g=g, basis=MinBasis(alpha))


def read_decomposition(source: Source) -> Decomposition:
    return decomposition_from_dict(_loads(source))
