"""File formats shared by the library and the command line.

All writers go through :func:`atomic_write_text`, so a failed run never
leaves a half-written file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError, VersionMismatch
from .measurement import ORDER_TAG, check_features
from .qcore import density_from_json, density_to_json

STATES_MAGIC = "QSTSTATES"
FREQ_MAGIC = "QSTFREQ"
TRAIN_MAGIC = "QSTTRAIN"
FORMAT_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_header(header, magic: str, what: str) -> dict:
    if not isinstance(header, dict) or header.get("magic") != magic:
        raise FormatError(f"not a {what} file (expected magic {magic!r})")
    if header.get("version") != FORMAT_VERSION:
        raise VersionMismatch(f"{what} file version {header.get('version')!r} is not {FORMAT_VERSION}")
    return header


def _read_json_lines(path) -> list:
    try:
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON line ({exc})") from exc


# -- state sets -----------------------------------------------------------


def dump_states(states, n_qubits: int, seed: int | None) -> str:
    header = {
        "magic": STATES_MAGIC,
        "version": FORMAT_VERSION,
        "n_qubits": n_qubits,
        "count": len(states),
        "seed": seed,
    }
    lines = [json.dumps(header)] + [json.dumps(density_to_json(rho)) for rho in states]
    return "\n".join(lines) + "\n"


def save_states(path, states, n_qubits: int, seed: int | None = None) -> None:
    atomic_write_text(path, dump_states(states, n_qubits, seed))


def load_states(path) -> tuple[dict, list[np.ndarray]]:
    lines = _read_json_lines(path)
    if not lines:
        raise FormatError(f"{path}: empty state file")
    header = _check_header(lines[0], STATES_MAGIC, "state-set")
    states = [density_from_json(doc) for doc in lines[1:]]
    if len(states) != header.get("count"):
        raise FormatError(f"{path}: header count {header.get('count')} but {len(states)} states")
    n = header.get("n_qubits")
    for rho in states:
        if rho.shape[0] != 2**n:
            raise FormatError(f"{path}: state dimension disagrees with n_qubits={n}")
    return header, states


# -- frequency vectors ----------------------------------------------------


def freq_to_json(values, n_qubits: int, n0: int | None) -> dict:
    return {
        "magic": FREQ_MAGIC,
        "version": FORMAT_VERSION,
        "n_qubits": n_qubits,
        "n0": n0,
        "order": ORDER_TAG,
        "values": np.asarray(values, dtype=np.float64).tolist(),
    }


def freq_from_json(doc) -> tuple[np.ndarray, int, int | None]:
    _check_header(doc, FREQ_MAGIC, "frequency")
    if doc.get("order") != ORDER_TAG:
        raise FormatError(f"frequency order tag {doc.get('order')!r} is not {ORDER_TAG!r}")
    try:
        n = int(doc["n_qubits"])
        values = np.asarray(doc["values"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed frequency file: {exc}") from exc
    try:
        check_features(values, n)
    except ValueError as exc:
        raise FormatError(f"frequency values rejected: {exc}") from exc
    return values, n, doc.get("n0")


def save_freq(path, values, n_qubits: int, n0: int | None) -> None:
    atomic_write_text(path, json.dumps(freq_to_json(values, n_qubits, n0)) + "\n")


def load_freq(path) -> tuple[np.ndarray, int, int | None]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return freq_from_json(doc)


# -- density matrices -----------------------------------------------------


def save_density(path, rho) -> None:
    atomic_write_text(path, json.dumps(density_to_json(rho)) + "\n")


def load_density(path) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return density_from_json(doc)


# -- training sets --------------------------------------------------------


def save_training_set(path, ts) -> None:
    buf = io.StringIO()
    header = {
        "magic": TRAIN_MAGIC,
        "version": FORMAT_VERSION,
        "n_qubits": ts.n_qubits,
        "count": len(ts),
        "seed": ts.seed,
    }
    buf.write(json.dumps(header) + "\n")
    for f, rho in zip(ts.features, ts.targets):
        rec = {"features": f.tolist(), "target": {"re": rho.real.tolist(), "im": rho.imag.tolist()}}
        buf.write(json.dumps(rec) + "\n")
    atomic_write_text(path, buf.getvalue())


def load_training_set(path):
    from .nne import TrainingSet

    lines = _read_json_lines(path)
    if not lines:
        raise FormatError(f"{path}: empty training-set file")
    header = _check_header(lines[0], TRAIN_MAGIC, "training-set")
    n = header.get("n_qubits")
    d = 2**n
    records = lines[1:]
    if len(records) != header.get("count"):
        raise FormatError(f"{path}: header count {header.get('count')} but {len(records)} records")
    try:
        features = np.array([r["features"] for r in records], dtype=np.float64)
        re = np.array([r["target"]["re"] for r in records], dtype=np.float64)
        im = np.array([r["target"]["im"] for r in records], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed record ({exc})") from exc
    if features.shape != (len(records), 6**n) or re.shape != (len(records), d, d) or im.shape != re.shape:
        raise FormatError(f"{path}: record shapes do not match n_qubits={n}")
    return TrainingSet(n, features, re + 1j * im, header.get("seed"))


# -- tabular outputs ------------------------------------------------------


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c) for c in columns})
    return buf.getvalue()


def rows_to_jsonl(rows: list[dict], columns: list[str]) -> str:
    return "".join(json.dumps({c: row.get(c) for c in columns}) + "\n" for row in rows)


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
