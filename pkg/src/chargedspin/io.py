"""Bit-exact on-disk format: a JSON manifest plus raw binary field files.

Layout of a data set directory:
    manifest.json          format metadata, grid, field descriptors, digest
    <field>.bin            little-endian IEEE-754 float64 payload

Binary payload: flat index = point_linear_index * ncomp + comp with row-major
point linearization over the grid shape. Complex fields store (re, im) pairs.
Symmetric 2-tensors are packed to the n(n+1)/2 upper-triangle components
(row-major) on disk and expanded to full (n, n) form in memory.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .chargedata import ChargedInitialData
from .errors import FormatError
from .grids import Excision, Grid

FORMAT_VERSION = 1


def _conventions(metadata: dict | None = None) -> dict:
    conv = {
        "unit_sphere_area": "2 pi^(n/2) / Gamma(n/2)",
        "chirality": "Hermitian involution anticommuting with Clifford "
                     "action; doubled fiber with swap for odd n",
        "e_sign": "contravariant E with Q = (1/omega) oint E.nubar > 0 "
                  "for positive-mass reference data",
        "stencil": "centered second-order differences throughout",
    }
    if metadata:
        if "e_sign" in metadata:
            conv["e_sign"] = metadata["e_sign"]
        if "chirality_phase" in metadata:
            conv["chirality_phase"] = metadata["chirality_phase"]
    return conv


def conventions_digest(conv: dict) -> str:
    blob = json.dumps(conv, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _sym_pack(T: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    return T[..., iu[0], iu[1]]


def _sym_unpack(P: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    T = np.zeros(P.shape[:-1] + (n, n))
    T[..., iu[0], iu[1]] = P
    T[..., iu[1], iu[0]] = P
    return T


def _write_bin(path: Path, arr: np.ndarray):
    flat = np.ascontiguousarray(arr, dtype="<f8")
    path.write_bytes(flat.tobytes())


def _read_bin(path: Path, count: int) -> np.ndarray:
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    if raw.size != count:
        raise FormatError(
            f"{path.name}: expected {count} float64 values, found {raw.size}")
    return raw


def save_data(data: ChargedInitialData, out_dir) -> Path:
    """Write manifest.json plus g/K/E binaries; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = data.grid
    n = grid.n
    nsym = n * (n + 1) // 2

    fields = [
        ("g", _sym_pack(data.g, n), nsym, "real", "symmetric2"),
        ("K", _sym_pack(data.K, n), nsym, "real", "symmetric2"),
        ("E", data.E, n, "real", "vector"),
    ]
    descriptors = []
    for name, arr, ncomp, kind, layout in fields:
        fname = f"{name}.bin"
        _write_bin(out / fname, arr)
        descriptors.append({"name": name, "ncomp": ncomp, "kind": kind,
                            "layout": layout, "file": fname})

    conv = _conventions(data.metadata)
    manifest = {
        "format_version": FORMAT_VERSION,
        "n": n,
        "grid": {
            "origin": list(grid.origin),
            "spacing": grid.spacing,
            "shape": list(grid.shape),
            "excisions": [{"center": list(e.center), "radius": e.radius}
                          for e in grid.excisions],
        },
        "fields": descriptors,
        "metadata": data.metadata,
        "conventions": conv,
        "conventions_digest": conventions_digest(conv),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")
    return out


def load_data(path) -> ChargedInitialData:
    """Load a data set directory written by :func:`save_data`."""
    src = Path(path)
    mf_path = src / "manifest.json"
    if not mf_path.exists():
        raise FormatError(f"no manifest.json in {src}")
    try:
        manifest = json.loads(mf_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version!r} "
                          f"(expected {FORMAT_VERSION})")
    for key in ("n", "grid", "fields"):
        if key not in manifest:
            raise FormatError(f"manifest missing required key {key!r}")

    gspec = manifest["grid"]
    excs = tuple(Excision(tuple(e["center"]), e["radius"])
                 for e in gspec.get("excisions", []))
    grid = Grid(tuple(gspec["origin"]), gspec["spacing"],
                tuple(gspec["shape"]), excs)
    n = manifest["n"]
    if n != grid.n:
        raise FormatError("manifest n inconsistent with grid shape")
    npoints = grid.npoints

    arrays = {}
    for desc in manifest["fields"]:
        fpath = src / desc["file"]
        if not fpath.exists():
            raise FormatError(f"missing field file {desc['file']}")
        ncomp = desc["ncomp"]
        factor = 2 if desc["kind"] == "complex" else 1
        raw = _read_bin(fpath, npoints * ncomp * factor)
        if desc["kind"] == "complex":
            raw = raw.reshape(-1, 2)
            raw = raw[:, 0] + 1j * raw[:, 1]
        arr = raw.reshape(grid.shape + (ncomp,))
        if desc["layout"] == "symmetric2":
            arr = _sym_unpack(arr, n)
        arrays[desc["name"]] = arr

    for name in ("g", "K", "E"):
        if name not in arrays:
            raise FormatError(f"data set lacks required field {name!r}")
    return ChargedInitialData(grid, arrays["g"], arrays["K"], arrays["E"],
                              metadata=manifest.get("metadata", {}))


def save_report(report: dict, path):
    """Write a structured run report (JSON, versioned, convention-stamped)."""
    conv = _conventions(report.get("metadata"))
    payload = dict(report)
    payload.setdefault("format_version", FORMAT_VERSION)
    payload["conventions"] = conv
    payload["conventions_digest"] = conventions_digest(conv)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                     default=_json_default) + "\n")


def load_report(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise FormatError(f"no report at {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"report is not valid JSON: {exc}") from exc


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")
