"""File formats: PLY clouds, binary score sidecars, curve JSON, proposal JSON lines, OBJ polylines.

All writers go through :func:`atomic_write`, so a failed run never leaves a
partial file behind.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .closed_proposals import ClosedProposal
from .detection import GroundTruthLabels, PointScores
from .geometry import PointCloud, canonical_samples, curve_from_dict, curve_to_dict
from .open_proposals import CornerPair, OpenProposal
from .selection import CurveSet


class FormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# --------------------------------------------------------------------------- #
# PLY
# --------------------------------------------------------------------------- #

LABEL_EDGE = 1
LABEL_CORNER = 2

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def ply_bytes(points: np.ndarray, labels: Optional[np.ndarray] = None) -> bytes:
    """Binary little-endian PLY with float32 x/y/z and an optional uchar ``label``."""
    pts = np.asarray(points, dtype=float)
    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if labels is not None:
        fields.append(("label", "u1"))
    rec = np.empty(len(pts), dtype=fields)
    rec["x"], rec["y"], rec["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(pts)}",
              "property float x", "property float y", "property float z"]
    if labels is not None:
        rec["label"] = labels
        header.append("property uchar label")
    header.append("end_header")
    return ("\n".join(header) + "\n").encode("ascii") + rec.tobytes()


def write_ply(path, points: np.ndarray, labels: Optional[np.ndarray] = None) -> None:
    atomic_write(path, ply_bytes(points, labels))


def read_ply(path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Vertices (float64) and the ``label`` property when present.

    Reads ascii and binary (either endianness) files; other elements after the
    vertices are ignored.
    """
    raw = Path(path).read_bytes()
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise FormatError(f"{path}: not a PLY file")
    body_start = raw.index(b"\n", end) + 1
    header = raw[:end].decode("ascii", "replace").splitlines()
    fmt, n, props, in_vertex, seen_vertex = None, None, [], False, False
    for line in header:
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            in_vertex = tok[1] == "vertex" and not seen_vertex
            if in_vertex:
                n, seen_vertex = int(tok[2]), True
            elif not seen_vertex:
                raise FormatError(f"{path}: elements before the vertex block are not supported")
        elif tok[0] == "property" and in_vertex:
            if tok[1] == "list":
                raise FormatError(f"{path}: list properties on vertices are not supported")
            if tok[1] not in _PLY_TYPES:
                raise FormatError(f"{path}: unknown property type {tok[1]!r}")
            props.append((tok[2], _PLY_TYPES[tok[1]]))
    names = [p[0] for p in props]
    if n is None or not {"x", "y", "z"} <= set(names):
        raise FormatError(f"{path}: missing vertex x/y/z")
    if fmt == "ascii":
        rows = raw[body_start:].decode("ascii").split("\n")
        vals = np.array([r.split()[: len(props)] for r in rows[:n]], dtype=float)
        if vals.shape != (n, len(props)):
            raise FormatError(f"{path}: truncated vertex data")
        col = {name: vals[:, i] for i, name in enumerate(names)}
    elif fmt in ("binary_little_endian", "binary_big_endian"):
        order = "<" if fmt == "binary_little_endian" else ">"
        dtype = np.dtype([(name, order + t) for name, t in props])
        if len(raw) - body_start < n * dtype.itemsize:
            raise FormatError(f"{path}: truncated vertex data")
        rec = np.frombuffer(raw, dtype=dtype, count=n, offset=body_start)
        col = {name: rec[name] for name in names}
    else:
        raise FormatError(f"{path}: unsupported PLY format {fmt!r}")
    pts = np.column_stack([col["x"], col["y"], col["z"]]).astype(float)
    labels = col["label"].astype(np.uint8) if "label" in col else None
    return pts, labels


# --------------------------------------------------------------------------- #
# Score sidecar
# --------------------------------------------------------------------------- #

SCORE_MAGIC = b"EDSC"
SCORE_VERSION = 1
SCORE_COLUMNS = ("index", "T_e", "T_c", "De_x", "De_y", "De_z", "Dc_x", "Dc_y", "Dc_z")


def scores_bytes(scores: PointScores) -> bytes:
    """16-byte header (magic, version, n, column count) then one float32 LE column after another."""
    n = len(scores.t_edge)
    cols = np.vstack([np.arange(n, dtype=float), scores.t_edge, scores.t_corner, scores.d_edge.T, scores.d_corner.T])
    header = SCORE_MAGIC + struct.pack("<III", SCORE_VERSION, n, len(SCORE_COLUMNS))
    return header + cols.astype("<f4").tobytes()


def write_scores(path, scores: PointScores) -> None:
    atomic_write(path, scores_bytes(scores))


def read_scores(path, n: Optional[int] = None) -> PointScores:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != SCORE_MAGIC:
        raise FormatError(f"{path}: not a score sidecar")
    version, count, ncols = struct.unpack("<III", raw[4:16])
    if version != SCORE_VERSION or ncols != len(SCORE_COLUMNS):
        raise FormatError(f"{path}: unsupported sidecar version {version} / {ncols} columns")
    if len(raw) != 16 + 4 * count * ncols:
        raise FormatError(f"{path}: size does not match its header")
    if n is not None and count != n:
        raise FormatError(f"{path}: {count} scores for {n} points")
    cols = np.frombuffer(raw, dtype="<f4", offset=16).reshape(ncols, count).astype(float)
    if not np.array_equal(cols[0], np.arange(count)):
        raise FormatError(f"{path}: point index column out of order")
    return PointScores(np.clip(cols[1], 0, 1), np.clip(cols[2], 0, 1), cols[3:6].T.copy(), cols[6:9].T.copy())


# --------------------------------------------------------------------------- #
# Similarity dump
# --------------------------------------------------------------------------- #

SIMILARITY_MAGIC = b"EDSIMMAT"


def write_similarity(path, S: np.ndarray) -> None:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("similarity matrix must be square")
    atomic_write(path, SIMILARITY_MAGIC + struct.pack("<Q", S.shape[0]) + S.astype("<f4").tobytes())


def read_similarity(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != SIMILARITY_MAGIC:
        raise FormatError(f"{path}: not a similarity dump")
    (m,) = struct.unpack("<Q", raw[8:16])
    if len(raw) != 16 + 4 * m * m:
        raise FormatError(f"{path}: size does not match its header")
    return np.frombuffer(raw, dtype="<f4", offset=16).reshape(m, m).astype(float)


# --------------------------------------------------------------------------- #
# Scenes
# --------------------------------------------------------------------------- #


def scene_files(stem) -> tuple[Path, Path, Path]:
    stem = Path(stem)
    return stem.with_suffix(".ply"), stem.with_suffix(".json"), stem.with_suffix(".offsets.bin")


def scene_blobs(scene, stem) -> tuple[bytes, str, bytes]:
    """Encoded PLY, scene JSON and offsets sidecar for ``scene`` saved under ``stem``."""
    side = scene_files(stem)[2]
    gt = scene.gt
    labels = gt.edge.astype(np.uint8) * LABEL_EDGE + gt.corner.astype(np.uint8) * LABEL_CORNER
    meta = {
        "seed": int(scene.spec.seed),
        "solid_kind": scene.spec.solid_kind,
        "noise_X": float(scene.spec.noise_X),
        "bbox_diagonal": float(scene.cloud.bbox_diagonal),
        "curves": [curve_to_dict(c) for c in scene.curves],
        "corners": np.asarray(scene.corners, dtype=float).reshape(-1, 3).tolist(),
        "point_curve_ids": gt.curve_id.astype(int).tolist(),
        "offsets": side.name,
    }
    offsets = PointScores(gt.edge.astype(float), gt.corner.astype(float), gt.d_edge, gt.d_corner)
    return ply_bytes(scene.cloud.points, labels), dumps_json(meta), scores_bytes(offsets)


def save_scene(scene, stem) -> tuple[Path, Path, Path]:
    """Write ``stem.ply`` (points, labels), ``stem.json`` (curves, corners, ids) and the offsets sidecar."""
    paths = scene_files(stem)
    for path, blob in zip(paths, scene_blobs(scene, stem)):
        atomic_write(path, blob)
    return paths


def load_cloud(path) -> PointCloud:
    pts, _ = read_ply(path)
    if len(pts) == 0:
        raise FormatError(f"{path}: no points")
    return PointCloud(pts)


def load_ground_truth(ply_path, json_path) -> tuple[GroundTruthLabels, list, np.ndarray]:
    """Labels, ground-truth curves and corners for a saved scene."""
    pts, labels = read_ply(ply_path)
    meta = read_json(json_path)
    n = len(pts)
    ids = np.asarray(meta.get("point_curve_ids", [-1] * n), dtype=np.int64)
    if len(ids) != n:
        raise FormatError(f"{json_path}: {len(ids)} curve ids for {n} points")
    if labels is None:
        labels = np.where(ids >= 0, LABEL_EDGE, 0).astype(np.uint8)
    edge = (labels & LABEL_EDGE) > 0
    corner = (labels & LABEL_CORNER) > 0
    d_edge = np.zeros((n, 3))
    d_corner = np.zeros((n, 3))
    if meta.get("offsets"):
        side = Path(json_path).parent / meta["offsets"]
        off = read_scores(side, n)
        d_edge, d_corner = off.d_edge, off.d_corner
    gt = GroundTruthLabels(edge, corner, np.where(edge[:, None], d_edge, 0.0),
                           np.where(corner[:, None], d_corner, 0.0), ids)
    curves = [curve_from_dict(c) for c in meta.get("curves", [])]
    corners = np.asarray(meta.get("corners", []), dtype=float).reshape(-1, 3)
    return gt, curves, corners


# --------------------------------------------------------------------------- #
# Proposals and curve sets
# --------------------------------------------------------------------------- #


def _ints(a) -> list:
    return np.asarray(a, dtype=np.int64).reshape(-1).tolist()


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def open_record(p: OpenProposal) -> dict:
    return {
        "type": "open",
        "pair": p.pair.index,
        "corners": [p.pair.first, p.pair.second],
        "corner_points": [p.pair.c1_index, p.pair.c2_index],
        "c1": _floats(p.pair.c1),
        "c2": _floats(p.pair.c2),
        "candidates": _ints(p.candidates),
        "members": _ints(p.members),
        "kind": p.kind,
        "curve": curve_to_dict(p.curve),
        "residual": float(p.fit_residual),
        "cost": float(p.cost),
        "coverage": float(p.coverage),
    }


def open_from_record(r: dict) -> OpenProposal:
    pair = CornerPair(int(r["pair"]), int(r["corners"][0]), int(r["corners"][1]), np.array(r["c1"], float),
                      np.array(r["c2"], float), int(r["corner_points"][0]), int(r["corner_points"][1]))
    return OpenProposal(pair, np.array(r["candidates"], dtype=np.int64), np.array(r["members"], dtype=np.int64),
                        r["kind"], curve_from_dict(r["curve"]), float(r["residual"]), float(r["cost"]),
                        float(r["coverage"]))


def closed_record(p: ClosedProposal) -> dict:
    return {
        "type": "closed",
        "seed": int(p.seed),
        "members": _ints(p.members),
        "member_points": _floats(p.member_points),
        "anchors": _floats(p.anchors),
        "offsets": _floats(p.offsets),
        "curve": curve_to_dict(p.circle),
        "residual": float(p.fit_residual),
        "coverage": float(p.coverage),
        "confidence": float(p.confidence),
    }


def closed_from_record(r: dict) -> ClosedProposal:
    return ClosedProposal(int(r["seed"]), np.array(r["members"], dtype=np.int64),
                          np.array(r["member_points"], float).reshape(-1, 3), np.array(r["anchors"], float),
                          np.array(r["offsets"], float), curve_from_dict(r["curve"]), float(r["residual"]),
                          float(r["coverage"]), float(r["confidence"]))


def proposals_jsonl(open_props: Iterable[OpenProposal], closed_props: Iterable[ClosedProposal]) -> str:
    lines = [json.dumps(open_record(p), sort_keys=True) for p in open_props]
    lines += [json.dumps(closed_record(p), sort_keys=True) for p in closed_props]
    return "".join(line + "\n" for line in lines)


def read_proposals(path) -> tuple[list[OpenProposal], list[ClosedProposal]]:
    opens, closeds = [], []
    for k, r in _records(path):
        try:
            if r["type"] == "open":
                opens.append(open_from_record(r))
            elif r["type"] == "closed":
                closeds.append(closed_from_record(r))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{k}: bad proposal record ({exc})") from exc
    return opens, closeds


def read_proposals_meta(path) -> dict:
    """The optional ``{"type": "meta", ...}`` record of a proposals file."""
    for _, r in _records(path):
        if r.get("type") == "meta":
            return r
    return {}


def _records(path):
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                r = json.loads(line)
            except ValueError as exc:
                raise FormatError(f"{path}:{k}: not JSON ({exc})") from exc
            if not isinstance(r, dict) or "type" not in r:
                raise FormatError(f"{path}:{k}: record without a type")
            yield k, r


def curveset_dict(curves: CurveSet, meta: Optional[dict] = None) -> dict:
    """Final curves with provenance: pair and corner indices for open curves, seed and confidence for circles."""
    items = []
    for p in curves.open:
        items.append({"curve": curve_to_dict(p.curve), "source": "open", "pair": p.pair.index,
                      "corners": [p.pair.first, p.pair.second], "residual": float(p.fit_residual),
                      "coverage": float(p.coverage), "members": len(p.members)})
    for p in curves.closed:
        items.append({"curve": curve_to_dict(p.circle), "source": "closed", "seed": int(p.seed),
                      "confidence": float(p.confidence), "residual": float(p.fit_residual),
                      "coverage": float(p.coverage), "members": len(p.members)})
    out = {"curves": items}
    if meta:
        out["meta"] = meta
    return out


def read_curves(path) -> list:
    """Curves from a curve-set file, a scene file or a bare list of curve objects."""
    data = read_json(path)
    items = data.get("curves", []) if isinstance(data, dict) else data
    return [curve_from_dict(it["curve"] if "curve" in it else it) for it in items]


# --------------------------------------------------------------------------- #
# OBJ
# --------------------------------------------------------------------------- #


def obj_text(curves: Sequence, samples: int = 64) -> str:
    """One polyline (``l`` record) of ``samples`` vertices per curve."""
    verts, lines, base = [], [], 1
    for c in curves:
        pts = canonical_samples(c, samples)
        verts.extend(f"v {x!r} {y!r} {z!r}" for x, y, z in pts.tolist())
        lines.append("l " + " ".join(str(base + i) for i in range(samples)))
        base += samples
    return "\n".join(verts + lines) + ("\n" if verts else "")


def write_obj(path, curves: Sequence, samples: int = 64) -> None:
    atomic_write(path, obj_text(curves, samples))
