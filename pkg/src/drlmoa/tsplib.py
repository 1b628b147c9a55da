"""TSPLIB reader/writer for the EUC_2D subset, and kroAB-style composition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EUCLIDEAN, Instance, ObjectiveSpec
from .errors import ConfigurationError, ParseError


@dataclass(frozen=True, eq=False)
class TsplibFile:
    name: str
    dimension: int
    edge_weight_type: str
    coords: np.ndarray  # (n, 2)

    def __eq__(self, other):
        return (isinstance(other, TsplibFile) and self.name == other.name
                and self.dimension == other.dimension
                and self.edge_weight_type == other.edge_weight_type
                and np.array_equal(self.coords, other.coords))


def parse_tsplib(text: str) -> TsplibFile:
    """Parse a TSPLIB file; city ids 1..n become rows 0..n-1."""
    header: dict[str, tuple[str, int]] = {}
    lines = text.splitlines()
    section_line = None
    i = 0
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        if raw.upper().startswith("NODE_COORD_SECTION"):
            section_line = i
            break
        if raw.upper() == "EOF":
            break
        if ":" in raw:
            key, _, value = raw.partition(":")
            header[key.strip().upper()] = (value.strip(), i)
        else:
            parts = raw.split(None, 1)
            header[parts[0].upper()] = (parts[1].strip() if len(parts) > 1 else "", i)

    if "DIMENSION" not in header:
        raise ParseError("missing DIMENSION")
    dim_text, dim_line = header["DIMENSION"]
    try:
        dimension = int(dim_text)
    except ValueError:
        raise ParseError(f"DIMENSION is not an integer: {dim_text!r}", dim_line) from None
    ewt, ewt_line = header.get("EDGE_WEIGHT_TYPE", ("", None))
    if ewt.upper() != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'!r}; only EUC_2D is accepted", ewt_line)
    if section_line is None:
        raise ParseError("missing NODE_COORD_SECTION")

    coords = np.full((dimension, 2), np.nan)
    seen = 0
    for j in range(section_line, len(lines)):
        raw = lines[j].strip()
        if not raw:
            continue
        if raw.upper() == "EOF":
            break
        parts = raw.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'id x y', got {raw!r}", j + 1)
        try:
            idx, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric coordinate line {raw!r}", j + 1) from None
        if not 1 <= idx <= dimension:
            raise ParseError(f"city id {idx} outside 1..{dimension}", j + 1)
        if not np.isnan(coords[idx - 1, 0]):
            raise ParseError(f"duplicate city id {idx}", j + 1)
        coords[idx - 1] = (x, y)
        seen += 1
    if seen != dimension:
        raise ParseError(f"NODE_COORD_SECTION lists {seen} cities but DIMENSION is {dimension}", section_line)
    name = header.get("NAME", ("", None))[0]
    return TsplibFile(name, dimension, "EUC_2D", coords)


def read_tsplib(path) -> TsplibFile:
    with open(path) as fh:
        return parse_tsplib(fh.read())


def write_tsplib(tf: TsplibFile) -> str:
    out = [f"NAME : {tf.name}", "TYPE : TSP", f"DIMENSION : {tf.dimension}",
           f"EDGE_WEIGHT_TYPE : {tf.edge_weight_type}", "NODE_COORD_SECTION"]
    out += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(tf.coords.tolist())]
    out.append("EOF")
    return "\n".join(out) + "\n"


def make_kroab(a: TsplibFile, b: TsplibFile) -> Instance:
    """Bi-objective Euclidean instance: city i has features (a_x, a_y, b_x, b_y)."""
    if a.dimension != b.dimension:
        raise ConfigurationError(f"dimension mismatch: {a.name} has {a.dimension}, {b.name} has {b.dimension}")
    feats = np.hstack([a.coords, b.coords])
    specs = (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(EUCLIDEAN, 2))
    name = f"{a.name}+{b.name}" if a.name or b.name else f"kroab{a.dimension}"
    return Instance(feats, specs, name=name)
