"""Instance JSON and front records (JSON and CSV + sidecar)."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Instance, ObjectiveSpec, ParetoArchive
from .errors import DomainError, ParseError
from .hypervolume import hypervolume_with_method
from .kernels import nondominated_mask


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "n": inst.n,
        "M": inst.M,
        "specs": [{"kind": s.kind, "offset": s.offset, "width": s.width} for s in inst.specs],
        "scale": list(inst.scale),
        "features": inst.features.tolist(),
    }


def instance_from_dict(d: dict) -> Instance:
    try:
        specs = tuple(ObjectiveSpec(s["kind"], int(s["offset"])) for s in d["specs"])
        inst = Instance(np.asarray(d["features"], dtype=np.float64), specs, tuple(d.get("scale") or ()) or None,
                        name=d.get("name", ""))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"instance document is missing or mistypes field {exc}") from None
    for key, value in (("n", inst.n), ("M", inst.M)):
        if key in d and d[key] != value:
            raise ParseError(f"instance field {key}={d[key]} disagrees with its features ({value})")
    for s, raw in zip(specs, d["specs"]):
        if "width" in raw and raw["width"] != s.width:
            raise ParseError(f"objective width {raw['width']} is wrong for kind {s.kind}")
    return inst


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def save_instance(inst: Instance, path):
    with open(path, "w") as fh:
        fh.write(dumps(instance_to_dict(inst)))


def load_instance(path) -> Instance:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except ValueError as exc:
            raise ParseError(f"{path}: not JSON ({exc})") from None
    return instance_from_dict(d)


@dataclass
class FrontRecord:
    instance_id: str
    algorithm: str
    objectives: list  # normalized-scale vectors
    objectives_raw: list
    tours: list
    hv: dict = field(default_factory=dict)  # value, ref, method
    wall_clock: float | None = None
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def validate(self):
        F = np.ascontiguousarray(self.objectives, dtype=np.float64)
        if len(F) > 1 and not np.all(nondominated_mask(F)):
            raise DomainError(f"{self.algorithm} front for {self.instance_id} is not mutually non-dominated")
        if len(self.objectives) != len(self.tours) or len(self.objectives_raw) != len(self.tours):
            raise DomainError("front record has mismatched objective and tour counts")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FrontRecord":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ParseError(f"front record: {exc}") from None


def make_record(instance: Instance, archive: ParetoArchive, algorithm: str, ref=None,
                wall_clock: float | None = None, seed=None, config=None) -> FrontRecord:
    """Build a record from an archive; HV uses ``ref`` or 1.1 x this front's maximum."""
    archive = archive.sorted()
    F = archive.objectives if len(archive) else np.empty((0, instance.M))
    if ref is None:
        ref = 1.1 * F.max(axis=0) if len(F) else np.ones(instance.M)
    ref = np.asarray(ref, dtype=np.float64)
    value, method = hypervolume_with_method(F, ref)
    rec = FrontRecord(
        instance_id=instance.name,
        algorithm=algorithm,
        objectives=F.tolist(),
        objectives_raw=(F * np.asarray(instance.scale)).tolist(),
        tours=[np.asarray(t).tolist() for t in archive.tours],
        hv={"value": value, "ref": ref.tolist(), "method": method},
        wall_clock=None if wall_clock is None else round(float(wall_clock), 1),
        seed=seed,
        config=dict(config or {}),
    )
    rec.validate()
    return rec


def export_front(record: FrontRecord, fmt: str = "json") -> bytes:
    """Serialize a record. CSV holds raw-scale objectives only; see :func:`csv_sidecar`."""
    record.validate()
    if fmt == "json":
        return dumps(record.to_dict()).encode()
    if fmt == "csv":
        M = len(record.hv.get("ref") or []) or (len(record.objectives_raw[0]) if record.objectives_raw else 0)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"f_{k + 1}" for k in range(M)])
        for row in record.objectives_raw:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue().encode()
    raise DomainError(f"unknown export format {fmt!r}")


def csv_sidecar(record: FrontRecord) -> bytes:
    """Everything a CSV export omits, as JSON."""
    d = record.to_dict()
    d.pop("objectives_raw")
    return dumps(d).encode()


def read_front(data: bytes, fmt: str = "json", sidecar: bytes | None = None) -> FrontRecord:
    if fmt == "json":
        try:
            return FrontRecord.from_dict(json.loads(data))
        except ValueError as exc:
            raise ParseError(f"front JSON: {exc}") from None
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(data.decode())))
        raw = [[float(v) for v in r] for r in rows[1:]]
        if sidecar is None:
            raise ParseError("reading a CSV front needs its metadata sidecar")
        d = json.loads(sidecar)
        d["objectives_raw"] = raw
        return FrontRecord.from_dict(d)
    raise DomainError(f"unknown export format {fmt!r}")
