"""Benchmark orchestration: every algorithm on shared normalized instances with one HV reference."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MOGLSConfig, ls_postprocess, moead_run, mogls_run, nsga2_run
from .core import Instance, ParetoArchive, gen_instance, normalize_instance
from .errors import ConfigurationError
from .hypervolume import reference_point
from .records import FrontRecord, load_instance, make_record
from .trainer import ModelBank, infer_front
from .tsplib import make_kroab, read_tsplib

ALGORITHMS = ("drlmoa", "nsga2", "moead", "mogls")


@dataclass
class RunConfig:
    algorithm: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")

    @property
    def label(self) -> str:
        return self.params.get("label") or self.algorithm


def load_instance_source(src: dict) -> Instance:
    """Instance from ``{"path"}``, ``{"family", "n", "seed"}`` or ``{"tsplib_a", "tsplib_b"}``."""
    if "path" in src:
        return load_instance(src["path"])
    if "tsplib_a" in src:
        return make_kroab(read_tsplib(src["tsplib_a"]), read_tsplib(src["tsplib_b"]))
    if "family" in src:
        return gen_instance(src["family"], int(src["n"]), int(src.get("seed", 0)))
    raise ConfigurationError(f"cannot interpret instance source {src!r}")


_BANKS: dict[str, ModelBank] = {}


def _bank(path) -> ModelBank:
    key = str(Path(path).resolve())
    if key not in _BANKS:
        _BANKS[key] = ModelBank.load(path)
    return _BANKS[key]


def solve(run: RunConfig, instance: Instance) -> tuple[ParetoArchive, float]:
    """Run one algorithm; returns the archive and the wall-clock of the solve call alone."""
    p = dict(run.params)
    rng = np.random.default_rng(run.seed)
    if run.algorithm == "drlmoa":
        if "bank" not in p:
            raise ConfigurationError("drlmoa runs need params.bank (a model bank directory)")
        bank = _bank(p["bank"])
        t0 = time.perf_counter()
        archive = infer_front(bank, instance)
        if p.get("ls"):
            archive = ls_postprocess(instance, archive, budget=p.get("ls_budget"))
        return archive, time.perf_counter() - t0
    t0 = time.perf_counter()
    if run.algorithm == "nsga2":
        archive = nsga2_run(instance, int(p.get("pop_size", 100)), int(p.get("iterations", 500)), rng,
                            float(p.get("p_mut", 0.2)))
    elif run.algorithm == "moead":
        archive = moead_run(instance, int(p.get("N", 100)), int(p.get("iterations", 500)),
                            int(p.get("T_nbr", 10)), rng, float(p.get("p_mut", 0.2)))
    else:
        cfg = MOGLSConfig(**{k: int(p[k]) for k in ("n_ls", "temp_pop", "initial_solutions", "generations") if k in p})
        archive = mogls_run(instance, cfg, rng)
    return archive, time.perf_counter() - t0


def _cell(args):
    run, instance = args
    archive, wall = solve(run, instance)
    return archive, wall


def run_benchmark(instances: list[Instance], runs: list[RunConfig], workers: int = 1,
                  timing: bool = True) -> list[FrontRecord]:
    """All runs on all (normalized) instances; one HV reference per instance.

    The reference is 1.1 times the componentwise maximum over the union of
    every algorithm's front on that instance.
    """
    instances = [normalize_instance(inst) for inst in instances]
    cells = [(run, inst) for inst in instances for run in runs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    records = []
    for i, inst in enumerate(instances):
        block = results[i * len(runs) : (i + 1) * len(runs)]
        fronts = [a.objectives for a, _ in block if len(a)]
        ref = reference_point(*fronts) if fronts else np.ones(inst.M)
        for run, (archive, wall) in zip(runs, block):
            records.append(make_record(inst, archive, run.label, ref=ref,
                                       wall_clock=wall if timing else None, seed=run.seed,
                                       config=asdict(run)))
    return records


def summary_rows(records: list[FrontRecord]) -> list[dict]:
    return [{"instance": r.instance_id, "algorithm": r.algorithm, "hv": r.hv["value"],
             "hv_method": r.hv["method"], "ref": r.hv["ref"], "n_solutions": len(r.objectives),
             "time_s": r.wall_clock} for r in records]
