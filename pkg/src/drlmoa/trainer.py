"""Decomposition + neighbourhood parameter transfer, with actor-critic training per subproblem."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import Graph, Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .core import (
    ArchiveEntry,
    Instance,
    ParetoArchive,
    evaluate_tour,
    family_d_input,
    family_specs,
    generate_weights,
    nondominated_filter,
    sample_features,
    tour_lengths_batch,
    weighted_sum,
)
from .errors import CheckpointError, ConfigurationError, TrainingError
from .pointer import (
    ActorParams,
    CriticParams,
    critic_values,
    init_actor,
    init_critic,
    rollout,
    rollout_batch,
)

log = logging.getLogger(__name__)

BANK_FORMAT = "drlmoa-bank"
BANK_VERSION = 1


@dataclass
class TrainConfig:
    family: str = "euclidean"
    n_cities: int = 40
    n_subproblems: int = 100
    batch_size: int = 200
    lr: float = 1e-4
    epochs: int = 5
    instances_per_epoch: int = 500_000
    hidden: int = 128
    seed: int = 0
    warm_share: float = 0.2  # fraction of the total budget spent on the first subproblem
    transfer: bool = True
    grad_clip: float | None = None
    whiten_advantage: bool = False
    first_city: int | None = 0  # None draws a random start city per instance

    def __post_init__(self):
        family_specs(self.family)
        for name in ("n_cities", "n_subproblems", "batch_size", "epochs", "instances_per_epoch", "hidden"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.n_cities < 2:
            raise ConfigurationError("n_cities must be at least 2")
        if not self.lr > 0:
            raise ConfigurationError("lr must be positive")
        if not 0 < self.warm_share <= 1:
            raise ConfigurationError("warm_share must lie in (0, 1]")

    @property
    def total_iterations(self) -> int:
        return max(1, self.epochs * self.instances_per_epoch // self.batch_size)

    def budgets(self) -> list[int]:
        """Training iterations per subproblem, summing to ``total_iterations``."""
        N, total = self.n_subproblems, self.total_iterations
        if N == 1:
            return [total]
        if self.transfer:
            first = max(1, int(round(self.warm_share * total)))
            rest = [(total - first) // (N - 1)] * (N - 1)
            for i in range((total - first) % (N - 1)):
                rest[i] += 1
            return [first] + rest
        even = [total // N] * N
        for i in range(total % N):
            even[i] += 1
        return even

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class SubproblemModel:
    weight: np.ndarray
    actor: ActorParams
    critic: CriticParams
    history: list = field(default_factory=list)

    def copy(self) -> "SubproblemModel":
        return SubproblemModel(self.weight.copy(), self.actor.copy(), self.critic.copy())


@dataclass
class ModelBank:
    models: list[SubproblemModel]
    config: TrainConfig

    def __len__(self):
        return len(self.models)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.models])

    @property
    def d_input(self) -> int:
        return self.models[0].actor.d_input

    def save(self, directory) -> Path:
        """Write ``manifest.json`` plus one checkpoint per subproblem."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        specs = [dataclasses.asdict(s) for s in family_specs(self.config.family)]
        entries = []
        for i, m in enumerate(self.models):
            name = f"sub_{i:03d}.ckpt"
            meta = {"index": i, "weight": m.weight.tolist(), "M": len(m.weight),
                    "family": self.config.family, "specs": specs}
            save_checkpoint(directory / name, m.actor, m.critic, meta)
            digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
            entries.append({"file": name, "weight": m.weight.tolist(), "sha256": digest})
        manifest = {
            "format": BANK_FORMAT,
            "version": BANK_VERSION,
            "n_subproblems": len(self.models),
            "weights": self.weights.tolist(),
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "checkpoints": entries,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return directory

    @classmethod
    def load(cls, directory) -> "ModelBank":
        directory = Path(directory)
        try:
            manifest = json.loads((directory / "manifest.json").read_text())
        except (OSError, ValueError) as exc:
            raise CheckpointError(f"{directory}: cannot read manifest.json ({exc})") from None
        if manifest.get("format") != BANK_FORMAT or manifest.get("version") != BANK_VERSION:
            raise CheckpointError(f"{directory}: not a version {BANK_VERSION} model bank")
        config = TrainConfig.from_dict(manifest["config"])
        d_input = family_d_input(config.family)
        models = []
        for entry in manifest["checkpoints"]:
            actor, critic, meta = load_checkpoint(directory / entry["file"], expect_d_input=d_input,
                                                  expect_d_h=config.hidden)
            w = np.asarray(meta["weight"], dtype=np.float64)
            if not np.array_equal(w, np.asarray(entry["weight"])):
                raise CheckpointError(f"{entry['file']}: weight in checkpoint disagrees with manifest")
            models.append(SubproblemModel(w, actor, critic))
        return cls(models, config)


def reward(instance: Instance, tour, weight) -> float:
    """Negative weighted-sum tour cost (higher is better)."""
    return -weighted_sum(weight, evaluate_tour(instance, tour))


def sample_instances(rng: np.random.Generator, family: str, n: int, T: int) -> list[Instance]:
    specs = family_specs(family)
    return [Instance(f, specs) for f in sample_features(rng, family, n, T)]


def _losses(model: SubproblemModel, feats: np.ndarray, tours: np.ndarray, logp: Tensor, values: Tensor,
            specs, whiten: bool):
    R = -(tour_lengths_batch(feats, specs, tours) @ model.weight)
    adv = R - values.data
    if whiten:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    T = feats.shape[0]
    actor_loss = ad.scale(ad.sum(ad.mul(logp, Tensor(adv))), -1.0 / T)
    critic_loss = ad.mean(ad.square(ad.sub(values, Tensor(R))))
    return R, actor_loss, critic_loss


def actor_critic_train(model: SubproblemModel, config: TrainConfig, rng: np.random.Generator,
                       iterations: int | None = None,
                       callback: Callable[[dict], None] | None = None) -> SubproblemModel:
    """Train one subproblem in place and return it.

    Each iteration samples ``batch_size`` instances, decodes them by
    sampling, and takes one Adam step on the advantage-weighted policy
    gradient and one on the critic's squared error.
    """
    specs = family_specs(config.family)
    iterations = config.total_iterations if iterations is None else iterations
    actor_opt = ad.AdamState(lr=config.lr)
    critic_opt = ad.AdamState(lr=config.lr)
    actor_params = model.actor.parameters()
    critic_params = model.critic.parameters()
    for it in range(iterations):
        feats = sample_features(rng, config.family, config.n_cities, config.batch_size)
        with Graph() as g:
            tours, logp = rollout_batch(model.actor, feats, "sample", rng, config.first_city)
            values = critic_values(model.critic, feats)
            R, actor_loss, critic_loss = _losses(model, feats, tours, logp, values, specs,
                                                 config.whiten_advantage)
            total = ad.add(actor_loss, critic_loss)
        if not np.isfinite(total.item()):
            raise TrainingError(f"non-finite loss at iteration {it}")
        model.actor.zero_grad()
        model.critic.zero_grad()
        g.backward(total)
        if config.grad_clip:
            ad.clip_grad_norm(actor_params, config.grad_clip)
            ad.clip_grad_norm(critic_params, config.grad_clip)
        try:
            ad.adam_step(actor_opt, actor_params)
            ad.adam_step(critic_opt, critic_params)
        except TrainingError as exc:
            raise TrainingError(f"iteration {it}: {exc}") from None
        record = {"iteration": it, "mean_reward": float(R.mean()),
                  "critic_loss": critic_loss.item(), "actor_loss": actor_loss.item()}
        model.history.append(record)
        if callback is not None:
            callback(record)
    return model


def initial_losses(model: SubproblemModel, config: TrainConfig, feats: np.ndarray,
                   rng: np.random.Generator) -> tuple[float, float]:
    """(actor loss, critic loss) of ``model`` on a frozen batch, no update."""
    tours, logp = rollout_batch(model.actor, feats, "sample", rng, config.first_city)
    values = critic_values(model.critic, feats)
    _, a, c = _losses(model, feats, tours, logp, values, family_specs(config.family), False)
    return a.item(), c.item()


def _fresh(config: TrainConfig, seed_seq: np.random.SeedSequence) -> tuple[ActorParams, CriticParams]:
    rng = np.random.default_rng(seed_seq)
    d_input = family_d_input(config.family)
    return init_actor(rng, d_input, config.hidden), init_critic(rng, d_input, config.hidden)


def train_drlmoa(config: TrainConfig, callback: Callable[[int, dict], None] | None = None,
                 on_transfer: Callable[[int, SubproblemModel], None] | None = None) -> ModelBank:
    """Train all subproblems in weight order.

    Subproblem 0 starts from Xavier initialization; every later one starts
    from its predecessor's trained parameters (or from a fresh
    initialization when ``config.transfer`` is False). Trained parameters
    are rounded to float32 so the in-memory bank equals its checkpoints.
    """
    M = len(family_specs(config.family))
    weights = generate_weights(config.n_subproblems, M)
    budgets = config.budgets()
    root = np.random.SeedSequence(config.seed)
    init_seqs = root.spawn(config.n_subproblems)
    train_seqs = root.spawn(config.n_subproblems)
    models: list[SubproblemModel] = []
    for i, w in enumerate(weights):
        if i == 0 or not config.transfer:
            actor, critic = _fresh(config, init_seqs[i])
        else:
            actor, critic = models[-1].actor.copy(), models[-1].critic.copy()
        model = SubproblemModel(w, actor, critic)
        if on_transfer is not None:
            on_transfer(i, model)
        log.info("subproblem %d/%d weight=%s iterations=%d", i + 1, len(weights), np.round(w, 4), budgets[i])
        cb = None if callback is None else (lambda rec, i=i: callback(i, rec))
        actor_critic_train(model, config, np.random.default_rng(train_seqs[i]), budgets[i], cb)
        model.actor.quantize()
        model.critic.quantize()
        models.append(model)
    return ModelBank(models, config)


def infer_front(bank: ModelBank, instance: Instance) -> ParetoArchive:
    """Greedy-decode every bank member and keep the non-dominated tours."""
    if instance.d_input != bank.d_input:
        raise ConfigurationError(f"instance D_input={instance.d_input} but bank expects {bank.d_input}")
    first = bank.config.first_city if bank.config.first_city is not None else 0
    entries = []
    for m in bank.models:
        tour, _ = rollout(m.actor, instance, "greedy", first_city=first)
        entries.append(ArchiveEntry(tour, evaluate_tour(instance, tour), m.weight))
    return nondominated_filter(entries)


def greedy_costs(actor: ActorParams, feats: np.ndarray, family: str, weight, first_city: int = 0) -> np.ndarray:
    """Weighted-sum cost of the greedy tour for each instance in a (B, n, D) batch."""
    tours, _ = rollout_batch(actor, feats, "greedy", first_city=first_city)
    return tour_lengths_batch(feats, family_specs(family), tours) @ np.asarray(weight)
