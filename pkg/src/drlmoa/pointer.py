"""Pointer-network actor and per-city critic.

Everything is batched over a leading instance axis: features are
``(B, n, D)`` and tours ``(B, n)``. Single-instance helpers wrap a batch of
one. The first city of every tour is fixed (index 0 by default); its step
runs the GRU on the start vector but makes no policy decision.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .core import Instance
from .errors import DomainError

CRITIC_WIDTHS = (20, 20, 1)


class _ParamSet:
    """Ordered name -> Tensor mapping shared by actor and critic parameters."""

    def __init__(self, tensors: dict[str, Tensor]):
        self.tensors = dict(tensors)
        for name, t in self.tensors.items():
            t.name = name

    def __getitem__(self, name):
        return self.tensors[name]

    def parameters(self) -> list[Tensor]:
        return list(self.tensors.values())

    def zero_grad(self):
        for t in self.tensors.values():
            t.zero_grad()

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self.tensors.items()}

    def copy(self):
        return type(self)({k: Tensor(t.data.copy(), requires_grad=True) for k, t in self.tensors.items()})

    def quantize(self, dtype=np.float32):
        """Round every parameter to ``dtype`` precision (checkpoint storage precision)."""
        for t in self.tensors.values():
            t.data = t.data.astype(dtype).astype(np.float64)

    def equals(self, other) -> bool:
        return self.tensors.keys() == other.tensors.keys() and all(
            np.array_equal(t.data, other.tensors[k].data) for k, t in self.tensors.items()
        )

    @property
    def d_input(self) -> int:
        raise NotImplementedError


class ActorParams(_ParamSet):
    @property
    def d_h(self) -> int:
        return self["enc_W"].shape[0]

    @property
    def d_input(self) -> int:
        return self["enc_W"].shape[1]

    @property
    def gru(self) -> dict[str, Tensor]:
        return {k: self[k] for k in ad.GRU_KEYS}

    @classmethod
    def expected_shapes(cls, d_input: int, d_h: int) -> dict[str, tuple[int, ...]]:
        shapes = {"enc_W": (d_h, d_input), "enc_b": (d_h,)}
        for gate in "zrh":
            shapes[f"W_{gate}"] = (d_h, d_h)
        for gate in "zrh":
            shapes[f"U_{gate}"] = (d_h, d_h)
        for gate in "zrh":
            shapes[f"b_{gate}"] = (d_h,)
        shapes.update({"att_v": (d_h,), "att_W1": (d_h, d_h), "att_W2": (d_h, d_h), "g0": (d_h,)})
        return shapes


class CriticParams(_ParamSet):
    @property
    def d_h(self) -> int:
        return self["W1"].shape[0]

    @property
    def d_input(self) -> int:
        return self["W1"].shape[1]

    @classmethod
    def expected_shapes(cls, d_input: int, d_h: int) -> dict[str, tuple[int, ...]]:
        widths = (d_input, d_h) + CRITIC_WIDTHS
        shapes = {}
        for i in range(4):
            shapes[f"W{i + 1}"] = (widths[i + 1], widths[i])
            shapes[f"b{i + 1}"] = (widths[i + 1],)
        return shapes


def _init(cls, rng, d_input, d_h):
    tensors = {}
    for name, shape in cls.expected_shapes(d_input, d_h).items():
        is_bias = name.startswith("b") or name == "enc_b"
        tensors[name] = ad.zeros(shape) if is_bias else ad.xavier_init(rng, shape)
    return cls(tensors)


def init_actor(rng: np.random.Generator, d_input: int, d_h: int = 128) -> ActorParams:
    return _init(ActorParams, rng, d_input, d_h)


def init_critic(rng: np.random.Generator, d_input: int, d_h: int = 128) -> CriticParams:
    return _init(CriticParams, rng, d_input, d_h)


def _features(x) -> np.ndarray:
    if isinstance(x, Instance):
        return x.features[None]
    f = np.asarray(x, dtype=np.float64)
    return f[None] if f.ndim == 2 else f


def encode(params: ActorParams, x) -> Tensor:
    """City embeddings, shape (B, n, d_h) (or (n, d_h) for a single instance)."""
    single = isinstance(x, Instance) or np.ndim(x) == 2
    f = _features(x)
    if f.shape[-1] != params.d_input:
        raise DomainError(f"instance has D_input={f.shape[-1]}, model expects {params.d_input}")
    e = ad.embed_cities(params["enc_W"], params["enc_b"], f)
    return ad.reshape(e, e.shape[1:]) if single else e


def _scores(params: ActorParams, proj_e: Tensor, d: Tensor) -> Tensor:
    q = ad.linear(d, params["att_W2"])
    q = ad.reshape(q, (q.shape[0], 1, q.shape[1]))
    return ad.inner(ad.tanh(ad.add(proj_e, q)), params["att_v"])


def attention_scores(params: ActorParams, d, e, proj_e: Tensor | None = None) -> Tensor:
    """Unnormalized scores ``v . tanh(W1 e_j + W2 d)``, shape (B, n)."""
    e = ad._wrap(e)
    d = ad._wrap(d)
    if e.data.ndim == 2:
        e = ad.reshape(e, (1,) + e.shape)
        d = ad.reshape(d, (1,) + d.shape)
    if proj_e is None:
        proj_e = ad.linear(e, params["att_W1"])
    return _scores(params, proj_e, d)


def attention_probs(params: ActorParams, d, e, mask) -> np.ndarray:
    """Selection distribution over cities; cities with ``mask`` True get probability 0."""
    u = attention_scores(params, d, e)
    mask = np.asarray(mask, dtype=bool).reshape(u.shape)
    if np.any(np.all(mask, axis=-1)):
        raise DomainError("every city is already visited")
    p = ad.softmax(u, mask).data
    return p[0] if np.ndim(e.data if isinstance(e, Tensor) else e) == 2 else p


@dataclass
class DecoderState:
    """Batched decoding state. ``mask[b, j]`` is True once city j is visited."""

    h: Tensor
    mask: np.ndarray
    tour: list = field(default_factory=list)
    log_prob: Tensor | None = None
    proj_e: Tensor | None = None

    @property
    def steps(self) -> int:
        return len(self.tour)

    @property
    def complete(self) -> bool:
        return self.steps == self.mask.shape[1]

    def tours(self) -> np.ndarray:
        return np.stack(self.tour, axis=1)


def init_state(params: ActorParams, e: Tensor) -> DecoderState:
    B, n = e.shape[0], e.shape[1]
    return DecoderState(
        h=Tensor(np.zeros((B, params.d_h))),
        mask=np.zeros((B, n), dtype=bool),
        log_prob=Tensor(np.zeros(B)),
        proj_e=ad.linear(e, params["att_W1"]),
    )


def _sample(rng, p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * c[:, -1]
    return np.argmax(c > u[:, None], axis=1)


def decode_step(params: ActorParams, state: DecoderState, e: Tensor, mode: str = "greedy",
                rng: np.random.Generator | None = None, first_city: int | None = 0,
                force: np.ndarray | None = None):
    """Advance every instance in the batch by one city.

    Returns ``(choice, state)`` with ``choice`` a (B,) index array. The
    step's log-probability is added to ``state.log_prob``; the first step
    (fixed or uniformly random start city) contributes 0. ``force`` replays
    given choices instead of decoding (teacher forcing).
    """
    if state.complete:
        raise DomainError("decoding state is already complete")
    if force is None and mode not in ("greedy", "sample"):
        raise DomainError(f"unknown decoding mode {mode!r}")
    B = e.shape[0]
    rows = np.arange(B)
    if state.steps == 0:
        x = ad.add(Tensor(np.zeros((B, params.d_h))), params["g0"])
    else:
        x = ad.gather_rows(e, state.tour[-1])
    state.h = ad.gru_cell(params.gru, x, state.h)
    if state.steps == 0:
        if force is not None:
            choice = np.asarray(force, dtype=np.int64)
        elif first_city is None:
            if rng is None:
                raise DomainError("a random start city needs an rng")
            choice = rng.integers(0, e.shape[1], size=B)
        else:
            choice = np.full(B, first_city, dtype=np.int64)
    else:
        u = _scores(params, state.proj_e, state.h)
        logp = ad.log_softmax(u, state.mask)
        if force is not None:
            choice = np.asarray(force, dtype=np.int64)
            if np.any(state.mask[rows, choice]):
                raise DomainError("forced choice revisits a city")
        elif mode == "greedy":
            choice = np.argmax(np.where(state.mask, -np.inf, u.data), axis=1)
        else:
            if rng is None:
                raise DomainError("sampling needs an rng")
            choice = _sample(rng, np.exp(logp.data))
        state.log_prob = ad.add(state.log_prob, ad.pick(logp, choice))
    state.mask = state.mask.copy()
    state.mask[rows, choice] = True
    state.tour.append(choice.astype(np.int64))
    return choice, state


def rollout_batch(params: ActorParams, features, mode: str = "greedy",
                  rng: np.random.Generator | None = None, first_city: int | None = 0):
    """Decode whole tours for a (B, n, D) batch; returns ``(tours, log_prob)``."""
    e = encode(params, np.asarray(features, dtype=np.float64))
    n = e.shape[1]
    if first_city is not None and not 0 <= first_city < n:
        raise DomainError(f"start city {first_city} out of range for n={n}")
    state = init_state(params, e)
    while not state.complete:
        decode_step(params, state, e, mode, rng, first_city)
    return state.tours(), state.log_prob


def tour_log_prob(params: ActorParams, features, tours) -> Tensor:
    """Log-probability of given tours under the policy, shape (B,).

    The first city of each tour is taken as the fixed start.
    """
    f = _features(features)
    tours = np.atleast_2d(np.asarray(tours, dtype=np.int64))
    e = encode(params, f)
    state = init_state(params, e)
    for t in range(tours.shape[1]):
        decode_step(params, state, e, force=tours[:, t])
    return state.log_prob


def rollout(params: ActorParams, instance, mode: str = "greedy",
            rng: np.random.Generator | None = None, first_city: int | None = 0):
    """Single instance decode; returns ``(tour, log_prob)``."""
    tours, logp = rollout_batch(params, _features(instance), mode, rng, first_city)
    return tours[0], float(logp.data[0])


def critic_values(params: CriticParams, x) -> Tensor:
    """Per-instance value estimates, shape (B,): per-city stack summed over cities."""
    f = _features(x)
    if f.shape[-1] != params.d_input:
        raise DomainError(f"instance has D_input={f.shape[-1]}, critic expects {params.d_input}")
    h = ad.linear(Tensor(f), params["W1"], params["b1"])
    h = ad.relu(ad.linear(h, params["W2"], params["b2"]))
    h = ad.relu(ad.linear(h, params["W3"], params["b3"]))
    out = ad.linear(h, params["W4"], params["b4"])
    return ad.sum(ad.reshape(out, out.shape[:2]), axis=1)


def critic_value(params: CriticParams, instance) -> float:
    return float(critic_values(params, instance).data[0])
