"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from conftest import exhaustive_front
from drlmoa import autodiff as ad
from drlmoa import cli, pointer, records
from drlmoa.autodiff import Graph, Tensor
from drlmoa.baselines import MOGLSConfig, ls_postprocess, moead_run, mogls_run, nsga2_run, two_opt
from drlmoa.core import Instance, evaluate_tour, family_specs, gen_instance, nondominated_filter, tour_lengths_batch
from drlmoa.hypervolume import hypervolume, hypervolume_mc, hypervolume_with_method, reference_point
from drlmoa.pointer import critic_values, encode, init_actor, init_critic, init_state, tour_log_prob
from drlmoa.trainer import ModelBank, SubproblemModel, TrainConfig, actor_critic_train, greedy_costs, infer_front, train_drlmoa

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def rel_err(a, b):
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if den == 0 else float(np.linalg.norm(a - b) / den)


def test_c01_gradient_correctness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    actor, critic = init_actor(rng, 4, 16), init_critic(rng, 4, 16)
    for t in critic.parameters():
        t.data = t.data + rng.normal(0, 0.1, t.shape)  # nonzero biases so ReLUs are mixed
    X = gen_instance("euclidean", 6, 0).features[None].repeat(4, axis=0)
    tours, _ = pointer.rollout_batch(actor, X, "sample", rng)
    adv = rng.normal(size=4)

    def actor_loss():
        return ad.scale(ad.sum(ad.mul(tour_log_prob(actor, X, tours), Tensor(adv))), -0.25)

    def critic_out():
        return ad.sum(critic_values(critic, X))

    worst = {}
    for params, f in ((actor, actor_loss), (critic, critic_out)):
        params.zero_grad()
        with Graph() as g:
            loss = f()
        g.backward(loss)
        for name, t in params.tensors.items():
            worst[name] = rel_err(t.grad, ad.numerical_grad(lambda: f().item(), t))
    dt = time.perf_counter() - t0
    name = max(worst, key=worst.get)
    report(1, worst[name] < 1e-4 and dt < 60, f"max rel err {worst[name]:.2e} ({name}), {dt:.1f}s")


def test_c02_decoding_validity_fuzz(report):
    rng = np.random.default_rng(2)
    rollouts = invalid = 0
    worst_sum = 0.0
    masked_leak = False
    while rollouts < 10_000:
        n = int(rng.integers(2, 51))
        B = 50
        actor = init_actor(rng, 4, 16)
        for t in actor.parameters():
            t.data = t.data * rng.uniform(0.1, 10.0)
        e = encode(actor, rng.random((B, n, 4)))
        state = init_state(actor, e)
        while not state.complete:
            if state.steps:
                # the distribution decode_step is about to sample from
                h = ad.gru_cell(actor.gru, ad.gather_rows(e, state.tour[-1]), state.h)
                p = ad.softmax(pointer._scores(actor, state.proj_e, h), state.mask).data
                worst_sum = max(worst_sum, float(np.max(np.abs(p.sum(axis=1) - 1.0))))
                masked_leak |= bool(np.any(p[state.mask] != 0.0))
            pointer.decode_step(actor, state, e, "sample", rng)
        tours = state.tours()
        invalid += int(np.sum(np.any(np.sort(tours, axis=1) != np.arange(n), axis=1)))
        rollouts += B
    ok = invalid == 0 and worst_sum <= 1e-9 and not masked_leak
    report(2, ok, f"{rollouts} rollouts, {invalid} invalid, max |sum p - 1| {worst_sum:.1e}, masked leak {masked_leak}")


def test_c03_path_normalization(report):
    actor = init_actor(np.random.default_rng(3), 4, 16)
    X = gen_instance("euclidean", 5, 3).features
    tours = np.array([(0,) + p for p in itertools.permutations(range(1, 5))])
    total = float(np.exp(tour_log_prob(actor, np.repeat(X[None], len(tours), axis=0), tours).data).sum())
    report(3, len(tours) == 24 and abs(total - 1.0) <= 1e-9, f"sum over {len(tours)} paths = {total!r}")


def test_c04_small_instance_oracle(report):
    t0 = time.perf_counter()
    bad = []
    for seed in range(10):
        inst = gen_instance("euclidean", 5, 1000 + seed)
        truth = exhaustive_front(inst)
        rng = np.random.default_rng(seed)
        runs = {"nsga2": nsga2_run(inst, 20, 100, rng), "moead": moead_run(inst, 20, 100, 10, rng),
                "mogls": mogls_run(inst, MOGLSConfig(generations=200), rng)}
        for name, arc in runs.items():
            if not {tuple(np.round(f, 9)) for f in arc.objectives} <= truth:
                bad.append((seed, name))
    dt = time.perf_counter() - t0
    report(4, not bad and dt < 60, f"30 runs, non-subset {bad}, {dt:.1f}s")


def test_c05_hypervolume_oracle(report):
    hand = hypervolume([(1, 3), (2, 2), (3, 1)], (4, 4))
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(20):
        P = rng.random((int(rng.integers(3, 30)), 3))
        F = nondominated_filter([(np.arange(2), f) for f in P]).objectives
        ref = np.ones(3) * 1.1
        exact, method = hypervolume_with_method(F, ref)
        assert method == "exact"
        worst = max(worst, abs(hypervolume_mc(F, ref, seed=i) - exact) / exact)
    report(5, hand == 6.0 and worst <= 0.01, f"hand value {hand!r}, 3-D exact vs MC max rel diff {worst:.2%}")


def test_c06_desk_scale_learning(report):
    t0 = time.perf_counter()
    cfg = TrainConfig(family="euclidean", n_cities=10, n_subproblems=1, batch_size=64, lr=5e-3, epochs=1,
                      instances_per_epoch=64 * 500, hidden=32, seed=6)
    rng = np.random.default_rng(6)
    w = np.array([1.0, 0.0])
    model = SubproblemModel(w, init_actor(rng, 4, 32), init_critic(rng, 4, 32))
    actor_critic_train(model, cfg, np.random.default_rng(7), iterations=500)
    held = np.random.default_rng(600).random((100, 10, 4))
    greedy = greedy_costs(model.actor, held, "euclidean", w).mean()
    rr = np.random.default_rng(601)
    rand_tours = np.array([rr.permutation(10) for _ in range(100)])
    random_mean = (tour_lengths_batch(held, family_specs("euclidean"), rand_tours) @ w).mean()
    specs = family_specs("euclidean")
    opt = np.mean([evaluate_tour(Instance(X, specs), two_opt(Instance(X, specs), t, w))[0]
                   for X, t in zip(held, rand_tours)])
    dt = time.perf_counter() - t0
    ok = greedy <= 0.7 * random_mean and greedy <= 1.15 * opt and dt < 900
    report(6, ok, f"greedy {greedy:.3f}, random {random_mean:.3f} ({1 - greedy / random_mean:.1%} better), "
                  f"2-opt {opt:.3f} (gap {greedy / opt - 1:.1%}), {dt:.0f}s")


def _mean_hv(fronts_a, fronts_b):
    a = b = 0.0
    for fa, fb in zip(fronts_a, fronts_b):
        ref = reference_point(fa, fb)
        a += hypervolume(fa, ref)
        b += hypervolume(fb, ref)
    return a / len(fronts_a), b / len(fronts_a)


def test_c07_parameter_transfer_ablation(report):
    t0 = time.perf_counter()
    held = [gen_instance("euclidean", 10, 70_000 + i) for i in range(20)]
    wins, detail = 0, []
    for rep in range(5):
        fronts = {}
        for transfer in (True, False):
            cfg = TrainConfig(family="euclidean", n_cities=10, n_subproblems=5, batch_size=64, lr=5e-3, epochs=1,
                              instances_per_epoch=64 * 500, hidden=32, seed=700 + rep, transfer=transfer)
            bank = train_drlmoa(cfg)
            fronts[transfer] = [infer_front(bank, inst).objectives for inst in held]
        hv_t, hv_f = _mean_hv(fronts[True], fronts[False])
        wins += hv_t > hv_f
        detail.append(f"{hv_t:.3f}/{hv_f:.3f}")
    dt = time.perf_counter() - t0
    report(7, wins >= 4 and dt < 2700, f"transfer wins {wins}/5 (HV transfer/fresh {', '.join(detail)}), {dt:.0f}s")


@pytest.fixture(scope="module")
def bank20():
    cfg = TrainConfig(family="euclidean", n_cities=20, n_subproblems=10, batch_size=64, lr=5e-3, epochs=1,
                      instances_per_epoch=64 * 600, hidden=32, seed=8)
    return train_drlmoa(cfg)


def test_c08_generalization_across_n(report, bank20):
    beaten = 0
    worst = np.inf
    for i in range(10):
        inst = gen_instance("euclidean", 50, 80_000 + i)
        drl = infer_front(bank20, inst)
        rng = np.random.default_rng(i)
        rand = nondominated_filter([(t, evaluate_tour(inst, t)) for t in (rng.permutation(50) for _ in range(100))])
        ref = reference_point(drl.objectives, rand.objectives)
        a, b = hypervolume(drl.objectives, ref), hypervolume(rand.objectives, ref)
        beaten += a > b
        worst = min(worst, a / b)
    report(8, beaten == 10, f"bank trained at n=20 beats random front on {beaten}/10 instances at n=50, "
                            f"worst HV ratio {worst:.2f}")


def test_c09_local_search_never_lowers_hv(report, bank20):
    lower = strict = 0
    for i in range(20):
        inst = gen_instance("euclidean", 20, 90_000 + i)
        drl = infer_front(bank20, inst)
        post = ls_postprocess(inst, drl)
        ref = reference_point(drl.objectives, post.objectives)
        a, b = hypervolume(drl.objectives, ref), hypervolume(post.objectives, ref)
        lower += b < a
        strict += b > a
    report(9, lower == 0 and strict >= 15, f"HV decreased on {lower}/20, strictly increased on {strict}/20")


def test_c10_determinism_and_round_trip(report, tmp_path):
    argv = ["train", "--n", "10", "--subproblems", "3", "--batch", "16", "--iterations", "30", "--hidden", "16",
            "--lr", "5e-3", "--seed", "10"]
    assert cli.main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(argv + ["--out", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".json", ".ckpt"))
    same_files = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in names)
    cfg = TrainConfig(family="euclidean", n_cities=10, n_subproblems=3, batch_size=16, lr=5e-3, epochs=1,
                      instances_per_epoch=16 * 30, hidden=16, seed=10)
    bank = train_drlmoa(cfg)
    bank.save(tmp_path / "c")
    again = ModelBank.load(tmp_path / "c")
    bits = all(x.data.tobytes() == y.data.tobytes()
               for m, m2 in zip(bank.models, again.models)
               for p, p2 in ((m.actor, m2.actor), (m.critic, m2.critic))
               for x, y in zip(p.parameters(), p2.parameters()))
    inst = gen_instance("euclidean", 30, 10)
    fronts = infer_front(bank, inst).objectives.tolist() == infer_front(again, inst).objectives.tolist()
    cli.main(["gen", "--n", "30", "--seed", "10", "--out", str(tmp_path / "i.json")])
    outs = []
    for d in ("a", "b", "a"):
        out = tmp_path / f"f_{len(outs)}.json"
        cli.main(["solve", "--bank", str(tmp_path / d), "--instance", str(tmp_path / "i.json"), "--no-timing",
                  "--out", str(out)])
        outs.append(out.read_bytes())
    recs = [records.read_front(o) for o in outs]
    solved = outs[0] == outs[2] and all(
        (r.objectives, r.tours, r.hv) == (recs[0].objectives, recs[0].tours, recs[0].hv) for r in recs)
    ok = same_files and bits and fronts and solved
    report(10, ok, f"{len(names)} bank files identical {same_files}, tensors bit-identical {bits}, "
                   f"fronts identical {fronts and solved}")


def test_c11_inference_scaling(report):
    cfg = TrainConfig(family="euclidean", n_cities=10, n_subproblems=10, batch_size=8, lr=5e-3, epochs=1,
                      instances_per_epoch=8 * 10, hidden=128, seed=11)
    bank = train_drlmoa(cfg)

    def clock(n):
        inst = gen_instance("euclidean", n, n)
        infer_front(bank, inst)  # warm-up
        best = np.inf
        for _ in range(5):
            t0 = time.perf_counter()
            infer_front(bank, inst)
            best = min(best, time.perf_counter() - t0)
        return best

    t40, t200 = clock(40), clock(200)
    limit = 2 * (200 / 40) * t40
    report(11, t200 <= limit, f"n=40 {t40 * 1e3:.1f} ms, n=200 {t200 * 1e3:.1f} ms, limit {limit * 1e3:.1f} ms")
