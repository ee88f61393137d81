"""Policy tests: discard rules against exact distributions, rollout
machinery, leader selection, and the preparation front door."""

import numpy as np
import pytest

from reassort.bench import gen_ec8, gen_footnote9
from reassort.dp import ValueTables, build_tables, epsilon_star
from reassort.lp import LPSolution, solve_expected_lp
from reassort.model import ConsumerType, DurationDist, Instance, MNL
from reassort.policies import (
    GR,
    IB,
    KINDS,
    HybridI,
    HybridII,
    SimInfusion,
    SimRandom,
    _psi,
    estimate_future_revenue,
    prepare,
)
from reassort.rng import Streams, split
from reassort.sim import InventoryState, run_episode


def two_product_instance(c=5):
    ct = ConsumerType(
        id=0,
        choice=MNL(alpha0=1.0, alpha=np.array([1.0, 1.0])),
        fees=np.array([1.0, 1.0]),
        durations=(DurationDist.point_infinite(),) * 2,
    )
    return Instance(n=2, c=(c, c), T=1, types=(ct,), arrival=np.ones((1, 1)))


def constant_offer_lp(inst, S=(0, 1)):
    """Synthetic solution whose only column offers S with mass one."""
    phis = tuple(inst.types[0].choice.prob(S, i) for i in S)
    return LPSolution(
        objective=0.0,
        columns=[],
        theta=np.zeros((inst.n, inst.T + 1)),
        lam=np.zeros((inst.T + 1, 1)),
        contrib=np.zeros(inst.n),
        pair_columns={(1, 0): [(S, 1.0, phis)]},
    )


def zero_fee_instance(T=2):
    ct = ConsumerType(
        id=0,
        choice=MNL(alpha0=0.0, alpha=np.array([1.0])),
        fees=np.array([0.0]),
        durations=(DurationDist.point_infinite(),),
    )
    return Instance(n=1, c=(1,), T=T, types=(ct,), arrival=np.ones((T, 1)))


# ---------------------------------------------------------------------------
# coin-flip discarding


def test_coin_discard_exact_distribution():
    # gamma = 1/2 on a mass-one {0,1} column with phi = 1/3 each:
    # keep-set probabilities are 1/4 each, and the prefix sampler turns
    # a single survivor into {i} w.p. 2/3, empty w.p. 1/3, giving
    # P({0,1}) = 1/4, P({0}) = P({1}) = 1/6, P(empty) = 5/12
    inst = two_product_instance()
    policy = SimRandom(inst, constant_offer_lp(inst), gamma=0.5)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(2024, 0))
    n = 24_000
    counts = {(): 0, (0,): 0, (1,): 0, (0, 1): 0}
    for _ in range(n):
        counts[policy.decide(1, 0, inv, streams)] += 1
    expected = {(0, 1): 0.25, (0,): 1 / 6, (1,): 1 / 6, (): 5 / 12}
    for S, p in expected.items():
        se = np.sqrt(p * (1 - p) / n)
        assert abs(counts[S] / n - p) <= 4 * se, (S, counts[S] / n, p)
    # the post-processed marginal is (1 - gamma) * y * phi = 1/6
    phi = inst.types[0].choice
    marg = sum(cnt * phi.prob(S, 0) for S, cnt in counts.items()) / n
    assert abs(marg - 1 / 6) <= 4 * np.sqrt(1 / 6 * 5 / 6 / n)


def test_gamma_one_discards_everything():
    inst = two_product_instance()
    policy = SimRandom(inst, constant_offer_lp(inst), gamma=1.0)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(1, 0))
    for _ in range(50):
        assert policy.decide(1, 0, inv, streams) == ()


def test_gamma_zero_never_discards():
    inst = two_product_instance()
    policy = SimRandom(inst, constant_offer_lp(inst), gamma=0.0)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(1, 0))
    for _ in range(50):
        assert policy.decide(1, 0, inv, streams) == (0, 1)


def test_gamma_validated():
    inst = two_product_instance()
    lp = constant_offer_lp(inst)
    with pytest.raises(ValueError, match="gamma"):
        SimRandom(inst, lp, gamma=1.5)
    with pytest.raises(ValueError, match="gamma"):
        SimRandom(inst, lp, gamma=-0.1)


# ---------------------------------------------------------------------------
# exhausted inventory


def test_all_kinds_offer_nothing_when_sold_out():
    inst = gen_ec8(kappa=0.0, scenario="NO_RENTAL", instance_seed=8, T=10, c=1)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    inv = InventoryState.fresh(inst.c)
    for i in range(inst.n):
        inv.allocate(i, 1, float("inf"), inst.T)
    streams = Streams(split(5, 0))
    for kind in KINDS:
        policy = prepare(kind, inst, lp, tables)
        state = policy.new_state()
        for t in (1, 5, 10):
            assert policy.decide(t, 0, inv, streams, state) == (), kind


# ---------------------------------------------------------------------------
# threshold rules


def test_infusion_threshold_boundary_accepts_ties():
    # footnote-9 has P[0][1][z] = 1.0 and the sure type's fee is exactly
    # 1.0, so the tie must keep the product on offer
    inst = gen_footnote9(0.5)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    policy = SimInfusion(inst, lp, tables)
    inv = InventoryState.fresh(inst.c)
    offered = set()
    streams = Streams(split(11, 0))
    for _ in range(200):
        offered.add(policy.decide(1, 0, inv, streams))
    # the LP column splits mass between {0} and nothing
    assert offered == {(), (0,)}


def test_opt_dis_requires_non_reusable():
    inst = gen_ec8(kappa=0.0, scenario="RENTAL", instance_seed=8, T=10, c=1)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    with pytest.raises(ValueError, match="never return"):
        prepare("SimOptDis", inst, lp, tables)


# ---------------------------------------------------------------------------
# hybrid label assignment


def shaped_tables(inst, r_value):
    T, Z, n = inst.T, inst.num_types, inst.n
    return ValueTables(
        V=np.zeros((n, T + 2)),
        P=np.zeros((n, T + 2, Z)),
        E={i: np.zeros((T + 2, inst.c[i] + 1)) for i in range(n)},
        Q={i: np.zeros((T + 2, inst.c[i] + 1)) for i in range(n)},
        R=np.full(n, r_value),
    )


def test_hybrid_labels_follow_ratio_rule():
    inst = two_product_instance(c=30)
    lp = constant_offer_lp(inst)
    eps30 = epsilon_star(30)[0]
    assert eps30 < 0.5
    weak = HybridI(inst, lp, shaped_tables(inst, 0.5), gamma=0.3)
    assert weak.labels == {0: "random", 1: "random"}
    strong = HybridI(inst, lp, shaped_tables(inst, 0.95), gamma=0.3)
    assert strong.labels == {0: "threshold-stock", 1: "threshold-stock"}


def test_hybrid_labels_reusable_branch():
    inst = gen_ec8(kappa=0.0, scenario="RENTAL", instance_seed=2, T=20, c=2)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    policy = HybridI(inst, lp, tables, gamma=0.3)
    for i, lab in policy.labels.items():
        expect_random = tables.R[i] + epsilon_star(inst.c[i])[0] < 1.0
        if expect_random:
            assert lab == "random"
        else:
            assert lab == "threshold"


# ---------------------------------------------------------------------------
# rollouts


def test_estimate_past_horizon_is_zero():
    inst = gen_footnote9(0.5)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    cand = SimInfusion(inst, lp, tables)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(0, 0))
    assert estimate_future_revenue(cand, inst, 3, inv, 5, streams) == 0.0


def test_estimate_zero_fee_is_zero():
    inst = zero_fee_instance()
    cand = prepare("GR", inst)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(0, 0))
    assert estimate_future_revenue(cand, inst, 1, inv, 20, streams) == 0.0


def test_estimate_matches_exact_tree():
    # exact rollout value of the threshold policy on the two-period
    # fixture: revenue 0, 1, 2 with probabilities 1/4, 1/2, 1/4
    inst = gen_footnote9(0.5)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    cand = SimInfusion(inst, lp, tables)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(21, 0))
    est = estimate_future_revenue(cand, inst, 1, inv, 10_000, streams)
    assert abs(est - 1.0) <= 3.0 * np.sqrt(0.5 / 10_000)


def test_shared_rollout_keys_reproduce_estimates():
    inst = gen_footnote9(0.5)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    cand = SimInfusion(inst, lp, tables)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(33, 0))
    keys = [streams.fresh_rollout_key() for _ in range(25)]
    a = estimate_future_revenue(cand, inst, 1, inv, 25, streams, keys)
    b = estimate_future_revenue(cand, inst, 1, inv, 25, streams, keys)
    assert a == b
    c = estimate_future_revenue(cand, inst, 1, inv, 25, streams)
    d = estimate_future_revenue(cand, inst, 1, inv, 25, streams)
    assert c != d or c == a  # sequential stream moves on


# ---------------------------------------------------------------------------
# leader selection


def test_single_candidate_leader_matches_component():
    inst = gen_ec8(kappa=1.0, scenario="RENTAL", instance_seed=3, T=20, c=2)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    alone = SimInfusion(inst, lp, tables)
    wrapped = HybridII([SimInfusion(inst, lp, tables)], inst, switch_period=5, mc_iters=2)
    # reviews only consume the rollout substream, so the wrapped run
    # must produce the identical trace
    for seed in (0, 1, 2):
        a = run_episode(inst, alone, split(seed, 0))
        b = run_episode(inst, wrapped, split(seed, 0))
        assert a.trace == b.trace


def test_ties_keep_first_candidate():
    inst = zero_fee_instance(T=4)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    first = SimInfusion(inst, lp, tables)
    second = SimRandom(inst, lp, 0.5)
    policy = HybridII([first, second], inst, switch_period=2, mc_iters=3)
    state = policy.new_state()
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(9, 0))
    policy.decide(1, 0, inv, streams, state)
    assert state["leader"] is first
    assert state["next_review"] == 3


def test_review_schedule():
    inst = zero_fee_instance(T=8)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    policy = HybridII(
        [SimInfusion(inst, lp, tables), SimRandom(inst, lp, 0.5)],
        inst,
        switch_period=3,
        mc_iters=1,
    )
    state = policy.new_state()
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(10, 0))
    policy.decide(1, 0, inv, streams, state)
    assert state["next_review"] == 4
    policy.decide(2, 0, inv, streams, state)
    policy.decide(3, 0, inv, streams, state)
    assert state["next_review"] == 4
    policy.decide(4, 0, inv, streams, state)
    assert state["next_review"] == 7


def test_switch_period_none_reviews_once():
    inst = zero_fee_instance(T=8)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    policy = HybridII(
        [SimInfusion(inst, lp, tables), SimRandom(inst, lp, 0.5)],
        inst,
        switch_period=None,
        mc_iters=1,
    )
    state = policy.new_state()
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(12, 0))
    policy.decide(1, 0, inv, streams, state)
    leader = state["leader"]
    for t in range(2, 9):
        policy.decide(t, 0, inv, streams, state)
        assert state["leader"] is leader


def test_hybrid_ii_requires_state():
    inst = zero_fee_instance()
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    policy = HybridII([SimInfusion(inst, lp, tables)], inst, switch_period=1, mc_iters=1)
    inv = InventoryState.fresh(inst.c)
    with pytest.raises(ValueError, match="state"):
        policy.decide(1, 0, inv, Streams(split(0, 0)))


def test_hybrid_ii_validation():
    inst = zero_fee_instance()
    with pytest.raises(ValueError, match="candidate"):
        HybridII([], inst, switch_period=1, mc_iters=1)
    lp = solve_expected_lp(inst)
    tables = build_tables(inst, lp)
    with pytest.raises(ValueError, match="switch_period"):
        HybridII([SimInfusion(inst, lp, tables)], inst, switch_period=0, mc_iters=1)


# ---------------------------------------------------------------------------
# oracle-based policies


def test_psi_endpoints_exact():
    assert _psi(1.0) == 1.0
    assert _psi(0.0) == 0.0
    assert 0.0 < _psi(0.5) < 1.0


def test_greedy_equals_balancing_at_full_stock():
    inst = gen_ec8(kappa=2.0, scenario="RENTAL", instance_seed=6, T=20, c=4)
    gr = prepare("GR", inst)
    ib = prepare("IB", inst)
    inv = InventoryState.fresh(inst.c)
    streams = Streams(split(3, 0))
    for t in range(1, inst.T + 1):
        for z in range(inst.num_types):
            assert gr.decide(t, z, inv, streams) == ib.decide(t, z, inv, streams)


def test_balancing_damps_low_stock_products():
    # two identical products, one almost sold out: balancing must
    # prefer the fuller one when the oracle is forced to pick one
    ct = ConsumerType(
        id=0,
        choice=MNL(alpha0=0.0, alpha=np.array([1.0, 1.0])),
        fees=np.array([1.0, 1.0]),
        durations=(DurationDist.point_infinite(),) * 2,
    )
    from reassort.model import FeasibleFamily

    inst = Instance(
        n=2,
        c=(10, 10),
        T=1,
        types=(ct,),
        arrival=np.ones((1, 1)),
        family=FeasibleFamily.max_cardinality(1),
    )
    inv = InventoryState.fresh(inst.c)
    for _ in range(9):
        inv.allocate(0, 1, float("inf"), 1)
    ib = prepare("IB", inst)
    assert ib.decide(1, 0, inv, Streams(split(0, 0))) == (1,)


# ---------------------------------------------------------------------------
# preparation front door


def test_prepare_default_gamma():
    inst = two_product_instance(c=7)
    lp = constant_offer_lp(inst)
    policy = prepare("SimRandom", inst, lp)
    assert policy.gamma == epsilon_star(7)[1]
    custom = prepare("SimRandom", inst, lp, config={"gamma": 0.25})
    assert custom.gamma == 0.25


def test_prepare_candidate_sets():
    rental = gen_ec8(kappa=0.0, scenario="RENTAL", instance_seed=1, T=10, c=1)
    lp_r = solve_expected_lp(rental)
    hy_r = prepare("HybridII", rental, lp_r, build_tables(rental, lp_r))
    assert [c.kind for c in hy_r.candidates] == ["SimInfusion", "SimRandom"]
    nore = gen_ec8(kappa=0.0, scenario="NO_RENTAL", instance_seed=1, T=10, c=1)
    lp_n = solve_expected_lp(nore)
    hy_n = prepare("HybridII", nore, lp_n, build_tables(nore, lp_n))
    assert [c.kind for c in hy_n.candidates] == ["SimInfusion", "SimRandom", "SimOptDis"]
    assert hy_n.switch_period == 10 and hy_n.mc_iters == 20
    assert hy_n.common_random_numbers is False


def test_prepare_rejects_missing_inputs():
    inst = gen_footnote9(0.5)
    with pytest.raises(ValueError, match="needs a solved LP"):
        prepare("SimRandom", inst)
    lp = solve_expected_lp(inst)
    with pytest.raises(ValueError, match="needs value tables"):
        prepare("SimInfusion", inst, lp)
    with pytest.raises(ValueError, match="unknown policy kind"):
        prepare("Oracle", inst)


def test_oracle_kinds_need_nothing_extra():
    inst = gen_footnote9(0.5)
    assert prepare("GR", inst).kind == "GR"
    assert prepare("IB", inst).kind == "IB"
