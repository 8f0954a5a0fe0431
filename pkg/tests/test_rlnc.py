import numpy as np
import pytest

from mrgrc.gf import GF256, GF65536
from mrgrc.ifg import InvalidTrace, RepairEvent, adversarial_trace, build_ifg, max_flow
from mrgrc.params import ResourceProfile, SystemParams
from mrgrc.rlnc import (
    DegenerateInit,
    InvalidEvent,
    collect,
    init_storage,
    monte_carlo,
    repair_batch,
    repair_pool,
    run_trace,
)

FIG = SystemParams(3, 2, 2, 3, 0, 2)
PR = ResourceProfile(2, 2)


@pytest.mark.parametrize("size", [1, 6, 12])
def test_init_satisfies_data_collection(size):
    st = init_storage(FIG, PR, size, np.random.default_rng(0))
    assert st.nodes.shape == (3, 3, 2, size)
    for pair in [(1, 2), (1, 3), (2, 3)]:
        assert collect(st, pair)


def test_init_rejects_oversized_file():
    with pytest.raises(DegenerateInit):
        init_storage(FIG, PR, 13, np.random.default_rng(0))


def test_init_reports_degenerate_draws():
    # an all-zero coefficient source never decodes
    class ZeroField(type(GF256)):
        def random(self, shape, rng):
            return np.zeros(shape, dtype=self.dtype)

    zero = ZeroField(8)
    with pytest.raises(DegenerateInit, match="resamples"):
        init_storage(FIG, PR, 4, np.random.default_rng(0), zero)


def test_repair_rows_lie_in_pool_span():
    rng = np.random.default_rng(1)
    st = init_storage(FIG, PR, 10, rng)
    ev = RepairEvent(1, (1, 2), (2, 3))
    pool = repair_pool(st, ev, np.random.default_rng(2))
    assert pool.shape == (2 * PR.beta, 10)
    new = repair_batch(st, ev, np.random.default_rng(2))
    f = st.field
    for j in (1, 2):
        assert f.in_rowspace(new.node_rows(1, j), pool)
    # untouched nodes are carried unchanged
    np.testing.assert_array_equal(new.node_rows(1, 3), st.node_rows(1, 3))
    np.testing.assert_array_equal(new.nodes[1:], st.nodes[1:])


def test_local_rows_enter_pool():
    p = SystemParams(3, 2, 2, 3, 1, 2)
    st = init_storage(p, PR, 8, np.random.default_rng(3))
    ev = RepairEvent(2, (1, 2), (1, 3), (3,))
    pool = repair_pool(st, ev, np.random.default_rng(4))
    assert pool.shape[0] == 2 * PR.beta + PR.alpha
    np.testing.assert_array_equal(pool[-2:], st.node_rows(2, 3))


def test_repaired_cluster_rank_bounded_by_inflow():
    p = SystemParams(4, 2, 2, 4, 0, 4)
    pr = ResourceProfile(3, 1)
    st = init_storage(p, pr, 20, np.random.default_rng(5))
    st = repair_batch(st, RepairEvent(1, (1, 2, 3, 4), (2, 3)), np.random.default_rng(6))
    assert st.field.rank(st.cluster_rows(1)) <= p.d * pr.beta


def test_repair_does_not_grow_total_span():
    rng = np.random.default_rng(7)
    p = SystemParams(5, 3, 4, 4, 1, 2)
    pr = ResourceProfile(2, 1)
    st = init_storage(p, pr, 12, rng)
    before = st.rank(range(1, 6))
    for ev in adversarial_trace(p):
        st = repair_batch(st, ev, rng)
        now = st.rank(range(1, 6))
        assert now <= before
        before = now


def test_invalid_event():
    st = init_storage(FIG, PR, 6, np.random.default_rng(0))
    with pytest.raises(InvalidEvent):
        repair_batch(st, RepairEvent(1, (1,), (2, 3)), np.random.default_rng(0))
    with pytest.raises(InvalidTrace):
        monte_carlo(FIG, PR, 6, [RepairEvent(1, (1, 2), (1, 3))], trials=1)


def test_collector_rank_never_exceeds_max_flow():
    rng = np.random.default_rng(8)
    tr = adversarial_trace(FIG)
    st = run_trace(init_storage(FIG, PR, 12, rng), tr, rng)
    assert st.rank((1, 2)) <= max_flow(build_ifg(FIG, PR, tr, (1, 2))) == 10


def test_monte_carlo_deterministic_and_worker_independent():
    tr = adversarial_trace(FIG)
    a = monte_carlo(FIG, PR, [9, 10, 11], tr, trials=12, seed=5)
    b = monte_carlo(FIG, PR, [9, 10, 11], tr, trials=12, seed=5)
    c = monte_carlo(FIG, PR, [9, 10, 11], tr, trials=12, seed=5, workers=2)
    assert [r.outcomes for r in a] == [r.outcomes for r in b] == [r.outcomes for r in c]
    assert [r.success_rate for r in a] == [1.0, 1.0, 0.0]


def test_monte_carlo_single_size_and_rates():
    rep = monte_carlo(FIG, PR, 10, [], trials=5)
    assert rep.success_rate == 1.0 and rep.successes == 5
    assert set(rep.collector_rates()) == {(1, 2), (1, 3), (2, 3)}
    with pytest.raises(ValueError):
        monte_carlo(FIG, PR, 10, [], trials=0)


def test_small_field_fails_more_often():
    tr = adversarial_trace(FIG)
    small = monte_carlo(FIG, PR, 10, tr, trials=150, field="gf256", seed=1)
    large = monte_carlo(FIG, PR, 10, tr, trials=150, field="gf65536", seed=1)
    assert small.field == GF256.name and large.field == GF65536.name
    assert 0.9 <= small.success_rate <= large.success_rate
