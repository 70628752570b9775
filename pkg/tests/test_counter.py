import numpy as np
import pytest

from timeleak import counter as C
from timeleak import dataset as D
from timeleak import network as N

from conftest import binary_schema, identity_normalizer, random_reducer_net


def hand_reducer(weights, bias, domains, hidden=()):
    """Single-interface-layer reducer with explicit weights over raw features."""
    n = len(domains)
    return C.ReducerNet(
        input_shift=np.zeros(n),
        input_denom=np.ones(n),
        hidden=tuple(hidden),
        iface_w=np.asarray(weights, dtype=np.float64).reshape(-1, n if not hidden else hidden[-1][0].shape[0]),
        iface_b=np.asarray(bias, dtype=np.float64).reshape(-1),
        domains=tuple(domains),
    )


@pytest.fixture
def and_gate_reducer():
    # preact = x0 + x1 - 1.5 over the 2-bit domain: bit 1 only at (1, 1)
    return hand_reducer([[1.0, 1.0]], [-1.5], (D.Binary(), D.Binary()))


class TestExtractReducer:
    def test_matches_parent_on_fresh_points(self, rng):
        net = random_reducer_net(rng, n_secret=6, k=3, hidden=(8,))
        reducer = C.extract_reducer(net)
        x = rng.integers(0, 2, size=(500, 6)).astype(np.float64)
        parent_bits = N.secret_interface_bits(net, net.normalizer.map_secrets(x))
        assert np.array_equal(parent_bits, reducer.bits(x))

    def test_k0_rejected(self):
        arch = N.Architecture(n_secret=2, n_public=2, k=0, joint_widths=(4,))
        net = N.init(arch, seed=0)
        net.schema = binary_schema(2)
        net.normalizer = identity_normalizer(2)
        with pytest.raises(C.ZeroInterfaceWidth):
            C.extract_reducer(net)

    def test_wide_secret_branch_extraction(self, rng):
        # 1024 binary secrets through a [50, 50] stack into 6 interface bits.
        net = random_reducer_net(rng, n_secret=1024, k=6, hidden=(50, 50))
        reducer = C.extract_reducer(net)
        assert reducer.k == 6 and reducer.n_features == 1024


class TestBruteForce:
    def test_hand_reducer_census(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        census = C.brute_force_census(and_gate_reducer, dom)
        assert census.counts == (3, 1)  # valuation 0 -> 3 secrets, valuation 1 -> 1
        assert census.status(0) == "counted" and census.status(1) == "counted"

    def test_constant_bias_reducer_single_class(self):
        reducer = hand_reducer([[0.0, 0.0, 0.0]], [-1.0], (D.Binary(),) * 3)
        dom = C.SecretDomain(los=(0,) * 3, his=(1,) * 3)
        census = C.brute_force_census(reducer, dom)
        assert census.counts == (8, 0)
        assert census.feasible_count == 1

    def test_cap_semantics(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        census = C.brute_force_census(and_gate_reducer, dom, cap=2)
        assert census.counts == (2, 1)
        assert census.cap_hits == (True, False)
        assert census.true_counts == (3, 1)

    def test_domain_guard(self):
        reducer = hand_reducer([[1.0]], [0.0], (D.IntRange(0, 2**21),))
        with pytest.raises(C.DomainTooLarge):
            C.brute_force_census(reducer, C.SecretDomain(los=(0,), his=(2**21,)))


class TestPropagateBounds:
    def test_affine_over_unit_box(self, and_gate_reducer):
        lb, ub = C.propagate_bounds(and_gate_reducer, [(0, 1), (0, 1)])
        assert lb[0] == pytest.approx(-1.5) and ub[0] == pytest.approx(0.5)

    def test_point_box_is_exact(self, and_gate_reducer):
        lb, ub = C.propagate_bounds(and_gate_reducer, [(1, 1), (1, 1)])
        assert lb[0] == ub[0] == pytest.approx(0.5)

    def test_relu_clamps_lower_bound(self):
        # Hidden unit spans [-2, 3]; after ReLU the interface sees [0, 3].
        hidden = ((np.array([[1.0]]), np.array([-2.0])),)
        reducer = hand_reducer([[1.0]], [0.0], (D.IntRange(0, 5),), hidden=hidden)
        lb, ub = C.propagate_bounds(reducer, [(0, 5)])
        assert lb[0] == pytest.approx(0.0) and ub[0] == pytest.approx(3.0)

    def test_soundness_random_sampling(self, rng):
        for _ in range(20):
            net = random_reducer_net(rng, n_secret=4, k=2, hidden=(6,))
            reducer = C.extract_reducer(net, self_check_points=0)
            lo = rng.integers(0, 2, size=4)
            hi = np.maximum(lo, rng.integers(0, 2, size=4))
            lb, ub = C.propagate_bounds(reducer, list(zip(lo, hi)))
            for _ in range(50):
                x = rng.integers(lo, hi + 1).astype(np.float64)[None, :]
                pre = reducer.preactivations(x)[0]
                assert np.all(pre >= lb - 1e-9) and np.all(pre <= ub + 1e-9)

    def test_shrinking_box_never_widens(self, rng):
        net = random_reducer_net(rng, n_secret=3, k=2, hidden=(5,))
        reducer = C.extract_reducer(net, self_check_points=0)
        lb_wide, ub_wide = C.propagate_bounds(reducer, [(0, 1)] * 3)
        lb_narrow, ub_narrow = C.propagate_bounds(reducer, [(0, 1), (1, 1), (0, 0)])
        assert np.all(lb_narrow >= lb_wide - 1e-12)
        assert np.all(ub_narrow <= ub_wide + 1e-12)


class TestBnb:
    def test_hand_reducer_matches_brute_force(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        assert C.bnb_census(and_gate_reducer, dom, cap=10) == C.brute_force_census(
            and_gate_reducer, dom, cap=10
        )

    def test_random_reducers_oracle_equivalence(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(1, 4))
            net = random_reducer_net(rng, n_secret=n, k=k, hidden=(int(rng.integers(2, 9)),))
            reducer = C.extract_reducer(net, self_check_points=0)
            dom = C.SecretDomain(los=(0,) * n, his=(1,) * n)
            for cap in (1, 5, dom.size):
                assert C.bnb_census(reducer, dom, cap=cap) == C.brute_force_census(reducer, dom, cap=cap)

    def test_int_range_domains(self, rng):
        # Non-binary features exercise the bisection branch.
        reducer = C.ReducerNet(
            input_shift=np.array([0.0, -5.0]),
            input_denom=np.array([10.0, 10.0]),
            hidden=((rng.normal(size=(4, 2)), rng.normal(size=4)),),
            iface_w=rng.normal(size=(2, 4)),
            iface_b=rng.normal(size=2),
            domains=(D.IntRange(0, 10), D.IntRange(-5, 5)),
        )
        dom = C.SecretDomain(los=(0, -5), his=(10, 5))
        for cap in (1, 7, dom.size):
            assert C.bnb_census(reducer, dom, cap=cap) == C.brute_force_census(reducer, dom, cap=cap)

    def test_completeness_sums_to_domain_size(self, rng):
        net = random_reducer_net(rng, n_secret=7, k=3, hidden=(6,))
        reducer = C.extract_reducer(net, self_check_points=0)
        dom = C.SecretDomain(los=(0,) * 7, his=(1,) * 7)
        census = C.bnb_census(reducer, dom, cap=dom.size + 1)
        assert census.total_counted == dom.size == 128
        assert census.complete

    def test_cap_one_marks_every_feasible_class(self, rng):
        net = random_reducer_net(rng, n_secret=5, k=2, hidden=(4,))
        reducer = C.extract_reducer(net, self_check_points=0)
        dom = C.SecretDomain(los=(0,) * 5, his=(1,) * 5)
        census = C.bnb_census(reducer, dom, cap=1)
        for v in range(4):
            assert census.status(v) in ("infeasible", "cap_hit")
            assert census.counts[v] <= 1

    def test_budget_exhaustion_marks_incomplete(self, rng):
        # A 1024-bit domain cannot be exhausted; the search must stop at the
        # node budget and say so.
        net = random_reducer_net(rng, n_secret=1024, k=4, hidden=(20,))
        reducer = C.extract_reducer(net, self_check_points=0)
        dom = C.SecretDomain(los=(0,) * 1024, his=(1,) * 1024)
        census = C.bnb_census(reducer, dom, cap=100, budget=500)
        assert not census.complete
        assert census.nodes <= 500
        with pytest.raises(C.IncompleteCensus):
            C.feasible_classes(census)

    def test_bad_cap(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        with pytest.raises(C.CounterError):
            C.bnb_census(and_gate_reducer, dom, cap=0)


class TestFeasibleClasses:
    def test_ordering_and_omission(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        census = C.brute_force_census(and_gate_reducer, dom)
        assert C.feasible_classes(census) == [("0", 3), ("1", 1)]

    def test_singleton(self):
        census = C.census_from_sizes([7], k=2)
        assert C.feasible_classes(census) == [("00", 7)]


class TestCensusJson:
    def test_round_trip(self, and_gate_reducer):
        dom = C.SecretDomain(los=(0, 0), his=(1, 1))
        census = C.brute_force_census(and_gate_reducer, dom, cap=2)
        again = C.ClassCensus.from_json(census.to_json())
        assert again == census

    def test_from_sizes_with_cap(self):
        census = C.census_from_sizes([68, 16, 27, 1, 16], cap=100, k=3)
        assert census.feasible_count == 5
        assert census.total_counted == 128
        census_capped = C.census_from_sizes([150, 40], cap=100, k=1)
        assert census_capped.counts == (100, 40)
        assert census_capped.cap_hits == (True, False)
