"""Generator assembly, uniformized evolution, stationary solves."""

import numpy as np
import pytest

from ipslab.errors import InfeasibleSizeError
from ipslab.lattice import (
    Distribution,
    ProductMeasure,
    SpinConfig,
    Volume,
    decode,
    kl_divergence,
    tv_distance,
)
from ipslab.models import (
    DrivenClock,
    GlauberIsing,
    IndependentFlip,
    SoftFA,
    TableRateModel,
    rate,
)
from ipslab.exact import (
    build_generator,
    evolve,
    stationary,
    stationarity_residual,
    _power_iteration,
)

V1 = Volume(d=1, side=1, q=2)
V3 = Volume(d=1, side=3, q=2)


def random_distribution(volume, seed):
    rng = np.random.default_rng(seed)
    return Distribution.from_weights(
        volume.q, volume.n_sites, rng.dirichlet(np.ones(volume.require_dense()))
    )


class TestBuildGenerator:
    def test_two_state_chain(self):
        gen = build_generator(IndependentFlip.uniform(2), V1)
        np.testing.assert_allclose(gen.Q.toarray(), [[-0.5, 0.5], [0.5, -0.5]])

    def test_all_rates_zero_gives_zero_matrix(self):
        null = TableRateModel(q=2, d=1, offsets=((0,),), rates=(0.0,) * 4)
        gen = build_generator(null, V3)
        assert gen.Q.nnz == 0 or np.abs(gen.Q.toarray()).max() == 0.0

    def test_two_site_infinite_temperature_glauber(self):
        # Oracle: enumerate single-site flips by hand.
        v = Volume(d=1, side=2, q=2)
        gen = build_generator(GlauberIsing(beta=0.0), v)
        Q = gen.Q.toarray()
        for w in range(4):
            cfg = decode(w, v)
            offdiag = {c: Q[w, c] for c in range(4) if c != w and Q[w, c] != 0}
            assert len(offdiag) == 2
            assert all(val == pytest.approx(0.5) for val in offdiag.values())
            assert Q[w, w] == pytest.approx(-1.0)

    def test_rows_conserve_probability(self):
        for model, vol in [
            (GlauberIsing(beta=0.8), V3),
            (DrivenClock(q=3, eps=0.5, base=0.2), Volume(d=1, side=3, q=3)),
            (SoftFA(eps=0.1, p_one=0.3), Volume(d=2, side=2, q=2)),
        ]:
            assert build_generator(model, vol).conservation_defect() < 1e-12

    def test_offdiagonals_connect_single_flips_only(self):
        v = Volume(d=1, side=3, q=3)
        gen = build_generator(DrivenClock(q=3, eps=0.4, base=0.3), v)
        coo = gen.Q.tocoo()
        for r, c, val in zip(coo.row, coo.col, coo.data):
            if r == c:
                continue
            assert val >= 0.0
            a, b = decode(int(r), v), decode(int(c), v)
            diff = [i for i in range(3) if a.spins[i] != b.spins[i]]
            assert len(diff) == 1
            x = diff[0]
            assert val == pytest.approx(rate(DrivenClock(q=3, eps=0.4, base=0.3), v, a, x, b.spins[x]))

    def test_refuses_oversized_state_space(self):
        with pytest.raises(InfeasibleSizeError):
            build_generator(IndependentFlip.uniform(3), Volume(d=2, side=5, q=3))


class TestEvolve:
    def test_zero_time_is_identity(self):
        gen = build_generator(GlauberIsing(beta=0.5), V3)
        d = random_distribution(V3, 1)
        assert evolve(d, gen, 0.0) is d

    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0, 60.0])
    def test_two_state_closed_form(self, t):
        # Starting from state 1, weight on state 0 is (1 - e^{-t})/2;
        # equivalently (1 + e^{-t})/2 when starting from state 0.
        gen = build_generator(IndependentFlip.uniform(2), V1)
        from_one = evolve(Distribution.point_mass(V1, SpinConfig((1,))), gen, t, tol=1e-13)
        assert from_one.weights[0] == pytest.approx((1 - np.exp(-t)) / 2, abs=1e-12)
        from_zero = evolve(Distribution.point_mass(V1, SpinConfig((0,))), gen, t, tol=1e-13)
        assert from_zero.weights[0] == pytest.approx((1 + np.exp(-t)) / 2, abs=1e-12)

    def test_stationary_input_is_fixed(self):
        v = Volume(d=1, side=3, q=2)
        model = SoftFA(eps=0.2, p_one=0.3)
        gen = build_generator(model, v)
        mu = ProductMeasure.bernoulli(v, 0.3).expand()
        out = evolve(mu, gen, 2.0, tol=1e-12)
        assert tv_distance(out.weights, mu.weights) < 1e-11

    @pytest.mark.parametrize("seed", [0, 1])
    def test_semigroup_property(self, seed):
        rng = np.random.default_rng(seed)
        gen = build_generator(GlauberIsing(beta=0.6), V3)
        d = random_distribution(V3, seed + 10)
        s, t = rng.uniform(0.1, 2.0, size=2)
        tol = 1e-12
        lhs = evolve(evolve(d, gen, s, tol), gen, t, tol)
        rhs = evolve(d, gen, s + t, tol)
        assert tv_distance(lhs.weights, rhs.weights) <= 2e-11

    def test_positivity(self):
        gen = build_generator(DrivenClock(q=3, eps=0.8, base=0.1), Volume(d=1, side=3, q=3))
        d = Distribution.point_mass(Volume(d=1, side=3, q=3), SpinConfig((0, 0, 0)))
        out = evolve(d, gen, 0.05)
        assert out.weights.min() >= 0.0

    def test_invalid_tol(self):
        gen = build_generator(IndependentFlip.uniform(2), V1)
        with pytest.raises(ValueError):
            evolve(Distribution.uniform(V1), gen, 1.0, tol=0.0)


class TestStationary:
    def test_two_state_symmetric(self):
        gen = build_generator(IndependentFlip.uniform(2), V1)
        pi = stationary(gen)
        np.testing.assert_allclose(pi.weights, [0.5, 0.5], atol=1e-12)

    def test_independent_flip_gives_product(self):
        v = Volume(d=1, side=3, q=3)
        p = (0.2, 0.3, 0.5)
        gen = build_generator(IndependentFlip(p), v)
        pi = stationary(gen, tol=1e-11)
        expected = ProductMeasure.from_single(p, 3).expand()
        assert tv_distance(pi.weights, expected.weights) < 1e-10
        assert float(np.abs(pi.weights @ gen.Q).sum()) < 1e-11

    def test_driven_clock_gives_uniform(self):
        v = Volume(d=1, side=3, q=3)
        gen = build_generator(DrivenClock(q=3, eps=0.5, base=0.2), v)
        pi = stationary(gen, tol=1e-11)
        np.testing.assert_allclose(pi.weights, np.full(27, 1 / 27), atol=1e-10)

    def test_power_iteration_agrees_with_direct(self):
        v = Volume(d=1, side=4, q=2)
        gen = build_generator(GlauberIsing(beta=0.6), v)
        direct = stationary(gen, tol=1e-11)
        powered = _power_iteration(gen.Q, tol=1e-11)
        assert tv_distance(direct.weights, powered) < 1e-9


class TestStationarityResidual:
    def test_independent_flip_product_is_stationary(self):
        v = Volume(d=1, side=4, q=2)
        mu = ProductMeasure.bernoulli(v, 0.7)
        assert stationarity_residual(IndependentFlip((0.3, 0.7)), v, mu) <= 1e-12

    def test_soft_fa_bernoulli_is_stationary(self):
        v = Volume(d=1, side=4, q=2)
        assert stationarity_residual(SoftFA(eps=0.1, p_one=0.3), v, ProductMeasure.bernoulli(v, 0.3)) <= 1e-12

    def test_glauber_uniform_product_is_not_stationary(self):
        v = Volume(d=1, side=4, q=2)
        assert stationarity_residual(GlauberIsing(beta=0.5), v, ProductMeasure.uniform(v)) >= 1e-3


class TestLongTimeBehavior:
    @pytest.mark.parametrize(
        "model,volume",
        [
            (IndependentFlip.uniform(2), Volume(d=1, side=4, q=2)),
            (GlauberIsing(beta=0.5), Volume(d=1, side=4, q=2)),
            (DrivenClock(q=3, eps=0.5, base=0.5), Volume(d=1, side=4, q=3)),
            (SoftFA(eps=1.0, p_one=0.3), Volume(d=1, side=4, q=2)),
        ],
    )
    def test_full_system_entropy_is_lyapunov(self, model, volume):
        gen = build_generator(model, volume)
        pi = stationary(gen, tol=1e-11)
        d = random_distribution(volume, 3)
        hs = []
        for t in np.linspace(0.0, 4.0, 21):
            hs.append(kl_divergence(evolve(d, gen, float(t), tol=1e-13).weights, pi.weights))
        diffs = np.diff(hs)
        assert (diffs <= 1e-10).all()

    def test_tv_to_stationary_eventually_below_any_threshold(self):
        # beta = 0.25 keeps the heat-bath gap 1 - tanh(2*beta) above 0.5
        v = Volume(d=1, side=3, q=2)
        gen = build_generator(GlauberIsing(beta=0.25), v)
        pi = stationary(gen, tol=1e-11)
        d = Distribution.point_mass(v, SpinConfig((1, 1, 1)))
        grid = np.linspace(0.0, 30.0, 16)
        dists = [tv_distance(evolve(d, gen, float(t), tol=1e-13).weights, pi.weights) for t in grid]
        assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 1e-6
