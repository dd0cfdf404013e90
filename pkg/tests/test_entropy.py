"""Window entropy functionals: the loss identity is the core oracle here."""

import numpy as np
import pytest

from ipslab.errors import ZeroCylinderError
from ipslab.lattice import Distribution, ProductMeasure, SpinConfig, Volume
from ipslab.models import (
    DrivenClock,
    GlauberIsing,
    IndependentFlip,
    SoftFA,
    gamma,
    oscillation_per_target,
)
from ipslab.exact import build_generator, evolve
from ipslab.entropy import (
    F,
    alpha_coeff,
    beta_coeff,
    entropy_loss_direct,
    entropy_loss_rewritten,
    entropy_trace,
    integrate_loss,
    rel_entropy,
    window_marginal,
    window_rate,
)


def dirichlet_dist(volume, seed, concentration=1.0):
    rng = np.random.default_rng(seed)
    n = volume.require_dense()
    return Distribution.from_weights(volume.q, volume.n_sites, rng.dirichlet(np.full(n, concentration)))


def random_product(volume, seed):
    rng = np.random.default_rng(seed)
    m = rng.dirichlet(np.ones(volume.q), size=volume.n_sites)
    return ProductMeasure(0.9 * m + 0.1 / volume.q)


class TestRelEntropy:
    def test_zero_at_mu(self):
        v = Volume(d=1, side=3, q=2)
        mu = random_product(v, 0)
        assert rel_entropy(mu.expand(), mu, (0, 1), v) == pytest.approx(0.0, abs=1e-14)

    def test_point_mass_against_uniform(self):
        v = Volume(d=1, side=1, q=2)
        nu = Distribution.point_mass(v, SpinConfig((0,)))
        assert rel_entropy(nu, ProductMeasure.uniform(v), (0,), v) == pytest.approx(np.log(2))

    def test_two_term_example(self):
        # 0.5*log(0.5/0.3) + 0.5*log(0.5/0.7), evaluated directly
        v = Volume(d=1, side=1, q=2)
        nu = Distribution(2, 1, np.array([0.5, 0.5]))
        mu = ProductMeasure(np.array([[0.3, 0.7]]))
        expected = 0.5 * np.log(0.5 / 0.3) + 0.5 * np.log(0.5 / 0.7)
        assert rel_entropy(nu, mu, (0,), v) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.087176, abs=1e-6)

    def test_nonnegative_and_zero_iff_equal(self):
        v = Volume(d=1, side=3, q=2)
        mu = random_product(v, 1)
        for seed in range(5):
            nu = dirichlet_dist(v, seed)
            h = rel_entropy(nu, mu, (0, 1, 2), v)
            assert h >= -1e-14


ZOO = [
    (IndependentFlip((0.2, 0.8)), Volume(d=1, side=4, q=2)),
    (GlauberIsing(beta=0.7), Volume(d=1, side=5, q=2)),
    (DrivenClock(q=3, eps=0.5, base=0.2), Volume(d=1, side=4, q=3)),
    (SoftFA(eps=0.2, p_one=0.3), Volume(d=2, side=3, q=2)),
]


def small_window(volume):
    if volume.d == 1:
        return volume.centered_box(1)
    # a 2x2 block in d=2
    return tuple(sorted(volume.site_of(c) for c in [(-1, -1), (-1, 0), (0, -1), (0, 0)]))


class TestLossIdentity:
    @pytest.mark.parametrize("model,volume", ZOO)
    def test_direct_equals_bulk_plus_boundary(self, model, volume):
        mu = random_product(volume, 7)
        for seed in range(8):
            nu = dirichlet_dist(volume, seed)
            w = small_window(volume)
            g = entropy_loss_direct(model, volume, nu, mu, w)
            bulk, boundary = entropy_loss_rewritten(model, volume, nu, mu, w)
            assert g == pytest.approx(bulk + boundary, abs=1e-9)

    def test_stationary_loss_vanishes(self):
        v = Volume(d=1, side=3, q=3)
        model = DrivenClock(q=3, eps=0.5, base=0.2)
        mu = ProductMeasure.uniform(v)
        w = v.centered_box(1)
        assert entropy_loss_direct(model, v, mu.expand(), mu, w) == pytest.approx(0.0, abs=1e-12)
        bulk, boundary = entropy_loss_rewritten(model, v, mu.expand(), mu, w)
        assert bulk == pytest.approx(0.0, abs=1e-12)
        assert boundary == pytest.approx(0.0, abs=1e-12)

    def test_single_site_four_term_hand_expansion(self):
        # Two-state chain with rates 1/2, window = the single site,
        # nu = (0.9, 0.1), mu = (0.5, 0.5). The four (eta, j) terms are
        # hand-expandable.
        v = Volume(d=1, side=1, q=2)
        model = IndependentFlip.uniform(2)
        nu = Distribution(2, 1, np.array([0.9, 0.1]))
        mu = ProductMeasure.uniform(v)

        # integrals over the two cylinders
        I0, I1 = 0.9 * 0.5, 0.1 * 0.5
        B01 = (0.5 / 0.5) * (0.1 / 0.9)   # back-ratio for (eta=0, j=1)
        B10 = (0.5 / 0.5) * (0.9 / 0.1)
        bulk_hand = -(float(F(1 / B01)) * B01 * I0 + float(F(1 / B10)) * B10 * I1)
        boundary_hand = -((I0 - B01 * I0) + (I1 - B10 * I1))
        g_hand = np.log(B01) * I0 + np.log(B10) * I1

        g = entropy_loss_direct(model, v, nu, mu, (0,))
        bulk, boundary = entropy_loss_rewritten(model, v, nu, mu, (0,))
        assert g == pytest.approx(g_hand, abs=1e-14)
        assert bulk == pytest.approx(bulk_hand, abs=1e-14)
        assert boundary == pytest.approx(boundary_hand, abs=1e-14)
        assert boundary == pytest.approx(0.0, abs=1e-14)

    def test_full_torus_loss_is_nonpositive(self):
        # Classical master-equation entropy production: with the window
        # equal to the whole volume and mu stationary... the loss against a
        # product mu is nonpositive only when mu is stationary; here we use
        # the product-stationary soft-FA.
        v = Volume(d=1, side=3, q=2)
        model = SoftFA(eps=0.3, p_one=0.4)
        mu = ProductMeasure.bernoulli(v, 0.4)
        full = tuple(range(v.n_sites))
        for seed in range(5):
            nu = dirichlet_dist(v, seed)
            assert entropy_loss_direct(model, v, nu, mu, full) <= 1e-12

    def test_zero_cylinder_raises_with_pattern(self):
        v = Volume(d=1, side=2, q=2)
        model = IndependentFlip.uniform(2)
        nu = Distribution.point_mass(v, SpinConfig((0, 0)))
        with pytest.raises(ZeroCylinderError) as err:
            entropy_loss_direct(model, v, nu, ProductMeasure.uniform(v), (0, 1))
        assert err.value.pattern is not None


class TestDerivativeOracle:
    @pytest.mark.parametrize("model,volume", ZOO)
    def test_loss_matches_centered_difference(self, model, volume):
        # Independent oracle: finite differences of h along the exact
        # evolution, eps = 1e-5.
        gen = build_generator(model, volume)
        mu = random_product(volume, 3)
        nu0 = dirichlet_dist(volume, 11)
        w = small_window(volume)
        t0, eps = 0.05, 1e-5
        nu_t = evolve(nu0, gen, t0, tol=1e-14)
        h_plus = rel_entropy(evolve(nu_t, gen, eps, tol=1e-14), mu, w, volume)
        h_minus = rel_entropy(evolve(nu0, gen, t0 - eps, tol=1e-14), mu, w, volume)
        fd = (h_plus - h_minus) / (2 * eps)
        g = entropy_loss_direct(model, volume, nu_t, mu, w)
        assert g == pytest.approx(fd, abs=1e-7)


class TestWindowRate:
    def test_window_covering_dependencies_gives_exact_rate(self):
        v = Volume(d=1, side=5, q=2)
        model = GlauberIsing(beta=0.8)
        nu = dirichlet_dist(v, 2)
        w = v.centered_box(2)  # all five sites: dependency ball of the center
        x = v.site_of((0,))
        cfg = SpinConfig((1, 0, 1, 1, 0))
        eta_w = [cfg.spins[s] for s in w]
        from ipslab.models import rate

        got = window_rate(model, v, nu, w, x, eta_w, 1)
        assert got == pytest.approx(rate(model, v, cfg, x, 1), abs=1e-12)

    def test_independent_flip_averages_to_constant(self):
        v = Volume(d=1, side=4, q=2)
        model = IndependentFlip((0.3, 0.7))
        nu = dirichlet_dist(v, 5)
        assert window_rate(model, v, nu, (1, 2), 1, (0, 1), 1) == pytest.approx(0.7)

    def test_quantitative_differentiation_bound(self):
        # |window rate - pointwise rate| <= sum of exterior oscillations,
        # for every ambient configuration.
        v = Volume(d=1, side=5, q=2)
        model = GlauberIsing(beta=1.0)
        w = (2,)
        x = 2
        nu = dirichlet_dist(v, 8)
        bound = {
            j: sum(
                oscillation_per_target(model, v, x, y, j)
                for y in range(v.n_sites)
                if y not in w and y != x
            )
            for j in range(2)
        }
        from ipslab.lattice import decode
        from ipslab.models import rate

        for idx in range(v.n_states):
            cfg = decode(idx, v)
            eta_w = [cfg.spins[s] for s in w]
            for j in range(2):
                wr = window_rate(model, v, nu, w, x, eta_w, j)
                assert abs(wr - rate(model, v, cfg, x, j)) <= bound[j] + 1e-12


class TestAlphaBeta:
    def test_zero_at_mu(self):
        v = Volume(d=1, side=3, q=2)
        mu = random_product(v, 4)
        w = (0, 1)
        assert alpha_coeff(mu.expand(), mu, w, 0, v) == pytest.approx(0.0, abs=1e-14)
        assert beta_coeff(mu.expand(), mu, w, 1, v) == pytest.approx(0.0, abs=1e-14)

    def test_point_mass_single_site(self):
        v = Volume(d=1, side=1, q=2)
        mu = ProductMeasure.uniform(v)
        rho = np.array([1.0, 0.0])
        assert alpha_coeff(rho, mu, (0,), 0, v) == pytest.approx(2.0)
        assert beta_coeff(rho, mu, (0,), 0, v) == pytest.approx(2.0)

    def test_alpha_zero_everywhere_iff_marginals_match(self):
        v = Volume(d=1, side=3, q=2)
        mu = random_product(v, 6)
        windows = [(0,), (1,), (2,), (0, 1), (1, 2), (0, 2), (0, 1, 2)]
        # rho = mu: all alphas vanish
        rho = mu.expand()
        for w in windows:
            for x in w:
                assert alpha_coeff(rho, mu, w, x, v) <= 1e-14
        # any rho with a different window marginal has a positive alpha
        for seed in range(5):
            rho = dirichlet_dist(v, 20 + seed)
            deviating = max(
                alpha_coeff(rho, mu, w, x, v) for w in windows for x in w
            )
            marginal_gap = max(
                np.abs(window_marginal(rho, v, w) - mu.window_weights(w)).max()
                for w in windows
            )
            if marginal_gap > 1e-6:
                assert deviating > 0.0


class TestTrace:
    def _clock_setup(self):
        v = Volume(d=1, side=3, q=3)
        model = DrivenClock(q=3, eps=0.5, base=0.2)
        mu = ProductMeasure.uniform(v)
        return v, model, mu

    def test_stationary_start_gives_all_zero_columns(self):
        v, model, mu = self._clock_setup()
        tr = entropy_trace(model, v, mu.expand(), mu, v.centered_box(1), [0.0, 0.4, 0.9])
        for col in ("h", "g_direct", "g_bulk", "g_boundary", "alpha_sum", "beta_sum", "gamma_beta_sum"):
            assert np.abs(tr.column(col)).max() < 1e-10

    def test_h_at_time_zero_matches_rel_entropy(self):
        v, model, mu = self._clock_setup()
        nu0 = ProductMeasure(np.tile([0.7, 0.2, 0.1], (3, 1))).expand()
        w = v.centered_box(1)
        tr = entropy_trace(model, v, nu0, mu, w, [0.0, 0.3])
        assert tr.rows[0].h == pytest.approx(rel_entropy(nu0, mu, w, v), abs=1e-12)

    def test_integrated_loss_matches_entropy_difference(self):
        # Fundamental theorem of calculus, quadrature refined to 1e-8.
        v, model, mu = self._clock_setup()
        nu0 = ProductMeasure(np.tile([0.6, 0.3, 0.1], (3, 1))).expand()
        w = v.centered_box(1)
        T = 0.8
        gen = build_generator(model, v)
        total = integrate_loss(model, v, nu0, mu, w, T, tol=1e-9)
        h0 = rel_entropy(nu0, mu, w, v)
        hT = rel_entropy(evolve(nu0, gen, T, tol=1e-14), mu, w, v)
        assert total == pytest.approx(hT - h0, abs=5e-8)

    def test_integrated_identity_telescopes(self):
        # integral of g minus (bulk + boundary) integrals vanishes.
        v, model, mu = self._clock_setup()
        nu0 = ProductMeasure(np.tile([0.5, 0.25, 0.25], (3, 1))).expand()
        w = v.centered_box(1)
        grid = np.linspace(0.0, 1.0, 21)
        tr = entropy_trace(model, v, nu0, mu, w, grid)
        g_int = np.trapezoid(tr.column("g_direct"), grid)
        bulk_int = np.trapezoid(tr.column("g_bulk"), grid)
        boundary_int = np.trapezoid(tr.column("g_boundary"), grid)
        assert g_int - bulk_int - boundary_int == pytest.approx(0.0, abs=1e-12)

    def test_zero_loss_inequality_trivial_on_stationary_start(self):
        # With the trajectory started at mu the time-averaged loss is zero
        # and the inequality degenerates to 0 <= 0.
        v, model, mu = self._clock_setup()
        w = v.centered_box(1)
        grid = np.linspace(0.0, 1.0, 11)
        tr = entropy_trace(model, v, mu.expand(), mu, w, grid)
        c_min = 0.2  # model baseline is the smallest rate
        lhs = (c_min / 2) * np.trapezoid(tr.column("alpha_sum"), grid)
        rhs = 2.0 * np.trapezoid(tr.column("gamma_beta_sum"), grid)
        g_int = np.trapezoid(tr.column("g_direct"), grid)
        assert abs(g_int) < 1e-10
        assert lhs <= rhs + 1e-12

    def test_site_table_gamma_matches_models(self):
        v, model, mu = self._clock_setup()
        w = v.centered_box(1)
        tr = entropy_trace(model, v, mu.expand(), mu, w, [0.0, 0.2])
        for x, gm in zip(w, tr.site_table.gamma):
            assert gm == pytest.approx(gamma(model, v, w, x))
