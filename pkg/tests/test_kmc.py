"""Event-driven simulation: reproducibility, statistics, mass scans."""

import numpy as np
import pytest

from ipslab.lattice import Distribution, SpinConfig, Volume, marginalize, tv_distance
from ipslab.models import DrivenClock, GlauberIsing, IndependentFlip, SoftFA
from ipslab.exact import build_generator, evolve, stationary
from ipslab.kmc import (
    empirical_cylinder,
    positive_mass_scan,
    read_trajectory,
    simulate,
    write_trajectory,
)

V22 = Volume(d=2, side=2, q=2)
ALL0 = SpinConfig((0, 0, 0, 0))


class TestSimulate:
    def test_zero_horizon(self):
        traj = simulate(GlauberIsing(beta=0.5), V22, ALL0, 0.0, 1)
        assert traj.n_events == 0
        assert traj.final == ALL0

    def test_event_times_strictly_increase_and_flip_one_site(self):
        traj = simulate(DrivenClock(q=3, eps=0.5, base=0.5), Volume(d=1, side=4, q=3),
                        SpinConfig((0, 1, 2, 0)), 5.0, 3)
        assert traj.n_events > 0
        assert (np.diff(traj.times) > 0).all()
        spins = list(traj.initial.spins)
        for x, s in zip(traj.sites, traj.spins):
            assert spins[x] != s
            spins[x] = int(s)
        assert tuple(spins) == traj.final.spins

    def test_bit_reproducible(self):
        a = simulate(GlauberIsing(beta=0.5), V22, ALL0, 4.0, 99, 13)
        b = simulate(GlauberIsing(beta=0.5), V22, ALL0, 4.0, 99, 13)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.sites, b.sites)
        assert a.final == b.final

    def test_distinct_trajectory_indices_differ(self):
        a = simulate(GlauberIsing(beta=0.5), V22, ALL0, 4.0, 99, 0)
        b = simulate(GlauberIsing(beta=0.5), V22, ALL0, 4.0, 99, 1)
        assert (a.times.size != b.times.size) or not np.array_equal(a.times, b.times)

    def test_poisson_event_count(self):
        # Constant-rate model: the event count over [0, T] is Poisson with
        # mean T * sum of the per-site total rates.
        v = Volume(d=1, side=4, q=2)
        model = IndependentFlip.uniform(2)  # total rate 1/2 per site
        T, n_traj = 2.0, 800
        mean_expected = T * 4 * 0.5
        counts = [
            simulate(model, v, SpinConfig((0, 1, 0, 1)), T, 555, i).n_events
            for i in range(n_traj)
        ]
        sample_mean = np.mean(counts)
        # Poisson: var = mean; 3 sigma band for the sample mean
        band = 3 * np.sqrt(mean_expected / n_traj)
        assert abs(sample_mean - mean_expected) <= band

    def test_two_state_long_run_occupation(self):
        v = Volume(d=1, side=1, q=2)
        model = IndependentFlip.uniform(2)
        n_traj = 2000
        hits = sum(
            simulate(model, v, SpinConfig((1,)), 8.0, 777, i).final.spins[0] == 0
            for i in range(n_traj)
        )
        p = hits / n_traj
        assert abs(p - 0.5) <= 3 * np.sqrt(0.25 / n_traj)

    def test_absorbing_state_stops(self):
        # frozen FA from the all-empty configuration never moves
        traj = simulate(SoftFA(eps=0.0, p_one=0.5), V22, ALL0, 10.0, 5)
        assert traj.n_events == 0
        assert traj.final == ALL0


class TestEmpiricalCylinder:
    def test_point_mass_at_time_zero(self):
        table = empirical_cylinder(GlauberIsing(beta=0.5), V22, ALL0, 0.0, (0, 1), 500, 8)
        assert table.p_hat[0] == 1.0
        assert table.counts.sum() == 500

    def test_counts_partition(self):
        table = empirical_cylinder(GlauberIsing(beta=0.5), V22, ALL0, 1.0, (0, 1, 2, 3), 400, 9)
        assert table.counts.sum() == 400
        assert table.p_hat.sum() == pytest.approx(1.0, abs=1e-15)

    def test_thread_count_does_not_change_counts(self):
        t1 = empirical_cylinder(GlauberIsing(beta=0.5), V22, ALL0, 1.0, (0, 1), 600, 31, threads=1)
        t4 = empirical_cylinder(GlauberIsing(beta=0.5), V22, ALL0, 1.0, (0, 1), 600, 31, threads=4)
        assert np.array_equal(t1.counts, t4.counts)

    def test_symmetric_model_uniform_at_long_times(self):
        v = Volume(d=1, side=3, q=2)
        table = empirical_cylinder(IndependentFlip.uniform(2), v, SpinConfig((0, 0, 0)),
                                   12.0, (0, 1, 2), 4000, 17)
        for p, se in zip(table.p_hat, table.std_err):
            assert abs(p - 1 / 8) <= 3 * max(se, 1e-9)

    @pytest.mark.parametrize(
        "model,volume",
        [
            (GlauberIsing(beta=0.5), V22),
            (DrivenClock(q=3, eps=0.5, base=0.5), Volume(d=1, side=3, q=3)),
            (SoftFA(eps=0.4, p_one=0.3), Volume(d=1, side=3, q=2)),
        ],
    )
    def test_agreement_with_exact_engine(self, model, volume):
        init = SpinConfig.constant(volume, 0)
        window = tuple(range(volume.n_sites))
        n_traj = 4000
        table = empirical_cylinder(model, volume, init, 0.7, window, n_traj, 23)
        gen = build_generator(model, volume)
        exact = marginalize(
            evolve(Distribution.point_mass(volume, init), gen, 0.7, tol=1e-12), window
        ).weights
        assert tv_distance(table.p_hat, exact) <= 4 * table.std_err.max() * len(exact) ** 0.5
        z = np.abs(table.p_hat - exact) / np.maximum(table.std_err, 1e-9)
        assert np.median(z) < 3.0


class TestMassScan:
    def test_single_site_closed_form(self):
        v = Volume(d=1, side=1, q=2)
        scan = positive_mass_scan(
            IndependentFlip.uniform(2), v, (0,), 0.5, [0.5, 1.0, 2.0], 101,
            n_traj=20000, method="kmc",
        )
        for t in scan.times:
            closed = (1 - np.exp(-t)) / 2
            row_floor = scan.floor_at(t)
            se = max(r.std_err for r in scan.rows if r.t == t)
            assert abs(row_floor - closed) <= 3 * se + 1e-9

    def test_exact_path_long_time_floor_is_min_stationary_weight(self):
        v = Volume(d=1, side=3, q=2)
        model = SoftFA(eps=0.5, p_one=0.3)
        scan = positive_mass_scan(model, v, (0, 1), 0.5, [0.5, 2.0, 30.0], 7, method="exact")
        pi = stationary(build_generator(model, v), tol=1e-11)
        min_pattern = marginalize(pi, (0, 1)).weights.min()
        assert scan.floor_at(30.0) == pytest.approx(min_pattern, abs=1e-6)
        assert scan.empirical_floor > 0.0

    def test_frozen_constraint_pins_floor_at_zero(self):
        scan = positive_mass_scan(
            SoftFA(eps=0.0, p_one=0.5), V22, (0,), 0.5, [0.5, 1.0], 11,
            n_traj=300, method="kmc",
        )
        assert scan.empirical_floor == 0.0

    def test_grid_before_tau_rejected(self):
        with pytest.raises(ValueError):
            positive_mass_scan(IndependentFlip.uniform(2), V22, (0,), 1.0, [0.5], 1)


class TestTrajectoryLog:
    def test_roundtrip(self, tmp_path):
        model = DrivenClock(q=3, eps=0.5, base=0.5)
        v = Volume(d=1, side=4, q=3)
        traj = simulate(model, v, SpinConfig((0, 1, 2, 0)), 3.0, 55, 2)
        path = tmp_path / "traj.bin"
        write_trajectory(path, traj, v)
        header, back = read_trajectory(path)
        assert header["q"] == 3 and header["enumeration"] == 1
        assert back.final == traj.final
        assert np.allclose(back.times, traj.times)
        assert np.array_equal(back.sites, traj.sites)
        assert back.model_hash == traj.model_hash

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"definitely not a log")
        with pytest.raises(ValueError):
            read_trajectory(path)
