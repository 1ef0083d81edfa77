"""
Level 2: Service Layer Tests

Tests for the Riesz transforms, operator norms, Wolff potentials, dyadic
content and capacity functionals. Expected values are hand computations.
"""

import math

import numpy as np
import pytest


class TestTruncatedTransform:
    """LAB-RIESZ-001: eps-truncated transform"""

    @pytest.mark.level2
    def test_single_atom_in_plane(self):
        """LAB-RIESZ-001: delta_0, s = 1, x = (2, 0), eps = 1 gives (y - x)/|y - x|^2 = (-0.5, 0)."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, truncated_transform

        nu = DiscreteMeasure([[0.0, 0.0]], [1.0], d=2)
        value = truncated_transform(nu, RieszContext(1.0, 2), [2.0, 0.0], 1.0)
        assert value.components == pytest.approx((-0.5, 0.0))
        assert value.magnitude == pytest.approx(0.5)

    @pytest.mark.level2
    def test_symmetric_atoms_cancel(self):
        """LAB-RIESZ-001: atoms at (1, 0) and (-1, 0) cancel at the origin."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, truncated_transform

        nu = DiscreteMeasure([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0], d=2)
        value = truncated_transform(nu, RieszContext(1.0, 2), [0.0, 0.0], 0.5)
        assert value.components == pytest.approx((0.0, 0.0), abs=1e-15)

    @pytest.mark.level2
    def test_two_atoms_on_line(self, two_atoms):
        """LAB-RIESZ-001: delta_0 + delta_1 at x = 2 gives -2/4 - 1/1 = -1.5."""
        from app.services.riesz_service import RieszContext, truncated_transform

        value = truncated_transform(two_atoms, RieszContext(1.0, 1), [2.0], 0.5)
        assert value.components[0] == pytest.approx(-1.5)

    @pytest.mark.level2
    def test_atom_at_distance_eps_is_excluded(self, two_atoms):
        """LAB-RIESZ-001: the truncation keeps only |y - x| > eps."""
        from app.services.riesz_service import RieszContext, truncated_transform

        value = truncated_transform(two_atoms, RieszContext(1.0, 1), [2.0], 1.0)
        assert value.components[0] == pytest.approx(-0.5)

    @pytest.mark.level2
    def test_rejects_bad_input(self, two_atoms):
        """LAB-RIESZ-001: eps must be positive and x must match the dimension."""
        from app.exceptions import ConfigError
        from app.services.riesz_service import RieszContext, truncated_transform

        ctx = RieszContext(1.0, 1)
        with pytest.raises(ConfigError):
            truncated_transform(two_atoms, ctx, [2.0], 0.0)
        with pytest.raises(ConfigError):
            truncated_transform(two_atoms, ctx, [2.0, 0.0], 0.5)

    @pytest.mark.level2
    def test_batch_matches_pointwise(self):
        """LAB-RIESZ-001: the chunked batch agrees with the exactly rounded pointwise sum."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, truncated_transform, truncated_transform_many

        rng = np.random.default_rng(3)
        nu = DiscreteMeasure(rng.random((30, 2)), rng.normal(size=30), d=2)
        ctx = RieszContext(0.7, 2)
        points = rng.random((12, 2)) + 1.5
        batch = truncated_transform_many(nu, ctx, points, 0.1)
        for x, row in zip(points, batch):
            np.testing.assert_allclose(row, truncated_transform(nu, ctx, x, 0.1).components, rtol=1e-12, atol=1e-14)

    @pytest.mark.level2
    def test_batch_keeps_cancellation(self):
        """LAB-RIESZ-001: contributions 1e16, 0.5 and -1e16 sum to 0.5 in the batch path too."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import (
            RieszContext,
            modified_transform_many,
            truncated_transform,
            truncated_transform_many,
        )

        nu = DiscreteMeasure([[1.0], [2.0], [3.0]], [1e16, 1.0, -3e16], d=1)
        ctx = RieszContext(1.0, 1)
        assert truncated_transform(nu, ctx, [0.0], 0.5).components[0] == 0.5
        assert truncated_transform_many(nu, ctx, [[0.0]], 0.5)[0, 0] == 0.5
        # psi = 1 from 2 eps on, so eps = 0.25 leaves every atom at full weight
        assert modified_transform_many(nu, ctx, [[0.0]], 0.25)[0, 0] == 0.5

    @pytest.mark.level2
    def test_compensated_suffix_sums(self):
        """LAB-RIESZ-001: suffix sums keep the small term a plain cumulative sum loses."""
        from app.services.riesz_service import compensated_sum, compensated_suffix_sums

        terms = np.array([[1e16, 0.5, -1e16]])
        suffix = compensated_suffix_sums(terms)
        assert suffix[0, 0] == 0.5
        assert suffix[0, 2] == -1e16
        assert compensated_sum(terms)[0] == 0.5
        assert np.cumsum(terms[:, ::-1], axis=1)[0, -1] == 0.0


class TestMaximalTransform:
    """LAB-RIESZ-002: Maximal transform from distance breakpoints"""

    @pytest.mark.level2
    def test_single_atom(self):
        """LAB-RIESZ-002: delta_0 gives |x|^-s."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, maximal_transform

        nu = DiscreteMeasure([[0.0, 0.0]], [1.0], d=2)
        assert maximal_transform(nu, RieszContext(0.5, 2), [3.0, 4.0]) == pytest.approx(5.0 ** -0.5)

    @pytest.mark.level2
    def test_breakpoint_enumeration(self, two_atoms):
        """LAB-RIESZ-002: delta_0 +- delta_1 at x = 2 gives 1.5 and 0.5."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, maximal_transform

        ctx = RieszContext(1.0, 1)
        assert maximal_transform(two_atoms, ctx, [2.0]) == pytest.approx(1.5)
        signed = DiscreteMeasure([[0.0], [1.0]], [1.0, -1.0], d=1)
        assert maximal_transform(signed, ctx, [2.0]) == pytest.approx(0.5)

    @pytest.mark.level2
    def test_on_an_atom_is_infinite(self, two_atoms):
        """LAB-RIESZ-002: a point sitting on an atom reports inf."""
        from app.services.riesz_service import RieszContext, maximal_transform

        assert math.isinf(maximal_transform(two_atoms, RieszContext(1.0, 1), [1.0]))

    @pytest.mark.level2
    def test_matches_brute_force_sup(self):
        """LAB-RIESZ-002: equals the max of |R_eps| over eps just below every atom distance."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, maximal_transform_many, truncated_transform

        rng = np.random.default_rng(11)
        nu = DiscreteMeasure(rng.random((15, 2)), rng.normal(size=15), d=2)
        ctx = RieszContext(1.3, 2)
        points = rng.random((6, 2)) * 2.0 - 0.5
        fast = maximal_transform_many(nu, ctx, points)
        for x, value in zip(points, fast):
            dist = np.linalg.norm(nu.points - x, axis=1)
            brute = max(truncated_transform(nu, ctx, x, r * (1 - 1e-9)).magnitude for r in dist)
            assert value == pytest.approx(brute, rel=1e-9)

    @pytest.mark.level2
    def test_bounded_by_absolute_potential(self):
        """LAB-RIESZ-002: R_* <= sum |w_j| / |y_j - x|^s."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, absolute_potential_many, maximal_transform_many

        rng = np.random.default_rng(5)
        nu = DiscreteMeasure(rng.random((20, 1)), rng.normal(size=20), d=1)
        points = rng.random((40, 1)) * 3.0 - 1.0
        ctx = RieszContext(0.5, 1)
        assert np.all(maximal_transform_many(nu, ctx, points) <= absolute_potential_many(nu, 0.5, points) * (1 + 1e-12))


class TestModifiedTransform:
    """LAB-RIESZ-003: Smoothly cut-off transform"""

    @pytest.mark.level2
    def test_cutoff_band(self, unit_atom):
        """LAB-RIESZ-003: S(0.5) = 0.5 at 1.5 eps, zero inside eps, unchanged beyond 2 eps."""
        from app.services.riesz_service import RieszContext, modified_transform, truncated_transform

        ctx = RieszContext(1.0, 1)
        assert modified_transform(unit_atom, ctx, [1.5], 1.0).components[0] == pytest.approx(-0.5 / 1.5)
        assert modified_transform(unit_atom, ctx, [0.5], 1.0).components[0] == 0.0
        far = modified_transform(unit_atom, ctx, [3.0], 1.0)
        assert far.components == pytest.approx(truncated_transform(unit_atom, ctx, [3.0], 1.0).components)

    @pytest.mark.level2
    def test_batch_matches_pointwise(self):
        """LAB-RIESZ-003: batch and pointwise modified transforms agree."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext, modified_transform, modified_transform_many

        rng = np.random.default_rng(8)
        nu = DiscreteMeasure(rng.random((25, 2)), rng.normal(size=25), d=2)
        ctx = RieszContext(1.0, 2)
        points = rng.random((10, 2))
        batch = modified_transform_many(nu, ctx, points, 0.2)
        for x, row in zip(points, batch):
            np.testing.assert_allclose(row, modified_transform(nu, ctx, x, 0.2).components, rtol=1e-10, atol=1e-12)


def _random_signed_measure(seed, n=20, d=2):
    from app.services.measure_service import DiscreteMeasure

    rng = np.random.default_rng(seed)
    return DiscreteMeasure(rng.random((n, d)), rng.normal(size=n), d=d), rng


class TestTransformSymmetries:
    """LAB-RIESZ-005: Translation, dilation and comparison invariants"""

    @pytest.mark.level2
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_translation_invariance(self, seed):
        """LAB-RIESZ-005: moving atoms and points together changes no transform beyond 1e-12."""
        from app.services.riesz_service import (
            RieszContext,
            absolute_potential_many,
            maximal_transform_many,
            modified_transform_many,
            pair_sum_batch,
            truncated_transform_many,
        )

        nu, rng = _random_signed_measure(seed)
        ctx = RieszContext(0.7, 2)
        points = rng.random((8, 2)) + 2.0
        shift = np.array([-3.25, 5.5])
        moved = nu.translated(shift)
        scale = absolute_potential_many(nu, ctx.s, points)[:, None]
        for before, after in [
            (truncated_transform_many(nu, ctx, points, 1.5), truncated_transform_many(moved, ctx, points + shift, 1.5)),
            (modified_transform_many(nu, ctx, points, 1.0), modified_transform_many(moved, ctx, points + shift, 1.0)),
            (maximal_transform_many(nu, ctx, points)[:, None], maximal_transform_many(moved, ctx, points + shift)[:, None]),
        ]:
            assert np.all(np.abs(after - before) <= 1e-12 * scale)

        X, Y, Z = (rng.standard_normal((500, 2)) for _ in range(3))
        spread = np.minimum(np.minimum(np.linalg.norm(X - Y, axis=1), np.linalg.norm(Y - Z, axis=1)),
                            np.linalg.norm(X - Z, axis=1))
        keep = spread > 0.1
        X, Y, Z = X[keep], Y[keep], Z[keep]
        q, _ = pair_sum_batch(X, Y, Z, 0.7)
        q_moved, _ = pair_sum_batch(X + shift, Y + shift, Z + shift, 0.7)
        # each of the two products is at most spread^(-2s)
        assert np.all(np.abs(q_moved - q) <= 1e-12 * 2 * spread[keep] ** (-1.4))

    @pytest.mark.level2
    @pytest.mark.parametrize("lam", [0.4, 2.5])
    def test_dilation_covariance(self, lam):
        """LAB-RIESZ-005: dilating by lam with eps scaled multiplies the transforms by lam^-s."""
        from app.services.riesz_service import (
            RieszContext,
            absolute_potential_many,
            maximal_transform_many,
            modified_transform_many,
            truncated_transform_many,
        )

        nu, rng = _random_signed_measure(7)
        ctx = RieszContext(0.6, 2)
        points = rng.random((8, 2)) + 2.0
        big = nu.dilated(lam)
        factor = lam ** -ctx.s
        scale = absolute_potential_many(nu, ctx.s, points)[:, None]
        pairs = [
            (truncated_transform_many(nu, ctx, points, 1.5), truncated_transform_many(big, ctx, lam * points, lam * 1.5)),
            (modified_transform_many(nu, ctx, points, 1.0), modified_transform_many(big, ctx, lam * points, lam * 1.0)),
            (maximal_transform_many(nu, ctx, points)[:, None], maximal_transform_many(big, ctx, lam * points)[:, None]),
        ]
        for base, dilated in pairs:
            assert np.all(np.abs(dilated - factor * base) <= 1e-12 * factor * scale)

    @pytest.mark.level2
    @pytest.mark.parametrize("seed", [3, 4])
    def test_maximal_dominates_truncated(self, seed):
        """LAB-RIESZ-005: R_* >= |R_eps| for every sampled eps."""
        from app.services.riesz_service import RieszContext, maximal_transform_many, truncated_transform_many

        nu, rng = _random_signed_measure(seed, n=25)
        ctx = RieszContext(1.2, 2)
        points = rng.random((30, 2)) * 1.4 - 0.2
        star = maximal_transform_many(nu, ctx, points)
        for eps in np.geomspace(1e-3, 2.0, 40):
            value = np.linalg.norm(truncated_transform_many(nu, ctx, points, eps), axis=1)
            assert np.all(value <= star * (1 + 1e-12) + 1e-15)

    @pytest.mark.level2
    @pytest.mark.parametrize("eps", [0.05, 0.2, 0.6])
    def test_modified_close_to_truncated(self, eps):
        """LAB-RIESZ-005: |R_eps - modified R_eps| <= eps^-s |nu|(B(x, 2 eps))."""
        from app.services.riesz_service import RieszContext, modified_transform_many, truncated_transform_many

        nu, rng = _random_signed_measure(9, n=40)
        ctx = RieszContext(0.8, 2)
        points = rng.random((50, 2))
        gap = np.linalg.norm(
            truncated_transform_many(nu, ctx, points, eps) - modified_transform_many(nu, ctx, points, eps), axis=1
        )
        bound = np.array([eps ** -ctx.s * nu.ball_mass(x, 2 * eps) for x in points])
        assert np.all(gap <= bound * (1 + 1e-12) + 1e-14)
        assert np.any(gap > 0)


class TestPairSum:
    """LAB-RIESZ-004: Symmetrized pair sum of a triple"""

    @pytest.mark.level2
    def test_equilateral_triangle(self):
        """LAB-RIESZ-004: side 1 gives q = 1 and bound 2^(s+1)."""
        from app.services.riesz_service import symmetrized_pair_sum

        report = symmetrized_pair_sum([0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2], 0.7)
        assert report.q == pytest.approx(1.0)
        assert report.bound == pytest.approx(2.0 ** 1.7)

    @pytest.mark.level2
    def test_collinear_triple(self):
        """LAB-RIESZ-004: x = 0, y = 2, z = 1 in d = 1, s = 1 gives q = -0.5, bound 1."""
        from app.services.riesz_service import symmetrized_pair_sum

        report = symmetrized_pair_sum([0.0], [2.0], [1.0], 1.0)
        assert report.q == pytest.approx(-0.5)
        assert report.bound == pytest.approx(1.0)

    @pytest.mark.level2
    def test_right_isosceles_triangle(self):
        """LAB-RIESZ-004: legs 1, s = 1 gives q = 0.5 whatever the labeling."""
        from app.services.riesz_service import symmetrized_pair_sum

        report = symmetrized_pair_sum([1.0, 0.0], [0.0, 1.0], [0.0, 0.0], 1.0)
        assert report.q == pytest.approx(0.5)
        shuffled = symmetrized_pair_sum([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 1.0)
        assert shuffled.q == pytest.approx(0.5)
        assert report.q <= report.bound

    @pytest.mark.level2
    def test_coincident_points_rejected(self):
        """LAB-RIESZ-004: the three points must be distinct."""
        from app.exceptions import ConfigError
        from app.services.riesz_service import symmetrized_pair_sum

        with pytest.raises(ConfigError):
            symmetrized_pair_sum([0.0], [0.0], [1.0], 1.0)

    @pytest.mark.level2
    def test_batch_matches_scalar(self):
        """LAB-RIESZ-004: the vectorized relabeling picks the same triple ordering."""
        from app.services.riesz_service import pair_sum_batch, symmetrized_pair_sum

        rng = np.random.default_rng(21)
        X, Y, Z = (rng.standard_normal((50, 3)) for _ in range(3))
        q, bound = pair_sum_batch(X, Y, Z, 0.6)
        for i in range(50):
            report = symmetrized_pair_sum(X[i], Y[i], Z[i], 0.6)
            assert q[i] == pytest.approx(report.q, rel=1e-10)
            assert bound[i] == pytest.approx(report.bound, rel=1e-10)

    @pytest.mark.level2
    @pytest.mark.parametrize("d,s", [(1, 0.5), (2, 1.0), (3, 0.3), (3, 2.5)])
    def test_random_triples_respect_bound(self, d, s):
        """LAB-RIESZ-004: q <= bound on 20000 random triples."""
        from app.services.riesz_service import pair_sum_batch

        rng = np.random.default_rng(int(10 * s) + d)
        X, Y, Z = (rng.standard_normal((20000, d)) for _ in range(3))
        q, bound = pair_sum_batch(X, Y, Z, s)
        assert int(np.sum(q > bound)) == 0
        assert np.max(q / bound) <= (2.0 ** (s + 1) + 1) / 2.0 ** (s + 2)

    @pytest.mark.level2
    @pytest.mark.slow
    def test_million_triples_respect_bound(self):
        """LAB-RIESZ-004: zero violations over 10^6 triples per (d, s)."""
        from app.services.riesz_service import pair_sum_batch

        for d, s in [(1, 0.5), (2, 1.0), (2, 1.7), (3, 0.5)]:
            rng = np.random.default_rng(1000 * d + int(10 * s))
            violations = 0
            for _ in range(10):
                X, Y, Z = (rng.standard_normal((100_000, d)) for _ in range(3))
                q, bound = pair_sum_batch(X, Y, Z, s)
                violations += int(np.sum(q > bound))
            assert violations == 0


class TestOperatorNorm:
    """LAB-OP-001 & LAB-OP-002: Truncated operator matrices and their norms"""

    @pytest.mark.level2
    def test_assemble_two_atoms(self, two_atoms):
        """LAB-OP-001: atoms {0, 1}, s = 1, eps = 0.5 give [[0, 1], [-1, 0]]."""
        from app.services.operator_service import assemble_operator
        from app.services.riesz_service import RieszContext

        A = assemble_operator(two_atoms, RieszContext(1.0, 1), 0.5)
        np.testing.assert_allclose(A.entries[0], [[0.0, 1.0], [-1.0, 0.0]])

    @pytest.mark.level2
    def test_rotation_norm(self, two_atoms):
        """LAB-OP-002: the rotation matrix has norm 1."""
        from app.services.operator_service import assemble_operator, operator_norm
        from app.services.riesz_service import RieszContext

        A = assemble_operator(two_atoms, RieszContext(1.0, 1), 0.5)
        assert operator_norm(A) == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.level2
    def test_zero_operators(self, two_atoms, unit_atom):
        """LAB-OP-002: eps above the diameter and a single atom give 0."""
        from app.services.operator_service import assemble_operator, power_norm
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(1.0, 1)
        report, _ = power_norm(assemble_operator(two_atoms, ctx, 5.0))
        assert report.norm == 0.0
        assert report.method == "zero"
        single = assemble_operator(unit_atom, ctx, 0.5)
        assert single.entries.shape == (1, 1, 1)
        assert power_norm(single)[0].norm == 0.0

    @pytest.mark.level2
    def test_three_collinear_atoms(self):
        """LAB-OP-002: [[0, 1, 1/2], [-1, 0, 1], [-1/2, -1, 0]] has norm sqrt(1 + 1/4 + 1) = 1.5."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.operator_service import assemble_operator, dense_norm, operator_norm
        from app.services.riesz_service import RieszContext

        nu = DiscreteMeasure([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0], d=1)
        A = assemble_operator(nu, RieszContext(1.0, 1), 0.5)
        assert operator_norm(A) == pytest.approx(1.5, rel=1e-9)
        assert dense_norm(A) == pytest.approx(1.5, rel=1e-12)

    @pytest.mark.level2
    @pytest.mark.parametrize("d,n,seed", [(1, 5, 0), (1, 30, 1), (2, 12, 2), (2, 40, 3), (3, 20, 4)])
    def test_power_iteration_matches_svd(self, d, n, seed):
        """LAB-OP-002: power iteration against the dense SVD oracle."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.operator_service import assemble_operator, dense_norm, operator_norm
        from app.services.riesz_service import RieszContext

        rng = np.random.default_rng(seed)
        nu = DiscreteMeasure(rng.random((n, d)), rng.uniform(0.1, 1.0, n), d=d)
        A = assemble_operator(nu, RieszContext(0.8, d), 0.05)
        assert operator_norm(A) == pytest.approx(dense_norm(A), rel=1e-6)

    @pytest.mark.level2
    def test_signed_measure_rejected(self):
        """LAB-OP-001: operator norms need nonnegative weights."""
        from app.exceptions import ConfigError
        from app.services.measure_service import DiscreteMeasure
        from app.services.operator_service import assemble_operator
        from app.services.riesz_service import RieszContext

        nu = DiscreteMeasure([[0.0], [1.0]], [1.0, -1.0], d=1)
        with pytest.raises(ConfigError):
            assemble_operator(nu, RieszContext(1.0, 1), 0.5)

    @pytest.mark.level2
    @pytest.mark.parametrize("d,seed", [(1, 0), (2, 1), (3, 2)])
    def test_antisymmetry(self, d, seed):
        """LAB-OP-001: <(Af)_c, g> = -<f, (Ag)_c> in L2(mu) for every component."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.operator_service import assemble_operator
        from app.services.riesz_service import RieszContext

        rng = np.random.default_rng(seed)
        nu = DiscreteMeasure(rng.random((25, d)), rng.uniform(0.1, 1.0, 25), d=d)
        A = assemble_operator(nu, RieszContext(0.9, d), 0.1)
        np.testing.assert_array_equal(A.entries, -np.transpose(A.entries, (0, 2, 1)))
        f, g = rng.normal(size=25), rng.normal(size=25)
        Af, Ag = A.apply(f), A.apply(g)
        for c in range(d):
            assert A.inner(Af[c], g) == pytest.approx(-A.inner(f, Ag[c]), rel=1e-10, abs=1e-10)

    @pytest.mark.level2
    def test_sup_visits_every_breakpoint(self):
        """LAB-OP-002: the sup equals the dense maximum over all breakpoints; a cap is reported."""
        from app.services.measure_service import DiscreteMeasure
        from app.services.operator_service import assemble_operator, dense_norm, eps_breakpoints, operator_norm_sup
        from app.services.riesz_service import RieszContext

        rng = np.random.default_rng(17)
        nu = DiscreteMeasure(rng.random((16, 2)), rng.uniform(0.2, 1.0, 16), d=2)
        ctx = RieszContext(0.8, 2)
        grid = eps_breakpoints(nu)
        assert grid.size == 16 * 15 // 2
        dense = max(dense_norm(assemble_operator(nu, ctx, float(eps))) for eps in grid)
        report = operator_norm_sup(nu, ctx, max_points=0)
        assert report.norm == pytest.approx(dense, rel=1e-6)
        assert (report.breakpoints, report.breakpoints_total, report.subsampled) == (grid.size, grid.size, False)

        capped = operator_norm_sup(nu, ctx, max_points=10)
        assert capped.subsampled
        assert capped.breakpoints <= 10
        assert capped.breakpoints_total == grid.size
        assert capped.norm <= report.norm * (1 + 1e-6)

    @pytest.mark.level2
    def test_sup_over_eps(self, two_atoms):
        """LAB-OP-002: the sup over breakpoints of two atoms is the rotation norm."""
        from app.services.operator_service import operator_norm_sup
        from app.services.riesz_service import RieszContext

        report = operator_norm_sup(two_atoms, RieszContext(1.0, 1))
        assert report.norm == pytest.approx(1.0, rel=1e-9)
        assert report.eps == pytest.approx(0.5)

    @pytest.mark.level2
    def test_cantor_theta_ratio(self):
        """LAB-OP-002: the Cantor norm is compared with sum theta_k^2."""
        from app.models.measure_schema import CantorSpec
        from app.services.measure_service import build_cantor
        from app.services.operator_service import cantor_theta_ratio
        from app.services.riesz_service import RieszContext

        mu = build_cantor(CantorSpec.geometric(1, 0.25, 3), 0.5)
        result = cantor_theta_ratio(mu, RieszContext(0.5, 1))
        assert result["theta_sq"] == pytest.approx(4.0)
        assert result["norm"] > 0
        assert result["ratio"] == pytest.approx(result["norm"] ** 2 / 4.0)


class TestWolffPotential:
    """LAB-OP-003: Wolff potentials and energies"""

    @pytest.mark.level2
    def test_point_mass(self, unit_atom):
        """LAB-OP-003: delta_0, s = 1/2 at distance 1 gives 1/(2s) = 1."""
        from app.services.operator_service import wolff_potential

        assert wolff_potential(unit_atom, 0.5, [1.0]) == pytest.approx(1.0)
        assert math.isinf(wolff_potential(unit_atom, 0.5, [0.0]))

    @pytest.mark.level2
    def test_interval_endpoint(self, unit_interval):
        """LAB-OP-003: Lebesgue on [0, 1], s = 1/2, x = 0 gives 1 + 1 = 2."""
        from app.services.operator_service import wolff_potential

        assert wolff_potential(unit_interval, 0.5, [0.0]) == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.level2
    def test_homogeneity(self, unit_interval):
        """LAB-OP-003: mass c scales W by c^2 and the energy by c^3."""
        from app.services.operator_service import wolff_energy, wolff_potential

        scaled = unit_interval.scaled(3.0)
        assert wolff_potential(scaled, 0.5, [0.3]) == pytest.approx(9.0 * wolff_potential(unit_interval, 0.5, [0.3]))
        assert wolff_energy(scaled, 0.5) == pytest.approx(27.0 * wolff_energy(unit_interval, 0.5))

    @pytest.mark.level2
    def test_plane_cube_against_quadrature(self):
        """LAB-OP-003: d = 2 piecewise Gauss integration against a fine log-grid sum."""
        from app.services.measure_service import CubeMeasure
        from app.services.operator_service import wolff_potential, wolff_tail

        mu = CubeMeasure.lebesgue([0.0, 0.0], 1.0)
        x = np.array([0.3, 0.6])
        u = np.linspace(math.log(1e-6), math.log(2.0), 4001)
        r = np.exp(u)
        values = np.array([mu.ball_mass(x, t) for t in r]) ** 2 * r ** -1.0
        reference = np.trapezoid(values, u) + wolff_tail(mu, 0.5, x, 2.0)
        assert wolff_potential(mu, 0.5, x) == pytest.approx(reference, rel=1e-3)

    @pytest.mark.level2
    def test_report_for_atoms(self, two_atoms):
        """LAB-OP-003: atoms give an infinite sup and energy with a note."""
        from app.services.operator_service import wolff_report
        from app.services.riesz_service import RieszContext

        report = wolff_report(two_atoms, RieszContext(0.5, 1), [[3.0]])
        assert report.infinite
        assert math.isinf(report.energy)
        assert report.note
        # mass 1 on (2, 3], 2 beyond: (1/2 - 1/3) + 4/3
        assert report.potential[0] == pytest.approx(1.5)

    @pytest.mark.level2
    def test_weak_type_profile(self, unit_interval, two_atoms):
        """LAB-OP-003: eta{R_* > t} is non-increasing in t."""
        from app.services.operator_service import weak_type_profile
        from app.services.riesz_service import RieszContext

        report = weak_type_profile(unit_interval, two_atoms, RieszContext(0.5, 1), [0.5, 1.0, 2.0, 4.0, 8.0])
        assert len(report.scaled) == 5
        assert all(a >= b for a, b in zip(report.mass_above, report.mass_above[1:]))
        assert report.max_scaled >= 0

    @pytest.mark.level2
    def test_norm_against_wolff_sup(self):
        """LAB-OP-003: the squared surrogate norm is reported against sup W."""
        from app.services.measure_service import CubeMeasure
        from app.services.operator_service import wolff_norm_ratio
        from app.services.riesz_service import RieszContext

        mu = CubeMeasure(np.arange(4).reshape(-1, 1) / 4, 0.25, 0.25)
        result = wolff_norm_ratio(mu, RieszContext(0.5, 1))
        assert result["norm"] > 0
        assert result["sup_wolff"] > 0
        assert result["ratio"] == pytest.approx(result["norm"] ** 2 / result["sup_wolff"])


class TestDyadicContent:
    """LAB-CONT-001 to LAB-CONT-003: Covering cost and Frostman bounds"""

    @pytest.mark.level2
    def test_single_cell(self, linear_gauge):
        """LAB-CONT-001: one cell of side l with h = t costs l/2."""
        from app.services.content_service import DyadicCellSet, covering_upper_bound

        cells = DyadicCellSet([0.0], 1.0, 3, [[2]])
        assert covering_upper_bound(cells, linear_gauge) == pytest.approx(1.0 / 16)

    @pytest.mark.level2
    @pytest.mark.parametrize("depth", [0, 1, 4, 7])
    def test_full_segment(self, linear_gauge, depth):
        """LAB-CONT-001: the unit segment costs 0.5 at every resolution."""
        from app.services.content_service import DyadicCellSet, covering_upper_bound

        cells = DyadicCellSet.full([0.0], 1.0, depth)
        assert covering_upper_bound(cells, linear_gauge) == pytest.approx(0.5)

    @pytest.mark.level2
    def test_two_opposite_cells(self, sqrt_gauge):
        """LAB-CONT-001: two far cells at depth 4 with t^(1/2) cost 2 * 2^(-5/2)."""
        from app.services.content_service import DyadicCellSet, covering_upper_bound

        cells = DyadicCellSet([0.0], 1.0, 4, [[0], [15]])
        assert covering_upper_bound(cells, sqrt_gauge) == pytest.approx(2.0 * 2.0 ** -2.5)

    @pytest.mark.level2
    def test_empty_set(self, linear_gauge):
        """LAB-CONT-001: the empty set has content 0."""
        from app.services.content_service import DyadicCellSet, covering_upper_bound

        assert covering_upper_bound(DyadicCellSet([0.0], 1.0, 3, []), linear_gauge) == 0.0

    @pytest.mark.level2
    def test_frostman_masses(self, linear_gauge, sqrt_gauge):
        """LAB-CONT-002: unit segment gives mass 1 for h = t and for h = t^(1/2) (root cap)."""
        from app.services.content_service import DyadicCellSet, frostman_lower_bound

        cells = DyadicCellSet.full([0.0], 1.0, 6)
        assert frostman_lower_bound(cells, linear_gauge)["mass"] == pytest.approx(1.0)
        assert frostman_lower_bound(cells, sqrt_gauge)["mass"] == pytest.approx(1.0)

    @pytest.mark.level2
    def test_frostman_single_and_separated_cells(self, sqrt_gauge):
        """LAB-CONT-002: a lone cell carries h(l); two far cells carry 2 h(l)."""
        from app.services.measure_service import frostman_measure
        from app.services.content_service import DyadicCellSet

        single = frostman_measure(DyadicCellSet([0.0], 1.0, 3, [[0]]), sqrt_gauge)
        assert single.total_variation == pytest.approx(sqrt_gauge(1.0 / 8))
        pair = frostman_measure(DyadicCellSet([0.0], 1.0, 6, [[0], [63]]), sqrt_gauge)
        assert pair.total_variation == pytest.approx(2.0 * sqrt_gauge(1.0 / 64))

    @pytest.mark.level2
    @pytest.mark.parametrize("d,depth,seed", [(1, 7, 0), (2, 4, 1), (2, 5, 2)])
    def test_bracket_is_ordered(self, d, depth, seed):
        """LAB-CONT-003: lower <= upper on random cell sets."""
        from app.services.content_service import DyadicCellSet, content_bracket, grid_indices
        from app.services.gauge_service import PowerGauge

        rng = np.random.default_rng(seed)
        idx = grid_indices(d, depth)
        cells = DyadicCellSet(np.zeros(d), 1.0, depth, idx[rng.random(idx.shape[0]) < 0.3])
        for beta in (0.5 * d, 0.9 * d, float(d)):
            bracket = content_bracket(cells, PowerGauge(beta, d))
            assert 0 < bracket.lower <= bracket.upper * (1 + 1e-12)
            assert 0 < bracket.ratio <= 1 + 1e-12

    @pytest.mark.level2
    def test_random_coverings_cost_more(self, sqrt_gauge):
        """LAB-CONT-003: the dynamic program beats every random valid covering."""
        from app.services.content_service import DyadicCellSet, covering_upper_bound, random_covering_cost

        rng = np.random.default_rng(4)
        cells = DyadicCellSet([0.0], 1.0, 8, np.flatnonzero(rng.random(256) < 0.2))
        best = covering_upper_bound(cells, sqrt_gauge)
        for _ in range(20):
            assert random_covering_cost(cells, sqrt_gauge, rng) >= best * (1 - 1e-12)

    @pytest.mark.level2
    def test_cells_from_points(self):
        """LAB-CONT-003: points outside the root are dropped, duplicates collapse."""
        from app.services.content_service import DyadicCellSet

        cells = DyadicCellSet.from_points([[0.1], [0.11], [0.9], [1.5]], [0.0], 1.0, 3)
        assert cells.count == 2
        assert cells.touches_boundary()
        np.testing.assert_allclose(cells.centers()[:, 0], [0.0625, 0.9375])

    @pytest.mark.level2
    def test_dilate_single_cell(self):
        """LAB-CONT-003: a one-cell ball grows one cell on each side."""
        from app.services.content_service import DyadicCellSet, dilate_cells

        grown = dilate_cells(DyadicCellSet([0.0], 1.0, 3, [[4]]), 1.0 / 8)
        assert grown.cell_side == pytest.approx(1.0 / 8)
        np.testing.assert_allclose(np.sort(grown.centers()[:, 0]), [0.4375, 0.5625, 0.6875])


class TestSuperlevelSets:
    """LAB-CONT-004 & LAB-CONT-005: Superlevel sets and their diagnostics"""

    @pytest.mark.level2
    def test_point_mass_superlevel(self, unit_atom, linear_gauge):
        """LAB-CONT-004: |x|^-1 > 1 is (-1, 1), content about 1."""
        from app.services.content_service import covering_upper_bound, superlevel_cells
        from app.services.riesz_service import RieszContext

        cells = superlevel_cells(unit_atom, RieszContext(1.0, 1), 1.0, ([-2.0], 4.0), 8)
        assert covering_upper_bound(cells, linear_gauge) == pytest.approx(1.0, abs=2 * 4.0 / 256)
        assert not cells.touches_boundary()

    @pytest.mark.level2
    def test_huge_threshold_is_empty(self, unit_atom):
        """LAB-CONT-004: P -> inf marks nothing."""
        from app.services.content_service import superlevel_cells
        from app.services.riesz_service import RieszContext

        cells = superlevel_cells(unit_atom, RieszContext(1.0, 1), 1e12, ([-2.0], 4.0), 8)
        assert cells.count == 0

    @pytest.mark.level2
    def test_maximal_set_inside_absolute_set(self):
        """LAB-CONT-004: {R_* > P} is contained in {sum |w| / |y - x|^s > P}."""
        from app.models.experiment_schema import WindowSpec
        from app.services.content_service import superlevel_cells
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext

        rng = np.random.default_rng(9)
        nu = DiscreteMeasure(rng.random((8, 2)), rng.normal(size=8), d=2)
        ctx = RieszContext(1.0, 2)
        window = WindowSpec(corner=[-1.0, -1.0], side=3.0)
        maximal = superlevel_cells(nu, ctx, 4.0, window, 6, mode="maximal")
        absolute = superlevel_cells(nu, ctx, 4.0, window, 6, mode="absolute")
        fixed = superlevel_cells(nu, ctx, 4.0, window, 6, mode="fixed_eps", eps=0.05)
        marked = {tuple(i) for i in absolute.index}
        assert {tuple(i) for i in maximal.index} <= marked
        assert {tuple(i) for i in fixed.index} <= marked

    @pytest.mark.level2
    def test_superlevel_validation(self, unit_atom):
        """LAB-CONT-004: bad modes, missing eps and wrong windows are configuration errors."""
        from app.exceptions import ConfigError
        from app.services.content_service import superlevel_cells
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(1.0, 1)
        with pytest.raises(ConfigError):
            superlevel_cells(unit_atom, ctx, 1.0, ([-2.0], 4.0), 4, mode="nope")
        with pytest.raises(ConfigError):
            superlevel_cells(unit_atom, ctx, 1.0, ([-2.0], 4.0), 4, mode="fixed_eps")
        with pytest.raises(ConfigError):
            superlevel_cells(unit_atom, ctx, 1.0, ([-2.0, 0.0], 4.0), 4)
        with pytest.raises(ConfigError):
            superlevel_cells(unit_atom, ctx, 0.0, ([-2.0], 4.0), 4)

    @pytest.mark.level2
    def test_truncation_check(self, unit_atom, sqrt_gauge):
        """LAB-CONT-005: F against its dilation under the truncated gauge."""
        from app.services.content_service import superlevel_cells, truncation_check
        from app.services.riesz_service import RieszContext

        cells = superlevel_cells(unit_atom, RieszContext(0.5, 1), 1.0, ([-2.0], 4.0), 7)
        result = truncation_check(cells, sqrt_gauge, 0.1)
        assert result["content_F"] > 0
        assert result["content_G"] > 0
        assert math.isfinite(result["ratio"])

    @pytest.mark.level2
    def test_normality_exclusion(self, linear_gauge):
        """LAB-CONT-005: excluded cost is a share of the total covering cost."""
        from app.services.content_service import normality_exclusion, superlevel_cells
        from app.services.measure_service import DiscreteMeasure
        from app.services.riesz_service import RieszContext

        nu = DiscreteMeasure([[0.0], [0.3], [0.35]], [1.0, 0.5, -0.5], d=1)
        cells = superlevel_cells(nu, RieszContext(0.5, 1), 2.0, ([-1.0], 2.5), 8)
        report = normality_exclusion(nu, linear_gauge, 0.5, cells, 2.0)
        assert 0 < report.t1 <= report.t2
        assert report.rho > 0
        assert 0 <= report.excluded_cells <= cells.count
        assert 0.0 <= report.fraction <= 1.0 + 1e-12


class TestCapacityFunctionals:
    """LAB-CAP-001 to LAB-CAP-003: Capacity lower-bound functionals"""

    @pytest.mark.level2
    def test_content_form_power_gauges(self):
        """LAB-CAP-002: sqrt(2 (beta - s)) Mh^(s/beta)."""
        from app.services.capacity_service import gamma_functional_from_content
        from app.services.gauge_service import PowerGauge
        from app.services.riesz_service import RieszContext

        assert gamma_functional_from_content(PowerGauge(1.0, 1), RieszContext(0.5, 1), 1.0) == pytest.approx(1.0)
        value = gamma_functional_from_content(PowerGauge(2.0, 2), RieszContext(1.0, 2), 16.0)
        assert value == pytest.approx(4.0 * math.sqrt(2.0))
        small = gamma_functional_from_content(PowerGauge(1.0, 1), RieszContext(0.5, 1), 1e-8)
        assert small == pytest.approx(1e-4)

    @pytest.mark.level2
    def test_content_form_table_gauge(self):
        """LAB-CAP-002: a table gauge equal to t^2 matches the closed form."""
        from app.services.capacity_service import gamma_functional_from_content
        from app.services.gauge_service import TableGauge
        from app.services.riesz_service import RieszContext

        h = TableGauge([1.0, 2.0], [1.0, 4.0], d=2)
        value = gamma_functional_from_content(h, RieszContext(1.0, 2), 16.0)
        assert value == pytest.approx(4.0 * math.sqrt(2.0), rel=1e-6)

    @pytest.mark.level2
    def test_content_form_divergent(self):
        """LAB-CAP-002: beta <= s diverges, Mh must be positive."""
        from app.exceptions import ConfigError, DivergentIntegralError
        from app.services.capacity_service import gamma_functional_from_content
        from app.services.gauge_service import PowerGauge
        from app.services.riesz_service import RieszContext

        with pytest.raises(DivergentIntegralError):
            gamma_functional_from_content(PowerGauge(0.5, 1), RieszContext(0.5, 1), 1.0)
        with pytest.raises(ConfigError):
            gamma_functional_from_content(PowerGauge(1.0, 1), RieszContext(0.5, 1), 0.0)

    @pytest.mark.level2
    def test_measure_form_of_atoms(self, two_atoms):
        """LAB-CAP-001: purely atomic measures have infinite energy and functional 0."""
        from app.services.capacity_service import ATOMIC_NOTE, gamma_functional_from_measure
        from app.services.riesz_service import RieszContext

        report = gamma_functional_from_measure(two_atoms, RieszContext(0.5, 1))
        assert report.functional == 0.0
        assert math.isinf(report.energy)
        assert report.notes == ATOMIC_NOTE

    @pytest.mark.level2
    def test_measure_form_scaling(self, unit_interval):
        """LAB-CAP-001: dilation by lambda scales the functional by lambda^s, mass scaling leaves it fixed."""
        from app.services.capacity_service import gamma_functional_from_measure
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(0.5, 1)
        base = gamma_functional_from_measure(unit_interval, ctx)
        assert base.functional == pytest.approx(base.norm_mu ** 1.5 / math.sqrt(base.energy))
        dilated = gamma_functional_from_measure(unit_interval.dilated(4.0), ctx)
        assert dilated.functional == pytest.approx(2.0 * base.functional, rel=1e-9)
        heavier = gamma_functional_from_measure(unit_interval.scaled(5.0), ctx)
        assert heavier.functional == pytest.approx(base.functional, rel=1e-9)

    @pytest.mark.level2
    def test_riesz_potential_of_interval(self, unit_interval):
        """LAB-CAP-003: I_alpha * Leb[0, 1] at 1/2 is 2 * 0.5^alpha / alpha."""
        from app.services.capacity_service import riesz_potential

        alpha = 1.0 / 3.0
        value = riesz_potential(unit_interval, alpha, 0.5)[0]
        assert value == pytest.approx(2.0 * 0.5 ** alpha / alpha, rel=1e-12)

    @pytest.mark.level2
    def test_energy_comparison_zero_measure(self):
        """LAB-CAP-003: the zero measure reports zeros."""
        from app.services.capacity_service import riesz_energy_comparison
        from app.services.measure_service import CubeMeasure
        from app.services.riesz_service import RieszContext

        report = riesz_energy_comparison(CubeMeasure([[0.0]], 1.0, 0.0), RieszContext(0.5, 1))
        assert report.energy == 0.0
        assert report.riesz_energy == 0.0
        assert report.functional == 0.0

    @pytest.mark.level2
    def test_energy_comparison_rejects_atoms(self, two_atoms):
        """LAB-CAP-003: atoms need a cube-smoothed surrogate."""
        from app.exceptions import ConfigError
        from app.services.capacity_service import riesz_energy_comparison
        from app.services.riesz_service import RieszContext

        with pytest.raises(ConfigError, match="surrogate"):
            riesz_energy_comparison(two_atoms, RieszContext(0.5, 1))

    @pytest.mark.level2
    def test_energy_ratio_dilation_invariant(self, unit_interval):
        """LAB-CAP-003: both energies scale by lambda^(-2s), so the ratio is fixed."""
        from app.services.capacity_service import riesz_energy_comparison
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(0.5, 1)
        base = riesz_energy_comparison(unit_interval, ctx)
        assert 0 < base.energy_ratio < math.inf
        dilated = riesz_energy_comparison(unit_interval.dilated(3.0).scaled(2.0), ctx)
        assert dilated.energy_ratio == pytest.approx(base.energy_ratio, rel=1e-6)

    @pytest.mark.level2
    def test_energy_ratio_stable_under_refinement(self):
        """LAB-CAP-003: splitting [0, 1] into 4 or 8 cubes moves the ratio by under 1%."""
        from app.services.capacity_service import riesz_energy_comparison
        from app.services.measure_service import CubeMeasure
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(0.5, 1)
        ratios = []
        for k in (4, 8):
            mu = CubeMeasure(np.arange(k).reshape(-1, 1) / k, 1.0 / k, 1.0 / k)
            ratios.append(riesz_energy_comparison(mu, ctx).energy_ratio)
        assert ratios[1] == pytest.approx(ratios[0], rel=1e-2)

    @pytest.mark.level2
    def test_riesz_norm_is_one_dimensional(self):
        """LAB-CAP-003: the Riesz-energy side is computed for d = 1 only."""
        from app.exceptions import ConfigError
        from app.services.capacity_service import riesz_energy_comparison
        from app.services.measure_service import CubeMeasure
        from app.services.riesz_service import RieszContext

        with pytest.raises(ConfigError):
            riesz_energy_comparison(CubeMeasure.lebesgue([0.0, 0.0], 1.0), RieszContext(1.0, 2))

    @pytest.mark.level2
    def test_nonlinear_functional(self, unit_interval, two_atoms):
        """LAB-CAP-003: ||mu||^(3/2) / ||I_alpha * mu||_3^(3/2), zero for atoms."""
        from app.services.capacity_service import nonlinear_capacity_functional, riesz_energy_comparison
        from app.services.riesz_service import RieszContext

        ctx = RieszContext(0.5, 1)
        value = nonlinear_capacity_functional(unit_interval, ctx)
        report = riesz_energy_comparison(unit_interval, ctx)
        assert value == pytest.approx(report.nonlinear_functional)
        assert value == pytest.approx(1.0 / math.sqrt(report.riesz_energy))
        assert nonlinear_capacity_functional(two_atoms, ctx) == 0.0
