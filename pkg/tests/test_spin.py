import cmath

import numpy as np
import pytest

from dualaction import (
    PreconditionError,
    SpinPathEnsemble,
    composite_spin_propagator,
    spin_half_propagator,
)
from dualaction.spin import (
    COMPOSITE_ENUM_CAP,
    SPIN_HALF_ENUM_CAP,
    composite_closed_form,
    composite_values,
    spin_half_closed_form,
)


class TestEnsemble:
    def test_spin_half_path_count(self):
        assert SpinPathEnsemble(5, ((1.0, 1), (-1.0, 1))).path_count == 32

    def test_composite_path_count(self):
        assert SpinPathEnsemble(3, composite_values(0.5)).path_count == 64

    def test_multiplicity_audit(self):
        values = dict(composite_values(0.5))
        assert values[1.0] == 1 and values[0.0] == 2 and values[-1.0] == 1
        assert SpinPathEnsemble(1, composite_values(0.5)).path_count == 4

    def test_validation(self):
        with pytest.raises(PreconditionError):
            SpinPathEnsemble(0, ((1.0, 1),))
        with pytest.raises(PreconditionError):
            SpinPathEnsemble(2, ((1.0, 1),), policy="sideways")


class TestSpinHalf:
    def test_unconstrained_pure_phase(self):
        g = spin_half_propagator(1.0, 1.0, "+", "+", 1.0, 4)
        assert abs(g - cmath.exp(-0.5j)) <= 1e-12
        assert abs(abs(g) - 1.0) <= 1e-12

    @pytest.mark.parametrize("n", [1, 3, 6, 10])
    @pytest.mark.parametrize("t", [0.3, 2.7])
    def test_unit_magnitude_all_n_t(self, n, t):
        g = spin_half_propagator(2.0, 1.5, "+", "-", t, n)
        assert abs(abs(g) - 1.0) <= 1e-12

    def test_endpoint_filtered_quarter_weight(self):
        g = spin_half_propagator(1.0, 1.0, "+", "+", 1.0, 4, policy="endpoint-filtered")
        assert abs(g - 0.25 * cmath.exp(-0.5j)) <= 1e-12

    def test_endpoint_filtered_counts(self):
        # 2^(N-2) admitted paths for N >= 2 with both endpoints fixed
        for n in range(2, 9):
            g = spin_half_propagator(1.0, 1.0, "+", "-", 0.0, n, policy="endpoint-filtered")
            assert abs(g - 2.0 ** (n - 2) / 2.0**n) <= 1e-12

    def test_single_interval_filtered(self):
        match = spin_half_propagator(1.0, 1.0, "+", "+", 0.7, 1, policy="endpoint-filtered")
        clash = spin_half_propagator(1.0, 1.0, "+", "-", 0.7, 1, policy="endpoint-filtered")
        assert abs(match - 0.5 * cmath.exp(-0.35j)) <= 1e-12
        assert clash == 0.0

    def test_zero_time(self):
        assert spin_half_propagator(1.0, 1.0, "+", "-", 0.0, 6) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
    @pytest.mark.parametrize("policy", ["paper-unconstrained", "endpoint-filtered"])
    def test_enumeration_matches_closed_form(self, n, policy):
        args = (1.3, 0.7, "+", "-", 0.9, n)
        a = spin_half_propagator(*args, policy=policy)
        b = spin_half_closed_form(*args, policy=policy)
        assert abs(a - b) <= 1e-12

    def test_cap_error_and_closed_form_escape(self):
        with pytest.raises(PreconditionError):
            spin_half_propagator(1.0, 1.0, "+", "+", 1.0, SPIN_HALF_ENUM_CAP + 1)
        g = spin_half_propagator(1.0, 1.0, "+", "+", 1.0, SPIN_HALF_ENUM_CAP + 1,
                                 use_closed_form=True)
        assert abs(abs(g) - 1.0) <= 1e-12

    def test_sign_parsing(self):
        with pytest.raises(PreconditionError):
            spin_half_propagator(1.0, 1.0, "up", "+", 1.0, 2)
        with pytest.raises(PreconditionError):
            spin_half_propagator(-1.0, 1.0, "+", "+", 1.0, 2)


class TestComposite:
    def test_single_interval_hand_sum(self):
        # l0 = 1/2: values {+1: 1, 0: 2, -1: 1}; phases exp(-i/2), 1, 1, exp(-i/2)
        g = composite_spin_propagator(1.0, 0.5, 1.0, 1.0, 1.0, 1)
        expected = 0.5 * (1.0 + cmath.exp(-0.5j))
        assert abs(g - expected) <= 1e-12

    def test_two_intervals_product_structure(self):
        g2 = composite_spin_propagator(1.0, 0.5, 1.0, 1.0, 1.0, 2)
        g1_half = composite_spin_propagator(1.0, 0.5, 1.0, 1.0, 0.5, 1)
        assert abs(g2 - g1_half**2) <= 1e-12

    @pytest.mark.parametrize("n", [1, 2, 4, 7])
    @pytest.mark.parametrize("policy", ["paper-unconstrained", "endpoint-filtered"])
    def test_enumeration_matches_closed_form(self, n, policy):
        args = (0.8, 0.5, 1.0, 0.0, 1.1, n)
        a = composite_spin_propagator(*args, policy=policy)
        b = composite_closed_form(*args, policy=policy)
        assert abs(a - b) <= 1e-12

    def test_endpoint_filtered_multiplicity_weighting(self):
        # N=1, l_i = l_f = 0 admits the two zero-sum sign pairs
        g = composite_spin_propagator(1.0, 0.5, 0.0, 0.0, 1.0, 1, policy="endpoint-filtered")
        assert abs(g - 0.5) <= 1e-12

    def test_cap_error_and_closed_form_escape(self):
        with pytest.raises(PreconditionError):
            composite_spin_propagator(1.0, 0.5, 1.0, 1.0, 1.0, COMPOSITE_ENUM_CAP + 1)
        g = composite_spin_propagator(1.0, 0.5, 1.0, 1.0, 1.0, COMPOSITE_ENUM_CAP + 1,
                                      use_closed_form=True)
        assert np.isfinite(g.real) and np.isfinite(g.imag)
