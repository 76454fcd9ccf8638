import numpy as np
import pytest

from qce.algebra import Monomial, OperatorPoly
from qce.model import ModelSpec, opo_model, shg_model


class TestPresets:
    def test_shg_anchor_parameters(self):
        m = shg_model(0.4, 6.0, 1.0, 1.0)
        expected = {
            Monomial(((2, 0), (0, 1))): 0.4,
            Monomial(((0, 2), (1, 0))): 0.4,
            Monomial(((1, 0), (0, 0))): 6.0,
            Monomial(((0, 1), (0, 0))): 6.0,
        }
        assert m.hamiltonian == OperatorPoly(expected)
        assert [(k, j.label()) for k, j in m.dissipators] == [(1.0, "a"), (1.0, "b")]

    def test_opo_drive_on_harmonic_mode(self):
        m = opo_model(0.24, 1.0, 1.0, 2.0)
        expected = {
            Monomial(((2, 0), (0, 1))): 0.24,
            Monomial(((0, 2), (1, 0))): 0.24,
            Monomial(((0, 0), (1, 0))): 1.0,
            Monomial(((0, 0), (0, 1))): 1.0,
        }
        assert m.hamiltonian == OperatorPoly(expected)
        assert [k for k, _ in m.dissipators] == [1.0, 2.0]

    def test_uncoupled_undriven(self):
        m = shg_model(0.0, 0.0)
        assert m.hamiltonian == OperatorPoly.zero()

    def test_detunings_enter_as_number_operators(self):
        m = shg_model(0.1, 1.0, delta_a=0.5, delta_b=-0.25)
        assert abs(m.hamiltonian.terms[Monomial(((1, 1), (0, 0)))] - 0.5) < 1e-15
        assert abs(m.hamiltonian.terms[Monomial(((0, 0), (1, 1)))] + 0.25) < 1e-15

    def test_hermiticity_random_parameters(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g, E = rng.uniform(0, 2, size=2)
            ka, kb = rng.uniform(0.1, 3, size=2)
            da, db = rng.normal(size=2)
            for maker in (shg_model, opo_model):
                m = maker(g, E, ka, kb, da, db)
                assert m.hamiltonian.adjoint() == m.hamiltonian


class TestValidation:
    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            shg_model(0.4, 6.0, kappa_a=0.0)
        with pytest.raises(ValueError):
            opo_model(0.4, 6.0, kappa_b=-1.0)

    def test_rejects_negative_g_or_E(self):
        with pytest.raises(ValueError):
            shg_model(-0.1, 1.0)
        with pytest.raises(ValueError):
            shg_model(0.1, -1.0)

    def test_rejects_non_hermitian_hamiltonian(self):
        h = OperatorPoly({Monomial(((1, 0), (0, 0))): 1.0})  # a† alone
        with pytest.raises(ValueError, match="Hermitian"):
            ModelSpec(2, h, ((1.0, Monomial.elementary(2, 0, False)),))

    def test_rejects_jump_mode_mismatch(self):
        with pytest.raises(ValueError):
            ModelSpec(
                1,
                OperatorPoly.zero(),
                ((1.0, Monomial.elementary(2, 0, False)),),
            )
