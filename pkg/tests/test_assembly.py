"""Interface system assembly, normalisation, and the banded solve."""

import numpy as np
import pytest

from helmrad.assembly import (R_HAT, T_HAT, CoefficientVector,
                              assemble_raw, dense_solve,
                              determinant_recursion, normalize,
                              normalizer_blocks, rhs_scale, solve_spec,
                              w_sequence)
from helmrad.problem import ProblemSpec, WaveSpeedProfile


def _spec(speeds, cuts, omega, d=3, m=0, g=1.0 + 0.0j):
    return ProblemSpec(WaveSpeedProfile((0.0, *cuts, 1.0), tuple(speeds)),
                       dimension=d, mode=m, omega=omega,
                       boundary_coefficient=g)


SPECS = [
    _spec((1.0, 2.0), (0.4,), 3.0),
    _spec((2.0, 0.7, 1.3), (0.3, 0.8), 11.0, m=2),
    _spec((1.0, 3.0, 1.0, 3.0), (0.2, 0.5, 0.7), 7.5, m=4),
    _spec((0.6, 1.9), (0.55,), 20.0, d=1),
    _spec((1.1, 0.9, 2.2, 0.5, 1.7), (0.1, 0.3, 0.6, 0.85), 5.0,
          g=2.0 - 1.0j),
]


class TestNormalisation:
    @pytest.mark.parametrize("spec", SPECS)
    def test_normaliser_turns_blocks_into_constants(self, spec):
        """D S = S_hat, D R = R_HAT, D T = T_HAT, D rhs = rhs_hat."""
        raw = assemble_raw(spec)
        D = normalizer_blocks(spec)
        system = normalize(spec)
        for ell in range(spec.n):
            assert np.allclose(D[ell] @ raw.S[ell],
                               system.S_hat[ell].astype(complex),
                               rtol=1e-10, atol=1e-12)
        for ell in range(spec.n - 1):
            assert np.allclose(D[ell + 1] @ raw.R[ell], R_HAT, atol=1e-10)
            assert np.allclose(D[ell] @ raw.T[ell], T_HAT, atol=1e-10)
        rhs_hat = D[spec.n - 1] @ raw.rhs[-2:]
        assert abs(rhs_hat[0]) <= 1e-10 * abs(rhs_hat[1])
        assert rhs_hat[1] == pytest.approx(system.rhs_scale, rel=1e-10)

    @pytest.mark.parametrize("spec", SPECS)
    def test_dense_form_matches_matvec(self, spec):
        system = normalize(spec)
        rng = np.random.default_rng(7)
        x = rng.normal(size=2 * spec.n) + 1j * rng.normal(size=2 * spec.n)
        assert np.allclose(system.to_dense() @ x,
                           system.matvec(x).astype(complex), rtol=1e-12)


class TestSolve:
    @pytest.mark.parametrize("spec", SPECS)
    def test_residual_is_tiny(self, spec):
        coeffs, resid = solve_spec(spec)
        assert resid < 1e-12
        system = normalize(spec)
        r = system.to_dense() @ coeffs.entries - system.rhs
        assert np.max(np.abs(r)) < 1e-12 * np.max(np.abs(system.rhs))

    @pytest.mark.parametrize("spec", SPECS)
    def test_solution_matches_plain_dense_solve(self, spec):
        coeffs, _ = solve_spec(spec)
        system = normalize(spec)
        ref = np.linalg.solve(system.to_dense(), system.rhs)
        scale = max(np.max(np.abs(ref)), np.max(np.abs(coeffs.entries)))
        assert np.max(np.abs(coeffs.entries - ref)) < 1e-9 * scale

    def test_rhs_scale_matches_boundary_coefficient_magnitude(self):
        # d=3, m=0: the outgoing boundary value has unit scaled modulus
        spec = SPECS[0]
        assert abs(rhs_scale(spec)) == pytest.approx(
            abs(complex(spec.boundary_coefficient)), rel=1e-12)

    def test_boundary_coefficient_scales_solution_linearly(self):
        base, _ = solve_spec(SPECS[0])
        doubled, _ = solve_spec(_spec((1.0, 2.0), (0.4,), 3.0,
                                      g=2.0 + 0.0j))
        assert np.allclose(doubled.entries, 2.0 * base.entries, rtol=1e-12)


class TestDeterminant:
    @pytest.mark.parametrize("spec", SPECS)
    def test_recursion_matches_elimination(self, spec):
        det_rec = determinant_recursion(spec)
        det_dense = np.linalg.det(normalize(spec).to_dense())
        assert det_rec == pytest.approx(det_dense, rel=1e-9)

    def test_w_sequence_base_case(self):
        W = w_sequence(SPECS[0])
        assert W[0, 0] == 1.0 and W[0, 1] == 0.0


class TestCoefficientVector:
    def test_accessors_follow_the_interleaved_ordering(self):
        entries = np.arange(1, 7, dtype=complex)  # B1 A2 B2 A3 B3 A4
        cv = CoefficientVector(entries=entries, b_last=9.0 + 0.0j)
        assert cv.num_layers == 4
        assert cv.a(1) == 0.0
        assert cv.b(1) == 1.0
        assert cv.a(2) == 2.0 and cv.b(2) == 3.0
        assert cv.a(3) == 4.0 and cv.b(3) == 5.0
        assert cv.a(4) == 6.0 and cv.b(4) == 9.0
        assert np.allclose(cv.a_coeffs(), [0, 2, 4, 6])
        assert np.allclose(cv.b_coeffs(), [1, 3, 5, 9])
