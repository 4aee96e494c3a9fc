import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from bsnlab.harmonic import harmonic_basis
from bsnlab.oracles import (OracleError, Sandwich, bessel_series, bessel_zeros,
                            bruteforce_quotient_min, determinant_polynomial, disk_scalar_eigs,
                            disk_spectrum, fraction_det, interval_closed_form, oracle_table_csv)
from bsnlab.pencils import assemble_pencil, solve_problem

from conftest import make_ops


class TestIntervalExact:
    def test_bsn_unit(self):
        cf = interval_closed_form("BSN", 0, 1)
        assert cf.exact == (Fraction(0), Fraction(24))
        assert cf.values == (0.0, 24.0)

    def test_bsd_symmetric(self):
        assert interval_closed_form("BSD", -1, 1).exact == (Fraction(1), Fraction(3))

    def test_bsd_unit(self):
        assert interval_closed_form("BSD", 0, 1).exact == (Fraction(2), Fraction(6))

    def test_steklov(self):
        assert interval_closed_form("Steklov", 0, 1).exact == (Fraction(0), Fraction(2))

    def test_bsn_aliases(self):
        for kind in ("BSN1", "bsn2", "BSN3"):
            assert interval_closed_form(kind).values == (0.0, 24.0)

    def test_dirichlet_neumann(self):
        d = interval_closed_form("Dirichlet", 0, 2, 3).values
        np.testing.assert_allclose(d, [(j * math.pi / 2) ** 2 for j in (1, 2, 3)])
        assert interval_closed_form("Neumann", 0, 1, 3).values[0] == 0.0

    def test_errors(self):
        with pytest.raises(OracleError):
            interval_closed_form("BSD", 1, 0)
        with pytest.raises(OracleError):
            interval_closed_form("Maxwell")

    def test_fraction_det(self):
        rows = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
        assert fraction_det(rows) == 5

    @settings(max_examples=25, deadline=None)
    @given(a=st.integers(-20, 20), length=st.sampled_from([1, 2, 4, 8]))
    def test_translation_and_scaling(self, a, length):
        """Translation invariance; BSN scales as L⁻³, Steklov and BSD as L⁻¹."""
        b = a + length
        bsn = interval_closed_form("BSN", a, b).exact
        assert bsn == (0, Fraction(24, length ** 3))
        assert interval_closed_form("Steklov", a, b).exact == (0, Fraction(2, length))
        assert interval_closed_form("BSD", a, b).exact == (Fraction(2, length), Fraction(6, length))

    def test_polynomial_degree(self):
        from bsnlab.oracles import _boundary_rows
        R0, R1 = _boundary_rows("BSN", Fraction(0), Fraction(1))
        poly = determinant_polynomial(R0, R1)
        # det is c·θ(θ - 24) up to trailing zeros
        nz = [c for c in poly if c != 0]
        assert poly[0] == 0 and len(nz) == 2 and -nz[0] / nz[1] == 24


class TestBessel:
    @pytest.mark.parametrize("m", [0, 1, 2, 5])
    def test_zeros_against_scipy(self, m):
        np.testing.assert_allclose(bessel_zeros(m, 4), ss.jn_zeros(m, 4), rtol=1e-12)
        np.testing.assert_allclose(bessel_zeros(m, 4, derivative=True), ss.jnp_zeros(m, 4), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(m=st.integers(0, 6), x=st.floats(0.0, 30.0))
    def test_series_against_scipy(self, m, x):
        assert bessel_series(m, x) == pytest.approx(ss.jv(m, x), abs=1e-12)
        assert bessel_series(m, x, derivative=True) == pytest.approx(ss.jvp(m, x), abs=1e-12)

    def test_first_dirichlet_eigenvalue(self):
        assert disk_spectrum("Dirichlet", 1)[0] == pytest.approx(5.783185962946784, rel=1e-13)


class TestDisk:
    def test_steklov_modes(self):
        assert disk_spectrum("Steklov", 4) == [0.0, 1.0, 1.0, 2.0]
        assert disk_scalar_eigs("Steklov", 3, radius=2.0).eigenvalues == (1.5,)

    def test_bsd(self):
        assert disk_spectrum("BSD", 3) == [2.0, 4.0, 4.0]
        for m in range(4):
            assert disk_scalar_eigs("BSD", m, radius=2.0).eigenvalues[0] == pytest.approx((m + 1) / 1.0)

    def test_bsn(self):
        assert disk_spectrum("BSN", 4) == [0.0, 4.0, 4.0, 24.0]
        for m in range(1, 4):
            assert disk_scalar_eigs("BSN", m).eigenvalues[0] == pytest.approx(2 * m * m * (m + 1))

    @pytest.mark.parametrize("kind,power", [("Dirichlet", 2), ("Neumann", 2), ("Steklov", 1),
                                            ("BSD", 1), ("BSN", 3)])
    def test_radius_scaling(self, kind, power):
        a = np.array(disk_spectrum(kind, 5, 1.0))
        b = np.array(disk_spectrum(kind, 5, 2.0))
        np.testing.assert_allclose(b, a / 2 ** power, rtol=1e-12, atol=1e-14)

    def test_neumann_zero_mode(self):
        assert disk_scalar_eigs("Neumann", 0, 3).eigenvalues[0] == 0.0

    def test_values_are_python_floats(self):
        assert all(type(v) is float for v in disk_spectrum("Dirichlet", 3))


def test_csv_columns():
    rows = interval_closed_form("BSN").as_rows() + disk_scalar_eigs("BSD", 1).as_rows()
    text = oracle_table_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "kind,domain,mode,index,eigenvalue"
    assert lines[2] == "BSN,interval:0,1,0,1,24.0".replace("interval:0,1", '"interval:0,1"')
    assert len(lines) == 1 + len(rows)


class TestSandwich:
    def test_contains(self):
        s = Sandwich(1.0, 2.0, 10)
        assert s.contains(1.5) and s.contains(1.0 - 1e-9) and not s.contains(2.1)

    @pytest.mark.parametrize("domain,p,kind", [("square", 0, "BSD"), ("square", 0, "BSN3"),
                                               ("square", 1, "Steklov"), ("interval:0,1", 0, "BSN1")])
    def test_pencil_value_in_sandwich(self, domain, p, kind):
        ops = make_ops(domain, p, 2)
        harm = harmonic_basis(ops)
        spec = assemble_pencil(ops.space, ops, kind, harm)
        s = solve_problem(spec)
        sw = bruteforce_quotient_min(spec, trials=300)
        first = s.positive()[0]
        assert sw.contains(first)
        assert sw.lower == pytest.approx(first, rel=1e-6)
        assert sw.upper >= first * (1 - 1e-10)

    def test_seeded(self):
        ops = make_ops("square", 0, 2)
        spec = assemble_pencil(ops.space, ops, "BSD")
        assert bruteforce_quotient_min(spec, 50, seed=1) == bruteforce_quotient_min(spec, 50, seed=1)
