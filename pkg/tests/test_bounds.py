import math

import numpy as np
import pytest
from scipy import integrate, stats

from bpsk_receivers import (
    NoiseModel,
    PnrResolution,
    dephased_rho,
    dpnr_error,
    helstrom_bound,
    helstrom_noiseless,
    homodyne_pdf,
    hynore_optimize,
    make_grid,
    sql_error,
    sql_noiseless,
)
from bpsk_receivers.bounds import (
    FockTruncationError,
    coherent_coefficients,
    default_fock_dim,
    required_fock_dim,
)


def sql_oracle(energy, sigma):
    """Pr[x >= 0 | symbol 0] integrated over phase and quadrature by adaptive quadrature."""
    a = math.sqrt(energy)

    def f(x, phi):
        g_phi = math.exp(-0.5 * (phi / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
        g_x = math.exp(-0.5 * (x + 2 * a * math.cos(phi)) ** 2) / math.sqrt(2 * math.pi)
        return g_phi * g_x

    lim = 12 * sigma
    val, _ = integrate.dblquad(f, -lim, lim, 0.0, 40.0, epsabs=1e-13, epsrel=1e-11)
    return val


class TestCoherentCoefficients:
    def test_normalized(self):
        for beta in (0.0, 1.0 + 0.5j, -3.0):
            v = coherent_coefficients(beta, 80)[:, 0]
            assert np.vdot(v, v).real == pytest.approx(1.0, abs=1e-13)

    def test_overlap(self):
        """<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)."""
        a, b = 1.2 - 0.3j, -0.7 + 0.9j
        va, vb = coherent_coefficients([a, b], 80).T
        expected = np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(a) * b)
        assert np.vdot(va, vb) == pytest.approx(expected, abs=1e-13)


class TestDephasedState:
    def test_pure_without_noise(self):
        rho = dephased_rho(1, 2.0, NoiseModel(0.0))
        ev = rho.eigenvalues()
        assert ev[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.abs(ev[:-1]) < 1e-12)

    def test_vacuum(self):
        rho = dephased_rho(0, 0.0, NoiseModel(0.5))
        expected = np.zeros((rho.dim, rho.dim))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(rho.entries, expected, atol=1e-15)

    @pytest.mark.parametrize("sigma", [0.1, 0.5, 1.5])
    def test_valid_density_matrix(self, sigma):
        rho = dephased_rho(0, 4.0, NoiseModel(sigma))
        assert rho.hermiticity_error() == 0.0
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        assert rho.eigenvalues().min() > -1e-12

    def test_purity_decreases_with_noise(self):
        pur = [dephased_rho(1, 2.0, NoiseModel(s)).purity() for s in (0.0, 0.1, 0.3, 0.6, 1.0)]
        assert pur[0] == pytest.approx(1.0, abs=1e-12)
        assert all(b < a for a, b in zip(pur, pur[1:]))

    def test_difference_traceless(self):
        n = NoiseModel(0.3)
        lam = dephased_rho(0, 3.0, n) - dephased_rho(1, 3.0, n)
        assert abs(lam.trace()) < 1e-12

    def test_photon_statistics_survive_dephasing(self):
        n = NoiseModel(0.7)
        rho = dephased_rho(1, 3.0, n)
        diag = np.real(np.diag(rho.entries))
        poisson = stats.poisson.pmf(np.arange(rho.dim), 3.0)
        np.testing.assert_allclose(diag, poisson, atol=1e-14)

    def test_truncation_error_names_required_dim(self):
        with pytest.raises(FockTruncationError) as info:
            dephased_rho(0, 9.0, NoiseModel(0.1), dim=10)
        assert info.value.required == required_fock_dim(9.0)
        assert info.value.required > 10
        dephased_rho(0, 9.0, NoiseModel(0.1), dim=info.value.required)

    def test_default_dim_has_headroom(self):
        for e in (0.0, 1.0, 25.0):
            assert default_fock_dim(e) >= required_fock_dim(e)


class TestHelstrom:
    def test_zero_energy(self):
        assert helstrom_bound(0.0, NoiseModel(0.3)) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("e", [0.1, 0.5, 1.0, 4.0])
    def test_noiseless_limit(self, e):
        assert helstrom_bound(e, NoiseModel(0.0)) == pytest.approx(helstrom_noiseless(e), abs=1e-12)
        assert helstrom_bound(e, NoiseModel(1e-6)) == pytest.approx(helstrom_noiseless(e), abs=1e-6)

    @pytest.mark.parametrize("e,sigma", [(1.0, 0.1), (9.0, 0.5), (25.0, 0.5)])
    def test_converged(self, e, sigma):
        noise = NoiseModel(sigma)
        a = helstrom_bound(e, noise)
        b = helstrom_bound(e, noise, make_grid(noise, 128), default_fock_dim(e) + 20)
        assert abs(a - b) < 1e-9

    def test_non_decreasing_in_noise(self):
        vals = [helstrom_bound(2.0, NoiseModel(s)) for s in np.linspace(0, 1.5, 16)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("e,sigma", [(0.3, 0.0), (1.0, 0.1), (4.0, 0.3), (9.0, 0.5), (2.0, 1.2)])
    def test_below_every_receiver(self, e, sigma):
        noise = NoiseModel(sigma)
        h = helstrom_bound(e, noise)
        assert h <= sql_error(e, noise) + 1e-12
        for m in (1, 3):
            assert h <= dpnr_error(e, noise, PnrResolution(m)).p_err + 1e-12
        assert h <= hynore_optimize(e, noise, PnrResolution(1)).p_err + 1e-12


class TestHomodyne:
    @pytest.mark.parametrize("e", [0.1, 1.0, 4.0])
    def test_noiseless(self, e):
        assert sql_error(e, NoiseModel(0.0)) == pytest.approx(sql_noiseless(e), rel=1e-14)

    def test_zero_energy(self):
        assert sql_error(0.0, NoiseModel(0.7)) == 0.5

    @pytest.mark.parametrize("e,sigma", [(4.0, 0.1), (1.0, 0.5), (2.0, 1.0)])
    def test_against_double_integral(self, e, sigma):
        assert sql_error(e, NoiseModel(sigma)) == pytest.approx(sql_oracle(e, sigma), abs=1e-8)

    def test_pdf_normalized(self):
        noise = NoiseModel(0.4)
        for k in (0, 1):
            total, _ = integrate.quad(lambda x: float(homodyne_pdf(x, k, 3.0, noise)), -30, 30, limit=200)
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_pdf_gives_error(self):
        noise = NoiseModel(0.4)
        tail, _ = integrate.quad(lambda x: float(homodyne_pdf(x, 0, 1.5, noise)), 0, 30, limit=200)
        assert tail == pytest.approx(sql_error(1.5, noise), abs=1e-10)

    def test_close_to_helstrom_under_strong_noise(self):
        noise = NoiseModel(1.0)
        s, h = sql_error(1.0, noise), helstrom_bound(1.0, noise)
        assert (s - h) / h < 0.1
