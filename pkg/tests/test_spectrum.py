import numpy as np
import pytest

from conftest import make_gen
from thermobeam.grid import build_grid
from thermobeam.model import ModelParams, assemble_generator, random_state
from thermobeam.resolvent import resolvent_norm
from thermobeam.spectrum import (
    axis_gap,
    conjugation_defect,
    eigenvalues,
    lambda_max_resolved,
    spectral_abscissa,
    spectrum_report,
)


@pytest.mark.parametrize("system", [1, 2])
def test_conservative_spectrum_is_imaginary(system):
    gen = assemble_generator(ModelParams(tau=0.3).undamped(system), build_grid(32, np.pi), system)
    ev = eigenvalues(gen)
    assert ev.size == gen.dim
    assert np.max(np.abs(ev.real)) <= 1e-8
    assert abs(spectral_abscissa(gen)) <= 1e-8
    assert axis_gap(gen) <= 1e-8


def test_eigenvalues_match_plain_eigensolver():
    gen = make_gen(8, 2, tau=0.4)
    direct = np.sort_complex(np.linalg.eigvals(gen.B))
    ours = np.sort_complex(np.asarray(eigenvalues(gen)))
    np.testing.assert_allclose(ours, direct, atol=1e-8)


def test_conjugate_pairs():
    gen = make_gen(16, 1, tau=0.5, sigma=0.5, xi=0.5)
    assert conjugation_defect(eigenvalues(gen)) <= 1e-8


def test_system2_regression_baseline():
    gen = make_gen(32, 2)
    # frozen from a dense eigensolve of the n=32 generator
    assert spectral_abscissa(gen) == pytest.approx(-0.000422794045, rel=1e-6)


@pytest.mark.parametrize("system", [1, 2])
@pytest.mark.parametrize("ex", [(0.0, 0.0, 0.0), (0.5, 0.5, 0.5), (1.0, 1.0, 1.0), (0.0, 1.0, 0.5)])
def test_damped_abscissa_negative(system, ex):
    gen = make_gen(32, system, tau=ex[0], sigma=ex[1], xi=ex[2])
    assert spectral_abscissa(gen) < -1e-6
    assert axis_gap(gen) > 0


def test_axis_gap_relation():
    gen = make_gen(32, 1, tau=0.5, sigma=0.5, xi=0.5)
    rep = spectrum_report(gen)
    assert rep.axis_gap > 0
    assert rep.axis_gap <= abs(rep.abscissa) + 1e-15
    # rightmost eigenvalue is also the closest to iR for a stable spectrum
    assert rep.axis_gap == pytest.approx(abs(rep.abscissa), rel=1e-12)


@pytest.mark.parametrize("system", [1, 2])
def test_numerical_range_consistency(system):
    gen = make_gen(16, system, tau=0.6, sigma=0.2, xi=0.9)
    # sup of Re<BU,U>_G over unit states is the top eigenvalue of the hermitian part of C B C^-1
    S = gen.similar
    top = np.linalg.eigvalsh(0.5 * (S + S.T)).max()
    assert top <= 1e-10
    assert spectral_abscissa(gen) <= top + 1e-8
    for s in range(20):
        U = random_state(gen, s)
        assert gen.inner(gen.B @ U, U).real <= top + 1e-10


def test_resolvent_dominates_inverse_distance():
    gen = make_gen(16, 1, tau=0.5, sigma=0.7, xi=0.6)
    ev = eigenvalues(gen)
    rng = np.random.default_rng(0)
    for lam in rng.uniform(-2 * lambda_max_resolved(gen), 2 * lambda_max_resolved(gen), 10):
        dist = np.min(np.abs(1j * lam - ev))
        assert resolvent_norm(gen, lam) >= (1.0 / dist) * (1 - 1e-6)
