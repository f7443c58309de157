import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fatrack.errors import ConfigurationError
from fatrack.feature_signal import (ObservationPattern, SpectralLine, atom, atoms, restrict,
                                    scatter, synthesize)


def test_atom_examples():
    np.testing.assert_allclose(atom(0.0, 0.0, 4), np.ones(4))
    np.testing.assert_allclose(atom(0.25, 0.0, 4), [1, 1j, -1, -1j], atol=1e-15)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 2 * np.pi), st.integers(1, 64))
def test_atoms_have_unit_modulus(f, phi, N):
    np.testing.assert_allclose(np.abs(atom(f, phi, N)), 1.0)


def test_atoms_matrix_columns():
    A = atoms([0.1, 0.3], 5)
    np.testing.assert_allclose(A[:, 1], atom(0.3, 0.0, 5))


def test_synthesize_dc_and_empty():
    np.testing.assert_allclose(synthesize([SpectralLine(1.0, 0.0, 0.0)], 5), np.ones(5))
    np.testing.assert_array_equal(synthesize([], 3), np.zeros(3))


def test_synthesize_is_linear_in_line_sets():
    a = [SpectralLine(0.7, 0.1, 1.0)]
    b = [SpectralLine(1.3, 0.62, 4.0), SpectralLine(0.2, 0.9, 0.5)]
    np.testing.assert_allclose(synthesize(a, 16) + synthesize(b, 16), synthesize(a + b, 16))


def test_synthesize_matches_inverse_dft():
    N = 8
    spectrum = np.zeros(N)
    spectrum[[1, 3]] = N  # numpy's ifft carries a 1/N factor
    x = synthesize([SpectralLine(1.0, 1 / 8, 0.0), SpectralLine(1.0, 3 / 8, 0.0)], N)
    np.testing.assert_allclose(x, np.fft.ifft(spectrum), atol=1e-12)


def test_spectral_line_normalisation_and_validation():
    line = SpectralLine(2.0, 1.25, -np.pi / 2)
    assert line.f == pytest.approx(0.25)
    assert line.phi == pytest.approx(1.5 * np.pi)
    with pytest.raises(ConfigurationError):
        SpectralLine(0.0, 0.1, 0.0)


def test_restrict_examples():
    x = np.array([1 + 1j, 2.0, 3j])
    np.testing.assert_array_equal(restrict(x, ObservationPattern.full(3)), x)
    np.testing.assert_array_equal(restrict(x, ObservationPattern([0], 3)), [1 + 1j])


@settings(max_examples=50)
@given(st.integers(2, 40).flatmap(lambda N: st.tuples(st.just(N), st.sets(st.integers(0, N - 1), min_size=1))))
def test_scatter_then_restrict_is_identity_on_omega(case):
    N, idx = case
    p = ObservationPattern(sorted(idx), N)
    x = np.arange(N) + 1j * np.arange(N)[::-1]
    y = scatter(restrict(x, p), p)
    np.testing.assert_array_equal(y[p.omega], x[p.omega])
    np.testing.assert_array_equal(y[p.complement], 0)


def test_pattern_validation_and_views():
    p = ObservationPattern.from_mask([True, False, True, True])
    assert p.alpha == 3 and p.N == 4
    np.testing.assert_array_equal(p.complement, [1])
    with pytest.raises(ConfigurationError):
        ObservationPattern([0, 4], 4)
    with pytest.raises(ConfigurationError):
        ObservationPattern([2, 1], 4)
    with pytest.raises(ConfigurationError):
        restrict(np.zeros(5), p)
