import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import eigh

from warpspec.sphere_modes import (
    SphereMode, closed_eigenvalues, coclosed_eigenvalues, lambda_bar, lowest_hodge_eigenvalue,
)


def s2_laplacian_eigenvalues(n_theta=36, n_phi=72, count=10):
    """Finite-volume Laplace-Beltrami on a lat-long grid of S^2 (cell
    centres, poles as degenerate faces), solved densely."""
    dth, dph = np.pi / n_theta, 2 * np.pi / n_phi
    th = (np.arange(n_theta) + 0.5) * dth
    faces = np.arange(n_theta + 1) * dth
    area = (np.cos(faces[:-1]) - np.cos(faces[1:])) * dph
    n = n_theta * n_phi
    K = np.zeros((n, n))
    idx = lambda i, j: i * n_phi + (j % n_phi)
    for i in range(n_theta):
        for j in range(n_phi):
            a = idx(i, j)
            # east/west neighbours
            w = dth / (np.sin(th[i]) * dph)
            for jj in (j - 1, j + 1):
                b = idx(i, jj)
                K[a, a] += w
                K[a, b] -= w
            # north/south neighbours through faces of length sin(face) dphi
            for ii, face in ((i - 1, faces[i]), (i + 1, faces[i + 1])):
                if 0 <= ii < n_theta:
                    w = np.sin(face) * dph / dth
                    K[a, a] += w
                    K[a, idx(ii, j)] -= w
    M = np.repeat(area, n_phi)
    return eigh(K, np.diag(M), eigvals_only=True, subset_by_index=[0, count - 1])


@pytest.fixture(scope="module")
def s2_spectrum():
    return s2_laplacian_eigenvalues()


def test_oracle_grid_size():
    assert abs(36 * 72 - 2562) / 2562 < 0.02


def test_scalar_tower_against_s2_oracle(s2_spectrum):
    assert abs(s2_spectrum[0]) < 1e-9
    closed = [m.lam for m in coclosed_eigenvalues(3, 0, 2)]
    assert closed == [0.0, 2.0, 6.0]
    # lowest nonzero eigenvalue has multiplicity 3 and value k(k+1) = 2
    np.testing.assert_allclose(s2_spectrum[1:4], 2.0, rtol=0.02)
    np.testing.assert_allclose(s2_spectrum[4:9], 6.0, rtol=0.02)


def test_examples():
    assert coclosed_eigenvalues(3, 0, 0) == [SphereMode(0.0, 0, 0)]
    assert coclosed_eigenvalues(3, 0, 1)[1].lam == 2.0
    assert coclosed_eigenvalues(5, 2, 1)[0].lam == 6.0


@pytest.mark.parametrize("N", range(2, 9))
def test_scalar_tower_is_spherical_harmonics(N):
    modes = coclosed_eigenvalues(N, 0, 6)
    assert [m.lam for m in modes] == [float(k * (k + N - 2)) for k in range(7)]


@pytest.mark.parametrize("N", range(2, 9))
def test_zero_only_in_degrees_0_and_top(N):
    for p in range(N):
        zeros = [m for m in coclosed_eigenvalues(N, p, 4) if m.lam == 0]
        assert bool(zeros) == (p in (0, N - 1))


@given(N=st.integers(2, 10), data=st.data())
def test_sorted_and_strictly_increasing(N, data):
    p = data.draw(st.integers(0, N - 1))
    lams = [m.lam for m in coclosed_eigenvalues(N, p, 8)]
    assert all(x < y for x, y in zip(lams, lams[1:]))


@given(N=st.integers(3, 10), data=st.data())
def test_coexact_duality_through_d_and_star(N, data):
    # d maps coexact p-forms onto exact (p+1)-forms and * turns those into
    # coexact (N-2-p)-forms: the nonzero towers of p and N-2-p coincide
    p = data.draw(st.integers(0, N - 2))
    nz = lambda q: [m.lam for m in coclosed_eigenvalues(N, q, 7) if m.lam > 0]
    assert nz(p) == nz(N - 2 - p)


@given(N=st.integers(2, 9), data=st.data())
def test_closed_tower_is_starred_coclosed(N, data):
    q = data.draw(st.integers(0, N - 1))
    assert [m.lam for m in closed_eigenvalues(N, q, 5)] == [m.lam for m in coclosed_eigenvalues(N, N - 1 - q, 5)]


@given(N=st.integers(2, 10), data=st.data())
def test_full_hodge_spectrum_star_symmetric(N, data):
    q = data.draw(st.integers(0, N - 1))
    assert lowest_hodge_eigenvalue(N, q) == lowest_hodge_eigenvalue(N, N - 1 - q)


def test_lambda_bar_table():
    assert [lambda_bar(5, p) for p in range(6)] == [0.0, 0.0, 4.0, 4.0, 0.0, 0.0]
    assert lambda_bar(3, 1) == 0.0


def test_out_of_range():
    with pytest.raises(ValueError):
        coclosed_eigenvalues(3, 3, 1)
    with pytest.raises(ValueError):
        coclosed_eigenvalues(1, 0, 1)
    assert coclosed_eigenvalues(3, 1, -1) == []
