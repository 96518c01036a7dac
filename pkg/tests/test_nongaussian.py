import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qndsim.channel import compute_channel
from qndsim.errors import ParameterDomainError
from qndsim.nongaussian import (
    QUADRATURE_RELABEL,
    WignerGrid,
    channel_wigner,
    fock_wigner,
    make_grid,
    negativity_boundary,
    negativity_boundary_scan,
    transferred_fock_wigner,
    wigner_at_origin,
)
from qndsim.params import ModelTier

INV2PI = 1 / (2 * math.pi)
channels = st.tuples(st.floats(0.01, 0.99), st.floats(1.0, 3.0), st.floats(0.5, 2.0)).map(
    lambda t: (t[0], t[1] * t[2], t[1] / t[2])
)


def test_fock_wigner_values():
    x, p = make_grid()
    assert fock_wigner(0, x, p).value_at(0, 0) == pytest.approx(INV2PI, rel=1e-15)
    assert fock_wigner(1, x, p).value_at(0, 0) == pytest.approx(-0.15915, abs=1e-5)
    th = np.linspace(0, 2 * np.pi, 17)
    ring = transferred_fock_wigner(1, np.cos(th), np.sin(th), 1.0, 1.0, 1.0)
    assert np.max(np.abs(ring)) < 1e-15
    X, P = np.meshgrid(x, p, indexing="ij")
    expected = INV2PI * (X**2 + P**2 - 1) * np.exp(-(X**2 + P**2) / 2)
    assert np.allclose(fock_wigner(1, x, p).W, expected, atol=1e-16)


@pytest.mark.parametrize("n", [-1, 4, 1.5])
def test_fock_number_out_of_range(n):
    with pytest.raises(ParameterDomainError):
        fock_wigner(n)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_identity_channel(n):
    x, p = make_grid()
    out = channel_wigner(n, (1.0, 1.7, 1 / 1.2), x, p)
    assert np.max(np.abs(out.W - fock_wigner(n, x, p).W)) <= 1e-9


def test_vanishing_transmission_gives_noise_gaussian():
    x, p = make_grid()
    V = 1.8
    out = channel_wigner(1, (0.0, V, V), x, p)
    X, P = np.meshgrid(x, p, indexing="ij")
    gauss = np.exp(-(X**2 + P**2) / (2 * V)) / (2 * math.pi * V)
    assert np.allclose(out.W, gauss, atol=1e-16)
    assert np.all(out.W > 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), channels)
def test_normalization_and_bound(n, ch):
    T, vx, vy = ch
    out = channel_wigner(n, ch, *make_grid(extent=5 * math.sqrt(max(vx, vy, 1.0)) + 3, n=161))
    assert 0.99 <= out.integral() <= 1.001
    assert np.max(np.abs(out.W)) <= INV2PI + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), channels)
def test_origin_matches_grid(n, ch):
    out = channel_wigner(n, ch, *make_grid(extent=1.0, n=11))
    assert wigner_at_origin(n, ch) == pytest.approx(out.value_at(0.0, 0.0), abs=1e-10)


def test_origin_special_values():
    assert wigner_at_origin(1, (1.0, 1.0, 1.0)) == pytest.approx(-INV2PI, rel=1e-15)
    assert wigner_at_origin(1, (0.5, 1.0, 1.0)) == pytest.approx(0.0, abs=1e-16)
    assert wigner_at_origin(1, (0.85129, 1.0, 1.0)) < 0
    assert wigner_at_origin(0, (0.3, 2.0, 2.0)) > 0


def test_point_O_loses_negativity(ref):
    ch = compute_channel(ref, ModelTier.FULL)
    assert wigner_at_origin(1, ch) > 0


def test_frames_are_rotations():
    x, p = make_grid(n=41)
    ch = (0.7, 1.6, 1.1)
    mech = channel_wigner(1, ch, x, p)
    inp = channel_wigner(1, ch, x, p, frame="input")
    # W_in(X, Y) = W_mech(q = -Y, p = X): rotate the array by 90 degrees
    assert np.allclose(inp.W, mech.W[::-1, :].T, atol=1e-15)
    assert inp.meta["relabel"] == QUADRATURE_RELABEL and inp.meta["frame"] == "input"
    with pytest.raises(ParameterDomainError):
        channel_wigner(1, ch, x, p, frame="lab")


def test_channel_metadata(ref):
    ch = compute_channel(ref, ModelTier.FULL)
    grid = channel_wigner(1, ch, *make_grid(n=5))
    assert grid.meta["channel"] == {"T": ch.T, "V_XN": ch.V_XN, "V_YN": ch.V_YN}
    assert grid.meta["state"] == "fock_1"


@pytest.mark.parametrize("ch", [(1.2, 1, 1), (-0.1, 1, 1), (0.5, 0.5, 1.0), (0.5, -1, -1)])
def test_invalid_channel(ch):
    with pytest.raises(ParameterDomainError):
        wigner_at_origin(1, ch)


def test_squeezed_noise_below_vacuum_in_one_quadrature_is_allowed():
    # V_XN * V_YN >= 1 is physical even when one variance dips below 1
    assert np.isfinite(wigner_at_origin(1, (0.8, 2.24, 0.83)))


def test_grid_shape_checked():
    with pytest.raises(ParameterDomainError):
        WignerGrid(np.zeros(3), np.zeros(4), np.zeros((4, 3)))
    with pytest.raises(ParameterDomainError):
        make_grid(extent=0.0)


def test_triples_order():
    g = fock_wigner(0, np.array([0.0, 1.0]), np.array([-1.0, 0.0, 1.0]))
    t = g.triples()
    assert t.shape == (6, 3)
    assert t[:3, 0].tolist() == [0.0, 0.0, 0.0] and t[:3, 1].tolist() == [-1.0, 0.0, 1.0]


def test_purity_monotone_in_noise():
    x, p = make_grid(n=201)
    for T in (0.3, 0.7, 0.9):
        peaks = [channel_wigner(1, (T, V, V), x, p).W.max() for V in np.linspace(1, 4, 13)]
        assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_origin_monotone_in_noise_and_transmission():
    Ts = np.linspace(0.05, 0.95, 19)
    Vs = np.linspace(1.0, 5.0, 17)
    W = np.array([[wigner_at_origin(1, (T, V, V)) for V in Vs] for T in Ts])
    a = Ts[:, None] + (1 - Ts[:, None]) * Vs[None, :]
    assert np.allclose(W, (a - 2 * Ts[:, None]) / (2 * math.pi * a**2), atol=1e-15)
    # rises with V while a < 4T, which covers the whole negative region a < 2T
    assert np.all(np.diff(W, axis=1)[a[:, 1:] < 4 * Ts[:, None]] > 0)
    # falls with T wherever the origin is non-positive
    neg = (W[1:] <= 0) & (W[:-1] <= 0)
    assert neg.sum() > 20
    assert np.all(np.diff(W, axis=0)[neg] < 0)


def test_negativity_boundary_values():
    assert negativity_boundary(0.5) == 1.0
    assert math.isnan(negativity_boundary(0.3))
    for T in (0.6, 0.8, 0.95):
        assert negativity_boundary(T) == pytest.approx(T / (1 - T), rel=1e-9)
    b = [negativity_boundary(T) for T in np.linspace(0.55, 0.95, 9)]
    assert all(y > x for x, y in zip(b, b[1:]))


def test_boundary_scan_reports_quoted_bound():
    rows = negativity_boundary_scan([0.5, 0.8])
    assert rows[0]["V_quoted"] == 1.0 and not rows[0]["disagree"]
    assert rows[1]["V_quoted"] == pytest.approx(2.0, rel=1e-12)
    assert rows[1]["V_boundary"] == pytest.approx(4.0, rel=1e-9)
    assert rows[1]["disagree"]
