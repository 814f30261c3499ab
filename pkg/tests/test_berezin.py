import json
import math

import numpy as np
import pytest

from oracles import gaussian_heat, hermite_heat, phase_heat, polar_heat
from polyfock import symbols as lib
from polyfock.berezin import (
    BerezinSample,
    berezin_field,
    berezin_matrix,
    berezin_scalar,
    berezin_standard,
    circle_grid,
    heat_transform,
)
from polyfock.errors import DomainError, RangeError
from polyfock.operators import (
    conjugate_by_weyl,
    flip_matrix,
    hankel_gram,
    identity_matrix,
    projection_matrix,
    toeplitz_matrix,
)


def disk_points(rng, radius, count):
    return radius * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))


@pytest.fixture
def level_difference(desk):
    """``P_(1) - P_(2)`` on the first three levels."""
    P = projection_matrix(desk, level=1) + projection_matrix(desk, level=2).scaled(-1)
    return P.restrict(desk.first(3), desk.first(3))


# --------------------------------------------------------------------------
# transforms of simple operators


def test_identity(desk, rng):
    I = identity_matrix(desk)
    for z in disk_points(rng, 3.0, 5):
        assert berezin_scalar(I.restrict(desk.level(2), desk.level(2)), z) == pytest.approx(1, abs=1e-12)
        assert np.abs(berezin_matrix(I, z, 4) - np.eye(4)).max() <= 1e-12
        assert berezin_standard(I, z, 3) == pytest.approx(1, abs=1e-12)


def test_level_projection_on_its_level(desk):
    P = projection_matrix(desk, level=3)
    assert berezin_scalar(P, 1 - 1j, level=3) == pytest.approx(1, abs=1e-12)
    assert berezin_scalar(P, 1 - 1j, level=2) == 0


def test_level_difference(level_difference, rng):
    for z in disk_points(rng, 3.0, 8):
        assert np.abs(berezin_matrix(level_difference, z) - np.diag([1, -1, 0])).max() <= 1e-10
    T2 = level_difference.restrict(level_difference.spec.first(2), level_difference.spec.first(2))
    for z in [0, 1.5j, 3.0, 3.0 * np.exp(2.2j)]:
        assert abs(berezin_standard(T2, z, 2)) <= 1e-8


def test_toeplitz_of_abs_square(desk):
    T = toeplitz_matrix(lib.monomial(1, 1), desk, level=1)
    assert berezin_scalar(T, 2.0).real == pytest.approx(5.0, abs=1e-6)


def test_flip_operator(desk, rng):
    U = flip_matrix(desk)
    for z in disk_points(rng, 2.5, 6):
        assert berezin_standard(U, z, 1) == pytest.approx(math.exp(-2 * abs(z) ** 2), abs=1e-12)


def test_gate(desk):
    with pytest.raises(RangeError):
        berezin_scalar(identity_matrix(desk), 6.0, level=1)
    with pytest.raises(DomainError):
        berezin_matrix(toeplitz_matrix(lib.gaussian(), desk, level=1), 0.5, 2)


# --------------------------------------------------------------------------
# heat transform


def test_heat_examples(rng):
    for z in disk_points(rng, 4.0, 6):
        assert heat_transform(lib.constant(2 - 1j), z) == pytest.approx(2 - 1j, abs=1e-12)
        assert heat_transform(lib.monomial(1, 1), z) == pytest.approx(abs(z) ** 2 + 1, abs=1e-9)
        ph = heat_transform(lib.phase(), z)
        assert ph == pytest.approx(phase_heat(z), abs=1e-10)
        assert abs(ph) == pytest.approx(2 ** -0.5 * math.exp(-abs(z) ** 2 / 2), abs=1e-10)
        assert heat_transform(lib.gaussian(0.7), z) == pytest.approx(gaussian_heat(0.7, z), abs=1e-10)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_heat_matches_hermite_oracle(level):
    smooth = lib.gaussian(0.3)
    for z in (0.4 - 0.2j, 2.0 + 1.0j, -3.5j):
        assert heat_transform(smooth, z, level) == pytest.approx(hermite_heat(smooth, z, level), abs=1e-10)
    # Gauss-Hermite converges slowly across the kink at |w| = 1; the polar oracle splits there
    f = lib.angular()
    for z in (0.4 - 0.2j, 2.0 + 1.0j):
        oracle = polar_heat(lambda s: min(s, 1.0), 1, z, level, breaks=(1.0,))
        assert heat_transform(f, z, level) == pytest.approx(oracle, abs=1e-10)
    z = 6.0 * np.exp(0.7j)
    assert heat_transform(f, z, level) == pytest.approx(hermite_heat(f, z, level), abs=1e-10)


def test_heat_is_bounded_and_agrees_with_toeplitz_berezin(desk):
    f = lib.angular()
    T = toeplitz_matrix(f, desk, level=2)
    for z in (0.5, 1.5 - 1j, 2.0 * np.exp(1.1j), 5.0j):
        h = heat_transform(f, z, 2)
        assert abs(h) <= f.bound
        if abs(z) <= 3:
            assert berezin_scalar(T, z) == pytest.approx(h, abs=1e-8)


def test_heat_rejects_level_zero():
    with pytest.raises(DomainError):
        heat_transform(lib.gaussian(), 1.0, level=0)


# --------------------------------------------------------------------------
# invariants


@pytest.mark.parametrize("f", [lib.angular(), lib.gaussian(0.5), lib.monomial(1, 1, 4.0), lib.phase()],
                         ids=lambda f: f.tag)
def test_shift_covariance(desk, rng, f):
    T = toeplitz_matrix(f, desk, order=3)
    for _ in range(3):
        z, zeta = disk_points(rng, 1.5, 2)
        lhs = berezin_matrix(conjugate_by_weyl(T, zeta), z)
        rhs = berezin_matrix(T, z + zeta)
        assert np.linalg.norm(lhs - rhs, 2) <= 1e-6


@pytest.mark.parametrize("f", [lib.gaussian(1.0), lib.heaviside_strip(0.5, 2.0), lib.monomial(1, 1, 3.0)],
                         ids=lambda f: f.tag)
def test_hankel_sandwich(desk, f):
    G = hankel_gram(f, desk, level=1)
    for z in (0.0, 1.0 + 0.5j, 2.5j):
        b = berezin_scalar(G, z).real
        upper = (heat_transform(f.abs2(), z) - abs(heat_transform(f, z)) ** 2).real
        assert -1e-10 <= b <= upper + 1e-6


def test_adjoint_symmetry_and_boundedness(desk, rng):
    T = toeplitz_matrix(lib.angular(), desk, order=3)
    Ts = T.adjoint()
    norm = T.norm()
    for z in disk_points(rng, 3.0, 6):
        B = berezin_matrix(T, z)
        assert np.abs(berezin_matrix(Ts, z) - B.conj().T).max() <= 1e-10
        assert np.linalg.norm(B, 2) <= norm + 1e-8


# --------------------------------------------------------------------------
# fields


def test_field_ordering_and_identity(desk):
    grid = circle_grid([1.0, 2.0], 4)
    assert np.allclose(grid[:4], np.exp(0.5j * np.pi * np.arange(4)))
    s = berezin_field(identity_matrix(desk), grid, "matrix", n=2)
    assert len(s) == 8 and s.values.shape == (8, 2, 2)
    assert np.abs(s.values - np.eye(2)).max() <= 1e-12
    assert np.allclose(s.norms(), 1.0)


def test_hermitian_values_for_self_adjoint_source(desk):
    T = toeplitz_matrix(lib.heaviside_strip(0.5, 1.5), desk, order=3)
    s = berezin_field(T, circle_grid([0.5, 2.0], 5), "matrix")
    assert np.abs(s.values - s.values.conj().transpose(0, 2, 1)).max() <= 1e-10


def test_compact_model_decays(desk):
    T = toeplitz_matrix(lib.phase(), desk, level=1)
    s = berezin_field(T, circle_grid([1, 2, 3, 4, 5], 16), "scalar")
    peaks = s.norms().reshape(5, 16).max(axis=1)
    assert np.all(np.diff(peaks) < 0)


def test_heat_field_and_modes(desk):
    s = berezin_field(lib.gaussian(1.0), [0, 1j], "heat")
    assert s.values[:, 0, 0] == pytest.approx([0.5, gaussian_heat(1.0, 1j)])
    with pytest.raises(DomainError):
        berezin_field(identity_matrix(desk), [0], "heat")
    with pytest.raises(DomainError):
        berezin_field(lib.gaussian(), [0], "scalar")
    with pytest.raises(DomainError):
        berezin_field(identity_matrix(desk), [0], "bogus")


def test_sample_serialization():
    s = BerezinSample(np.array([1 + 2j, -0.0]), np.array([[[1, 2j], [0, 1]], [[3, 0], [0, 1 / 3]]]), 2,
                      {"mode": "matrix"})
    lines = s.to_csv().splitlines()
    assert lines[0] == "re_z,im_z,k,j,re_value,im_value"
    assert len(lines) == 1 + 2 * 4
    assert lines[2] == "1,2,1,2,0,2"
    assert lines[-1] == "0,0,2,2,0.33333333333333331,0"
    d = json.loads(s.to_json())
    assert d["schema"] == "polyfock-report/1" and d["n"] == 2
    assert d["values"][1][1][1] == [1 / 3, 0.0]
