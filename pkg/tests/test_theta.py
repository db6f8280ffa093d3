import numpy as np
import pytest

from rhtheta.errors import NotRiemannMatrix, TruncationOverflow
from rhtheta.theta import (
    ThetaChar,
    find_odd_nonsingular_char,
    theta,
    theta_derivs,
)

# Frozen g=1 reference values (classical Jacobi theta constants).
THETA3_AT_0_TAU_I = 1.0864348112133080146
THETA3_AT_Z = 0.95869152529099514998 + 0.066484773332860036266j  # z=0.31-0.12i


def random_riemann_matrix(rng, g):
    X = rng.uniform(-0.5, 0.5, (g, g))
    X = X + X.T
    R = rng.uniform(-1, 1, (g, g))
    Y = R @ R.T + (0.6 + 0.4 * g) * np.eye(g)
    return X + 1j * Y


def test_value_g1_frozen():
    B = np.array([[1j]])
    assert abs(theta(np.zeros(1), B) - THETA3_AT_0_TAU_I) < 1e-13
    val = theta(np.array([0.31 - 0.12j]), B)
    assert abs(val - THETA3_AT_Z) < 1e-13


def test_value_g1_against_mpmath():
    import mpmath as mp
    rng = np.random.default_rng(2)
    for _ in range(6):
        tau = rng.uniform(-0.8, 0.8) + 1j * rng.uniform(0.4, 1.6)
        z = rng.uniform(-1, 1) + 1j * rng.uniform(-0.7, 0.7)
        ours = theta(np.array([z]), np.array([[tau]]))
        ref = mp.jtheta(3, mp.pi * mp.mpc(z), mp.exp(1j * mp.pi * mp.mpc(tau)))
        assert abs(ours - complex(ref)) < 1e-12 * max(1.0, abs(complex(ref)))


def test_half_char_is_minus_theta1():
    import mpmath as mp
    B = np.array([[0.22 + 1.31j]])
    ch = ThetaChar((0.5,), (0.5,))
    for z in (0.3 + 0.1j, -0.7 + 0.44j):
        ours = theta(np.array([z]), B, ch)
        ref = -mp.jtheta(1, mp.pi * mp.mpc(z), mp.exp(1j * mp.pi * mp.mpc(0.22 + 1.31j)))
        assert abs(ours - complex(ref)) < 1e-12


def test_quasi_periodicity():
    rng = np.random.default_rng(4)
    for g in (1, 2, 3):
        B = random_riemann_matrix(rng, g)
        ch = ThetaChar(tuple(rng.integers(0, 2, g) / 2),
                       tuple(rng.integers(0, 2, g) / 2))
        for _ in range(8):
            z = rng.normal(0, 0.8, g) + 1j * rng.normal(0, 0.5, g)
            n = rng.integers(-2, 3, g)
            m = rng.integers(-2, 3, g)
            lhs = theta(z + n + B @ m, B, ch)
            p, q = np.array(ch.p), np.array(ch.q)
            mult = np.exp(2j * np.pi * (p @ n - q @ m)
                          - 1j * np.pi * m @ B @ m - 2j * np.pi * m @ z)
            rhs = mult * theta(z, B, ch)
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_integer_char_shift():
    rng = np.random.default_rng(6)
    B = random_riemann_matrix(rng, 2)
    p = np.array([0.5, 0.0])
    q = np.array([0.0, 0.5])
    z = np.array([0.1 + 0.2j, -0.3 + 0.1j])
    N = np.array([1, -2])
    M = np.array([3, 1])
    lhs = theta(z, B, ThetaChar(tuple(p + N), tuple(q + M)))
    rhs = np.exp(2j * np.pi * p @ M) * theta(z, B, ThetaChar(tuple(p), tuple(q)))
    assert abs(lhs - rhs) < 1e-12 * abs(rhs)


def test_parity():
    rng = np.random.default_rng(8)
    B = random_riemann_matrix(rng, 2)
    z = rng.normal(0, 0.5, 2) + 1j * rng.normal(0, 0.3, 2)
    even = ThetaChar((0.5, 0.0), (0.0, 0.5))   # 4 p.q = 0
    odd = ThetaChar((0.5, 0.5), (0.5, 0.5))    # 4 p.q = 2 -> even, pick another
    assert even.parity() == 1
    odd = ThetaChar((0.5, 0.0), (0.5, 0.0))    # 4 p.q = 1
    assert odd.parity() == -1
    assert abs(theta(-z, B, even) - theta(z, B, even)) < 1e-12
    assert abs(theta(-z, B, odd) + theta(z, B, odd)) < 1e-12


def test_gradient_and_hessian_fd():
    rng = np.random.default_rng(10)
    for g in (1, 2):
        B = random_riemann_matrix(rng, g)
        ch = ThetaChar(tuple(rng.integers(0, 2, g) / 2),
                       tuple(rng.integers(0, 2, g) / 2))
        z = rng.normal(0, 0.4, g) + 1j * rng.normal(0, 0.2, g)
        ev = theta_derivs(z, B, ch)
        h = 1e-5
        for a in range(g):
            e = np.eye(g)[a]
            fd = (theta(z + h * e, B, ch) - theta(z - h * e, B, ch)) / (2 * h)
            assert abs(fd - ev.grad[a]) < 1e-7 * max(1.0, abs(ev.grad[a]))
            for b in range(g):
                eb = np.eye(g)[b]
                fd2 = (theta(z + h * e + h * eb, B, ch)
                       - theta(z + h * e - h * eb, B, ch)
                       - theta(z - h * e + h * eb, B, ch)
                       + theta(z - h * e - h * eb, B, ch)) / (4 * h * h)
                assert abs(fd2 - ev.hess[a, b]) < 1e-5 * max(1.0, abs(ev.hess[a, b]))


def test_heat_equation():
    # d theta / d B_ab = (2 - delta_ab) hess_ab / (4 pi i) when the two
    # symmetric entries move together; verified with one Richardson step
    rng = np.random.default_rng(12)
    g = 2
    B = random_riemann_matrix(rng, g)
    ch = ThetaChar((0.5, 0.0), (0.0, 0.0))
    z = np.array([0.21 - 0.08j, -0.33 + 0.14j])
    ev = theta_derivs(z, B, ch)
    for a in range(g):
        for b in range(g):
            def fd(h):
                dB = np.zeros((g, g))
                dB[a, b] += h
                dB[b, a] += h if a != b else 0.0
                return (theta(z, B + dB, ch) - theta(z, B - dB, ch)) / (2 * h)
            d1, d2 = fd(1e-4), fd(5e-5)
            rich = (4 * d2 - d1) / 3
            want = (2 - (a == b)) * ev.hess[a, b] / (4j * np.pi)
            assert abs(rich - want) < 1e-6 * max(1.0, abs(want))


def test_odd_nonsingular_char():
    rng = np.random.default_rng(14)
    ch = find_odd_nonsingular_char(np.array([[1j]]))
    assert ch.p == (0.5,) and ch.q == (0.5,)
    for g in (2, 3):
        B = random_riemann_matrix(rng, g)
        ch = find_odd_nonsingular_char(B)
        assert ch.parity() == -1
        assert abs(theta(np.zeros(g), B, ch)) < 1e-12
        ev = theta_derivs(np.zeros(g), B, ch)
        assert np.linalg.norm(ev.grad) > 1e-8


def test_validation():
    with pytest.raises(NotRiemannMatrix):
        theta(np.zeros(1), np.array([[1.0 + 0j]]))   # Im B = 0
    with pytest.raises(NotRiemannMatrix):
        theta(np.zeros(2), np.array([[1j, 0.5], [0.2, 1j]]))  # asymmetric
    with pytest.raises(TruncationOverflow):
        theta(np.zeros(1), np.array([[1e-5j]]))
