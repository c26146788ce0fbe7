import numpy as np
import pytest

from mmflow.eos import MaterialEos
from mmflow.errors import DomainError
from mmflow.state import (ConservedState, InterfaceFrame, PrimitiveState,
                          cons_to_prim, cons_to_prim_arrays, prim_to_cons,
                          prim_to_cons_arrays, rotate, rotate_arrays)

AIR = MaterialEos(1.4)
WATER = MaterialEos(4.4, 6450.0)


def test_prim_to_cons_examples():
    u = prim_to_cons(PrimitiveState(1, 0, 0, 1), AIR)
    assert (u.rho, u.mx, u.my) == (1, 0, 0)
    assert u.E == pytest.approx(2.5)
    u = prim_to_cons(PrimitiveState(2, 3, 0, 1), AIR)
    assert (u.mx, u.my) == (6, 0)
    assert u.E == pytest.approx(11.5)


def test_cons_to_prim_examples():
    w = cons_to_prim(ConservedState(1, 0, 0, 2.5), AIR)
    assert w.p == pytest.approx(1.0)
    w = cons_to_prim(ConservedState(2, 6, 0, 11.5), AIR)
    assert (w.ux, w.uy) == (3, 0)
    assert w.p == pytest.approx(1.0)
    with pytest.raises(DomainError):
        cons_to_prim(ConservedState(1, 0, 0, -1.0), AIR)


def test_round_trip_randomized():
    rng = np.random.default_rng(5)
    for eos in (AIR, WATER):
        for _ in range(100):
            w = PrimitiveState(rng.uniform(0.01, 10), rng.uniform(-50, 50),
                               rng.uniform(-50, 50), rng.uniform(0.01, 1e5))
            back = cons_to_prim(prim_to_cons(w, eos), eos)
            assert back.rho == pytest.approx(w.rho, rel=1e-12)
            assert back.p == pytest.approx(w.p, rel=1e-12)
            assert back.ux == pytest.approx(w.ux, rel=1e-12, abs=1e-12)


def test_frame_validation():
    with pytest.raises(DomainError):
        InterfaceFrame(1.0, 1.0)
    f = InterfaceFrame(0.6, 0.8)
    assert (f.tx, f.ty) == (-0.8, 0.6)


def test_rotate_examples():
    w = PrimitiveState(1.0, 2.0, 3.0, 4.0)
    ident = rotate(w, InterfaceFrame(1.0, 0.0), "into")
    assert (ident.ux, ident.uy) == (2.0, 3.0)
    f = InterfaceFrame(0.0, 1.0)  # t = (-1, 0)
    r = rotate(PrimitiveState(1, 2.0, 5.0, 1), f, "into")
    assert (r.ux, r.uy) == (5.0, -2.0)


def test_rotate_round_trip_and_invariants():
    rng = np.random.default_rng(6)
    for _ in range(100):
        th = rng.uniform(0, 2 * np.pi)
        f = InterfaceFrame(np.cos(th), np.sin(th))
        w = PrimitiveState(rng.uniform(0.1, 5), rng.uniform(-9, 9),
                           rng.uniform(-9, 9), rng.uniform(0.1, 10))
        r = rotate(w, f, "into")
        assert r.rho == w.rho and r.p == w.p
        assert r.ux ** 2 + r.uy ** 2 == pytest.approx(
            w.ux ** 2 + w.uy ** 2, rel=1e-14, abs=1e-14)
        back = rotate(r, f, "out")
        assert back.ux == pytest.approx(w.ux, abs=1e-13)
        assert back.uy == pytest.approx(w.uy, abs=1e-13)


def test_array_conversions_match_scalar():
    rng = np.random.default_rng(7)
    W = np.stack([rng.uniform(0.1, 5, (3, 4)), rng.uniform(-3, 3, (3, 4)),
                  rng.uniform(-3, 3, (3, 4)), rng.uniform(0.1, 10, (3, 4))])
    U = prim_to_cons_arrays(W, AIR)
    back = cons_to_prim_arrays(U, AIR)
    assert np.allclose(back, W, rtol=1e-13)
    u_scalar = prim_to_cons(PrimitiveState(*W[:, 0, 0]), AIR)
    assert U[3, 0, 0] == pytest.approx(u_scalar.E)


def test_cons_to_prim_arrays_names_cell():
    W = np.ones((4, 3, 3))
    W[1] = 0.0
    W[2] = 0.0
    U = prim_to_cons_arrays(W, AIR)
    U[0, 1, 2] = -1.0
    with pytest.raises(DomainError, match=r"\(1, 2\)"):
        cons_to_prim_arrays(U, AIR)


def test_rotate_arrays_round_trip():
    rng = np.random.default_rng(8)
    W = rng.uniform(0.5, 2.0, (4, 50))
    th = rng.uniform(0, 2 * np.pi, 50)
    nx, ny = np.cos(th), np.sin(th)
    back = rotate_arrays(rotate_arrays(W, nx, ny, "into"), nx, ny, "out")
    assert np.allclose(back, W, atol=1e-13)
