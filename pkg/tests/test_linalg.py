import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tensorgap.ensembles import sample_haar
from tensorgap.linalg import (
    ParseError,
    ShapeError,
    UnitaryTuple,
    ValidationError,
    adjoint,
    check_unitary,
    conjugate,
    load_json,
    load_utpl,
    multiply,
    normalized_trace,
    save_json,
    save_utpl,
    utpl_bytes,
)

from conftest import random_unitary

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_multiply_trivial():
    a = np.array([[1 + 2j, 3], [4, 5j]])
    np.testing.assert_array_equal(multiply(I2, a), a)
    np.testing.assert_array_equal(multiply(Z, Z), I2)
    np.testing.assert_array_equal(multiply(X, X), I2)


def test_multiply_shape_error():
    with pytest.raises(ShapeError):
        multiply(np.ones((2, 3)), np.ones((2, 3)))


def test_adjoint_and_conjugate():
    assert adjoint([[1j]])[0, 0] == -1j
    assert conjugate([[1j]])[0, 0] == -1j
    real = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(conjugate(real), real)
    u = random_unitary(5, 1)
    np.testing.assert_allclose(adjoint(u), np.linalg.inv(u), atol=1e-10)


def test_involutions(rng):
    a = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    b = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    np.testing.assert_array_equal(adjoint(adjoint(a)), a)
    np.testing.assert_array_equal(conjugate(conjugate(a)), a)
    np.testing.assert_allclose(adjoint(a @ b), adjoint(b) @ adjoint(a), atol=1e-14)


def test_normalized_trace(rng):
    assert normalized_trace(np.eye(7)) == 1
    assert normalized_trace(Z) == 0
    x = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    y = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    assert abs(normalized_trace(x @ y - y @ x)) < 1e-12
    with pytest.raises(ShapeError):
        normalized_trace(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), dim=st.integers(1, 12))
def test_trace_unitary_invariance(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    u = random_unitary(dim, seed)
    assert abs(normalized_trace(u @ a @ u.conj().T) - normalized_trace(a)) < 1e-12


def test_check_unitary():
    ok, defect = check_unitary([np.eye(3), np.eye(3)], 1e-10)
    assert ok and defect == 0
    ok, defect = check_unitary([np.eye(2), 2 * np.eye(2)], 1e-10)
    assert not ok and defect == 3
    assert check_unitary(sample_haar(3, 20, 5), 1e-10)[0]


def test_tuple_rejects_non_unitary():
    with pytest.raises(ValidationError):
        UnitaryTuple((np.eye(2), 2 * np.eye(2)))
    with pytest.raises(ShapeError):
        UnitaryTuple((np.eye(2), np.eye(3)))
    with pytest.raises(ValidationError):
        UnitaryTuple((np.array([[np.nan]]),))


def test_tuple_is_immutable():
    t = sample_haar(2, 3, 0)
    with pytest.raises(ValueError):
        t.matrices[0][0, 0] = 5


def test_utpl_layout():
    t = UnitaryTuple((np.array([[1j]]), np.array([[-1.0]])))
    data = utpl_bytes(t)
    assert data[:4] == b"UTPL"
    assert data[4] == 1
    assert data[5:9] == (2).to_bytes(4, "little")
    assert data[9:13] == (1).to_bytes(4, "little")
    body = np.frombuffer(data[13:], dtype="<f8")
    np.testing.assert_array_equal(body, [0.0, 1.0, -1.0, 0.0])


def test_utpl_row_major():
    u = np.array([[0, 1], [1, 0]], dtype=complex) * np.array([[1, 1j], [1, 1]])
    t = UnitaryTuple((u,))
    body = np.frombuffer(utpl_bytes(t)[13:], dtype="<c16")
    np.testing.assert_array_equal(body, u.ravel(order="C"))


@pytest.mark.parametrize("saver,loader", [(save_utpl, load_utpl), (save_json, load_json)])
def test_round_trip_bit_exact(tmp_path, saver, loader):
    t = sample_haar(3, 7, 11)
    path = saver(t, tmp_path / "t")
    back = loader(path)
    assert back.equals(t)


def test_json_mirror_shape(tmp_path):
    t = sample_haar(2, 3, 1)
    obj = json.loads(save_json(t, tmp_path / "t.json").read_text())
    assert obj["n"] == 2 and obj["dim"] == 3 and obj["label"] == t.label
    assert len(obj["matrices"]) == 2 and len(obj["matrices"][0]) == 9
    assert obj["matrices"][0][1] == [t[0][0, 1].real, t[0][0, 1].imag]


def test_parse_errors(tmp_path):
    t = sample_haar(2, 3, 1)
    p = save_utpl(t, tmp_path / "t.utpl")
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(ParseError):
        load_utpl(p)
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ParseError):
        load_utpl(p)
    q = tmp_path / "bad.json"
    q.write_text('{"n": 1, "dim": 2, "matrices": [[[1, 0]]]}')
    with pytest.raises(ParseError):
        load_json(q)
