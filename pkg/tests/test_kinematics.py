import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pickstow.kinematics import (DHRow, RobotModel, dh_transform, forward_kinematics,
                                 geometric_jacobian, link_frames)
from oracles import dh_chain, fd_jacobian

angles = st.lists(st.floats(-2 * np.pi, 2 * np.pi), min_size=6, max_size=6).map(np.array)


def _rows(model):
    return [(r.a, r.d, r.alpha, r.theta_offset) for r in model.dh_rows]


def test_ur5_table_verbatim(ur5):
    expected = [(0, 0.0895, 1.5708), (-0.425, 0, 0), (-0.3923, 0, 0),
                (0, 0.1092, 1.5708), (0, 0.0947, -1.5708), (0, 0.0823, 0)]
    assert len(ur5.dh_rows) == 6
    for row, (a, d, alpha) in zip(ur5.dh_rows, expected):
        assert (row.a, row.d, row.alpha, row.theta_offset) == (a, d, alpha, 0.0)
    assert ur5.dh_rows[1].a == -0.425 and ur5.dh_rows[1].d == 0
    assert ur5.dh_rows[5].d == 0.0823 and ur5.dh_rows[5].alpha == 0
    np.testing.assert_array_equal(ur5.joint_limits, np.tile([-2 * np.pi, 2 * np.pi], (6, 1)))
    np.testing.assert_array_equal(ur5.link_radii, np.full(6, 0.05))


def test_zero_chain_is_identity(zero_chain):
    np.testing.assert_array_equal(forward_kinematics(zero_chain, np.zeros(6)), np.eye(4))
    for T in link_frames(zero_chain, np.zeros(6)):
        np.testing.assert_array_equal(T, np.eye(4))
    assert len(link_frames(zero_chain, np.zeros(6))) == 7


def test_fk_matches_elementary_chain_at_zero(ur5):
    oracle = dh_chain(_rows(ur5), np.zeros(6))
    np.testing.assert_allclose(forward_kinematics(ur5, np.zeros(6)), oracle[-1], atol=1e-12)
    for T, ref in zip(link_frames(ur5, np.zeros(6)), oracle):
        np.testing.assert_allclose(T[:3, 3], ref[:3, 3], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(angles)
def test_fk_matches_elementary_chain(ur5, q):
    np.testing.assert_allclose(forward_kinematics(ur5, q), dh_chain(_rows(ur5), q)[-1],
                               atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(angles, st.integers(0, 5))
def test_fk_periodic(ur5, q, joint):
    shifted = q.copy()
    shifted[joint] += 2 * np.pi
    np.testing.assert_allclose(forward_kinematics(ur5, q), forward_kinematics(ur5, shifted),
                               atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(angles)
def test_rotation_blocks_orthonormal(ur5, q):
    for T in link_frames(ur5, q):
        R = T[:3, :3]
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(R) - 1.0) < 1e-9


def test_link_frames_last_is_fk_bitwise(ur5, rng):
    for _ in range(10):
        q = rng.uniform(-np.pi, np.pi, 6)
        assert np.array_equal(link_frames(ur5, q)[-1], forward_kinematics(ur5, q))


def test_link_frames_prefix_consistent(ur5, rng):
    q = rng.uniform(-np.pi, np.pi, 6)
    frames = link_frames(ur5, q)
    for k in range(1, 7):
        np.testing.assert_allclose(frames[k], frames[k - 1] @ dh_transform(ur5.dh_rows[k - 1],
                                                                            q[k - 1]),
                                   atol=1e-15)


def test_jacobian_matches_finite_differences(ur5, rng):
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 6)
        J = geometric_jacobian(ur5, q)
        ref = fd_jacobian(lambda x: forward_kinematics(ur5, x), q)
        assert np.max(np.abs(J[:3] - ref[:3])) <= 1e-5
        assert np.max(np.abs(J[3:] - ref[3:])) <= 1e-4


def test_zero_chain_jacobian_has_no_lever_arms(zero_chain):
    assert np.all(geometric_jacobian(zero_chain, np.zeros(6))[:3] == 0)


def test_first_column_by_hand(ur5):
    q = np.zeros(6)
    z0 = np.array([0.0, 0.0, 1.0])
    p_e = forward_kinematics(ur5, q)[:3, 3]
    col = geometric_jacobian(ur5, q)[:, 0]
    np.testing.assert_allclose(col[:3], np.cross(z0, p_e), atol=1e-15)
    np.testing.assert_allclose(col[3:], z0)


def test_model_json_roundtrip(ur5):
    doc = json.loads(ur5.to_json())
    assert set(doc) == {"dh", "joint_limits", "link_radii"}
    assert set(doc["dh"][0]) == {"a", "d", "alpha", "theta_offset"}
    back = RobotModel.from_json(ur5.to_json())
    np.testing.assert_array_equal(back.joint_limits, ur5.joint_limits)
    assert back.dh_rows == ur5.dh_rows


@pytest.mark.parametrize("bad", [
    dict(rows=5), dict(limits=[[1.0, 0.0]] * 6), dict(radii=[0.05] * 5 + [0.0]),
])
def test_model_validation(bad):
    rows = tuple(DHRow(0, 0, 0) for _ in range(bad.get("rows", 6)))
    kw = {}
    if "limits" in bad:
        kw["joint_limits"] = bad["limits"]
    if "radii" in bad:
        kw["link_radii"] = bad["radii"]
    with pytest.raises(ValueError):
        RobotModel(rows, **kw)


def test_dh_row_validation():
    with pytest.raises(ValueError):
        DHRow(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        DHRow(0, 0, -np.pi)


def test_within_limits(ur5):
    assert ur5.within_limits(np.zeros(6))
    assert not ur5.within_limits(np.full(6, 7.0))


def test_bad_joint_vector(ur5):
    with pytest.raises(ValueError):
        forward_kinematics(ur5, np.zeros(5))
    with pytest.raises(ValueError):
        forward_kinematics(ur5, [0, 0, 0, 0, 0, np.inf])
