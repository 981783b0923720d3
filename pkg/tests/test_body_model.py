"""Linear blend skinning against a direct per-vertex transform oracle."""

import numpy as np
import pytest

from fvcap.body.builtin import build_body
from fvcap.body.model import (BodyParams, load_body_model, pose_body,
                              pose_joints, rodrigues, save_body_model,
                              shaped_rest)
from fvcap.errors import SizeMismatch


@pytest.fixture(scope="module")
def body():
    return build_body("low")


def _zero_params(model, frames=1):
    return BodyParams(np.zeros((frames, model.num_joints, 3)),
                      np.zeros(model.num_shapes), np.zeros((frames, 3)))


def test_rest_pose_is_template(body):
    mesh = pose_body(body, _zero_params(body), 0)
    assert np.abs(mesh.vertices - body.template).max() < 1e-12


def test_root_only_rotation_is_rigid(body):
    aa = np.array([0.3, -0.2, 0.5])
    R = rodrigues(aa)
    params = _zero_params(body)
    params.theta[0, 0] = aa
    mesh = pose_body(body, params, 0)
    root = body.joint_rest[0]
    want = (body.template - root) @ R.T + root
    assert np.abs(mesh.vertices - want).max() < 1e-9


def test_random_pose_matches_direct_summation_oracle(body):
    rng = np.random.default_rng(4)
    theta = rng.normal(scale=0.3, size=(1, body.num_joints, 3))
    beta = rng.normal(scale=0.5, size=body.num_shapes)
    trans = rng.normal(scale=0.2, size=(1, 3))
    params = BodyParams(theta, beta, trans)
    mesh = pose_body(body, params, 0)

    # oracle: per-vertex explicit weighted transform, scalar chain walk
    v_shaped, joints = shaped_rest(body, beta)
    R = rodrigues(theta[0])
    G = {}

    def global_tf(j):
        if j in G:
            return G[j]
        p = int(body.parents[j])
        A = np.eye(4)
        A[:3, :3] = R[j]
        A[:3, 3] = joints[j] - (joints[p] if p >= 0 else 0.0)
        G[j] = A if p < 0 else global_tf(p) @ A
        return G[j]

    for vi in rng.choice(body.num_vertices, size=60, replace=False):
        acc = np.zeros(3)
        for j in range(body.num_joints):
            w = body.weights[vi, j]
            if w == 0.0:
                continue
            Gj = global_tf(j)
            local = v_shaped[vi] - joints[j]
            acc += w * (Gj[:3, :3] @ local + Gj[:3, 3])
        acc += trans[0]
        assert np.abs(acc - mesh.vertices[vi]).max() < 1e-9


def test_pose_joints_follow_chain(body):
    params = _zero_params(body)
    params.theta[0, 0] = [0.0, 0.0, np.pi / 2]
    params.trans[0] = [1.0, 0.0, 0.0]
    j = pose_joints(body, params, 0)
    root = body.joint_rest[0]
    want_head = root + rodrigues(params.theta[0, 0]) @ (body.joint_rest[3] - root)
    assert np.allclose(j[3], want_head + [1.0, 0.0, 0.0], atol=1e-12)


def test_shape_blend_changes_height(body):
    tall = BodyParams(np.zeros((1, body.num_joints, 3)), np.array([0.0, 1.0]),
                      np.zeros((1, 3)))
    mesh = pose_body(body, tall, 0)
    assert mesh.vertices[:, 2].max() > body.template[:, 2].max() + 0.05


def test_size_mismatch_raises(body):
    bad = BodyParams(np.zeros((1, 3, 3)), np.zeros(2), np.zeros((1, 3)))
    with pytest.raises(SizeMismatch):
        pose_body(body, bad, 0)


def test_axis_angle_range_validated():
    with pytest.raises(ValueError):
        BodyParams(np.full((1, 16, 3), 4.0), np.zeros(2), np.zeros((1, 3)))


def test_archive_round_trip(tmp_path, body):
    path = tmp_path / "body.npz"
    save_body_model(path, body)
    loaded = load_body_model(path)
    assert np.allclose(loaded.template, body.template)
    assert np.allclose(loaded.weights, body.weights)
    assert loaded.joint_names == body.joint_names
    rng = np.random.default_rng(1)
    params = BodyParams(rng.normal(scale=0.2, size=(1, 16, 3)),
                        rng.normal(size=2), np.zeros((1, 3)))
    a = pose_body(body, params, 0)
    b = pose_body(loaded, params, 0)
    assert np.allclose(a.vertices, b.vertices)
