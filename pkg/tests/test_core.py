import math
import random

import pytest

from xrtrain.core import (
    DualQuat,
    InvalidInputError,
    Pose,
    SceneObject,
    SceneState,
    UnitQuat,
    Vec3,
    dq_from_pose,
    dq_mul,
    dq_sclerp,
    dq_to_pose,
    poses_hash,
    rot_angle_between,
    state_hash,
)


def random_pose(rng: random.Random) -> Pose:
    q = UnitQuat(
        rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)
    ).normalized()
    p = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))
    return Pose(p, q)


def pose_close(a: Pose, b: Pose, tol: float = 1e-9) -> bool:
    if (a.position - b.position).norm() > tol:
        return False
    return min(
        abs(a.rotation.w - b.rotation.w) + abs(a.rotation.x - b.rotation.x)
        + abs(a.rotation.y - b.rotation.y) + abs(a.rotation.z - b.rotation.z),
        abs(a.rotation.w + b.rotation.w) + abs(a.rotation.x + b.rotation.x)
        + abs(a.rotation.y + b.rotation.y) + abs(a.rotation.z + b.rotation.z),
    ) <= tol * 4


class TestDqFromPose:
    def test_identity(self):
        dq = dq_from_pose(Pose.identity())
        assert dq.real == UnitQuat(1, 0, 0, 0)
        assert dq.dual == UnitQuat(0, 0, 0, 0)

    def test_pure_translation(self):
        # half of t * q_r with identity rotation: dual = (0, 1, 0, 0)
        dq = dq_from_pose(Pose(Vec3(2, 0, 0), UnitQuat.identity()))
        assert dq.dual == UnitQuat(0, 1, 0, 0)

    def test_round_trip_1000_random_poses(self):
        rng = random.Random(42)
        for _ in range(1000):
            p = random_pose(rng)
            assert pose_close(dq_to_pose(dq_from_pose(p)), p)

    def test_non_unit_rotation_rejected(self):
        with pytest.raises(InvalidInputError):
            dq_from_pose(Pose(Vec3(), UnitQuat(1.1, 0, 0, 0)))


class TestDqToPose:
    def test_identity(self):
        p = dq_to_pose(DualQuat(UnitQuat(1, 0, 0, 0), UnitQuat(0, 0, 0, 0)))
        assert p.position.norm() == 0.0
        assert p.rotation == UnitQuat(1, 0, 0, 0)

    def test_translation_recovery(self):
        # 2 * q_d * conj(q_r) with identity real part: position (1, 0, 0)
        p = dq_to_pose(DualQuat(UnitQuat(1, 0, 0, 0), UnitQuat(0, 0.5, 0, 0)))
        assert (p.position - Vec3(1, 0, 0)).norm() < 1e-12

    def test_double_cover(self):
        dq = dq_from_pose(Pose(Vec3(1, 2, 3), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 40)))
        assert pose_close(dq_to_pose(dq), dq_to_pose(dq.neg()))

    def test_invariant_violation_rejected(self):
        with pytest.raises(InvalidInputError):
            dq_to_pose(DualQuat(UnitQuat(0.5, 0, 0, 0), UnitQuat(0, 0, 0, 0)))


class TestDqMul:
    def test_identity_neutral(self):
        rng = random.Random(7)
        a = dq_from_pose(random_pose(rng))
        ident = dq_from_pose(Pose.identity())
        assert pose_close(dq_to_pose(dq_mul(a, ident)), dq_to_pose(a))

    def test_translations_compose(self):
        a = dq_from_pose(Pose(Vec3(1, 0, 0), UnitQuat.identity()))
        b = dq_from_pose(Pose(Vec3(0, 1, 0), UnitQuat.identity()))
        p = dq_to_pose(dq_mul(a, b))
        assert (p.position - Vec3(1, 1, 0)).norm() < 1e-12

    def test_matches_pose_composition_1000_pairs(self):
        rng = random.Random(99)
        for _ in range(1000):
            pa, pb = random_pose(rng), random_pose(rng)
            via_dq = dq_to_pose(dq_mul(dq_from_pose(pa), dq_from_pose(pb)))
            assert pose_close(via_dq, pa.compose(pb))


class TestSclerp:
    def test_endpoints(self):
        rng = random.Random(5)
        a = dq_from_pose(random_pose(rng))
        b = dq_from_pose(random_pose(rng))
        assert pose_close(dq_to_pose(dq_sclerp(a, b, 0.0)), dq_to_pose(a))
        assert pose_close(dq_to_pose(dq_sclerp(a, b, 1.0)), dq_to_pose(b))

    def test_screw_midpoint(self):
        # 90 deg about z plus 1 m along z: the half-way screw is 45 deg and 0.5 m
        a = dq_from_pose(Pose.identity())
        b = dq_from_pose(
            Pose(Vec3(0, 0, 1), UnitQuat.from_axis_angle(Vec3(0, 0, 1), 90))
        )
        mid = dq_to_pose(dq_sclerp(a, b, 0.5))
        expected = Pose(Vec3(0, 0, 0.5), UnitQuat.from_axis_angle(Vec3(0, 0, 1), 45))
        assert pose_close(mid, expected)

    def test_pure_translation_lerp(self):
        a = dq_from_pose(Pose.identity())
        b = dq_from_pose(Pose(Vec3(2, 0, 0), UnitQuat.identity()))
        p = dq_to_pose(dq_sclerp(a, b, 0.25))
        assert (p.position - Vec3(0.5, 0, 0)).norm() < 1e-9

    def test_unit_on_t_grid(self):
        rng = random.Random(13)
        a = dq_from_pose(random_pose(rng))
        b = dq_from_pose(random_pose(rng))
        for i in range(101):
            q = dq_sclerp(a, b, i / 100.0)
            assert abs(q.real.norm() - 1.0) < 1e-9
            assert abs(q.real.dot(q.dual)) < 1e-9

    def test_pure_rotation_matches_slerp(self):
        rng = random.Random(17)
        for _ in range(50):
            qa = random_pose(rng).rotation
            qb = random_pose(rng).rotation
            a = dq_from_pose(Pose(Vec3(), qa))
            b = dq_from_pose(Pose(Vec3(), qb))
            for t in (0.2, 0.5, 0.9):
                got = dq_to_pose(dq_sclerp(a, b, t)).rotation
                want = quat_slerp(qa, qb, t)
                err = min(
                    sum(abs(x - y) for x, y in zip(
                        (got.w, got.x, got.y, got.z), (want.w, want.x, want.y, want.z))),
                    sum(abs(x + y) for x, y in zip(
                        (got.w, got.x, got.y, got.z), (want.w, want.x, want.y, want.z))),
                )
                assert err < 1e-9

    def test_sign_insensitive(self):
        rng = random.Random(23)
        a = dq_from_pose(random_pose(rng))
        b = dq_from_pose(random_pose(rng))
        for i in range(0, 101, 10):
            t = i / 100.0
            assert pose_close(
                dq_to_pose(dq_sclerp(a, b, t)), dq_to_pose(dq_sclerp(a, b.neg(), t))
            )

    def test_extrapolation_rejected(self):
        a = dq_from_pose(Pose.identity())
        with pytest.raises(InvalidInputError):
            dq_sclerp(a, a, 1.5)


def quat_slerp(q1: UnitQuat, q2: UnitQuat, t: float) -> UnitQuat:
    """Independent quaternion slerp oracle."""
    dot = q1.dot(q2)
    if dot < 0.0:
        q2, dot = q2.neg(), -dot
    dot = min(1.0, dot)
    theta0 = math.acos(dot)
    if theta0 < 1e-12:
        return q1
    s1 = math.sin((1 - t) * theta0) / math.sin(theta0)
    s2 = math.sin(t * theta0) / math.sin(theta0)
    return UnitQuat(
        s1 * q1.w + s2 * q2.w,
        s1 * q1.x + s2 * q2.x,
        s1 * q1.y + s2 * q2.y,
        s1 * q1.z + s2 * q2.z,
    ).normalized()


class TestRotAngle:
    def test_same_rotation_zero(self):
        q = UnitQuat.from_axis_angle(Vec3(1, 0, 0), 33)
        assert rot_angle_between(q, q) == 0.0

    def test_ninety_degrees(self):
        q = UnitQuat.from_axis_angle(Vec3(0, 0, 1), 90)
        assert abs(rot_angle_between(UnitQuat.identity(), q) - 90.0) < 1e-9

    def test_double_cover_zero(self):
        q = UnitQuat.from_axis_angle(Vec3(0, 1, 0), 70)
        assert rot_angle_between(q, q.neg()) < 1e-9


def make_state(**positions) -> SceneState:
    objects = {}
    for oid, pos in positions.items():
        pose = Pose(Vec3(*pos), UnitQuat.identity())
        objects[oid] = SceneObject(id=oid, pose=pose, initial_pose=pose,
                                   tags=frozenset({"interactable"}))
    return SceneState(objects=objects)


class TestStateHash:
    def test_equal_states_equal_hashes(self):
        assert state_hash(make_state(a=(1, 2, 3))) == state_hash(make_state(a=(1, 2, 3)))

    def test_big_displacement_changes_hash(self):
        assert state_hash(make_state(a=(0, 0, 0))) != state_hash(make_state(a=(1, 0, 0)))

    def test_below_quantum_displacement_equal(self):
        assert state_hash(make_state(a=(1.0, 0, 0))) == state_hash(make_state(a=(1.000001, 0, 0)))

    def test_insertion_order_irrelevant(self):
        s1 = make_state(a=(1, 0, 0), b=(2, 0, 0))
        s2 = make_state(b=(2, 0, 0), a=(1, 0, 0))
        assert state_hash(s1) == state_hash(s2)

    def test_hands_and_tick_excluded(self):
        s1 = make_state(a=(1, 0, 0))
        s2 = make_state(a=(1, 0, 0))
        s2.tick = 500
        s2.hands[("c1", "right")] = Pose(Vec3(9, 9, 9), UnitQuat.identity())
        assert state_hash(s1) == state_hash(s2)

    def test_held_by_included(self):
        s1 = make_state(a=(1, 0, 0))
        s2 = make_state(a=(1, 0, 0))
        s2.objects["a"].held_by = ("c1", "right")
        assert state_hash(s1) != state_hash(s2)

    def test_poses_hash_sign_normalized(self):
        q = UnitQuat.from_axis_angle(Vec3(0, 1, 0), 50)
        h1 = poses_hash({"a": Pose(Vec3(), q)})
        h2 = poses_hash({"a": Pose(Vec3(), q.neg())})
        assert h1 == h2
