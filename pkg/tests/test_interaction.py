import math

import pytest

from xrtrain.core import Pose, SceneObject, SceneState, UnitQuat, Vec3
from xrtrain.interaction import (
    GrabRejected,
    IkChain,
    InsertTolerance,
    SweepRegion,
    check_insert,
    grab_attach,
    grab_step,
    ik_forward,
    solve_two_bone_ik,
    sweep_accumulate,
)


def scene_with(obj_pos, tags=("interactable",), hand_pose=None) -> SceneState:
    pose = Pose(Vec3(*obj_pos), UnitQuat.identity())
    scene = SceneState(objects={
        "obj": SceneObject(id="obj", pose=pose, initial_pose=pose,
                           tags=frozenset(tags))})
    scene.hands[("c1", "right")] = hand_pose or Pose.identity()
    return scene


class TestGrabAttach:
    def test_offset_is_object_in_hand_frame(self):
        scene = scene_with((1, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj")
        assert (binding.offset.position - Vec3(1, 0, 0)).norm() < 1e-12
        assert scene.objects["obj"].held_by == ("c1", "right")

    def test_second_grab_rejected_with_warning(self):
        scene = scene_with((1, 0, 0))
        grab_attach(scene, ("c1", "right"), "obj")
        scene.hands[("c2", "left")] = Pose.identity()
        snapshot = scene.objects["obj"].pose
        with pytest.raises(GrabRejected) as exc:
            grab_attach(scene, ("c2", "left"), "obj")
        assert exc.value.warn
        assert scene.objects["obj"].pose == snapshot
        assert scene.objects["obj"].held_by == ("c1", "right")

    def test_non_interactable_rejected_silently(self):
        scene = scene_with((1, 0, 0), tags=())
        with pytest.raises(GrabRejected) as exc:
            grab_attach(scene, ("c1", "right"), "obj")
        assert not exc.value.warn


class TestGrabStep:
    def test_parenting_rigid_over_50_ticks(self):
        scene = scene_with((1, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj", mode="parenting")
        start = scene.objects["obj"].pose
        for _ in range(50):
            grab_step(scene, [binding], 0.02)
        end = scene.objects["obj"].pose
        assert (end.position - start.position).norm() < 1e-12

    def test_velocity_clamp(self):
        # gain 20/s on a 1 m error clamps to v_max 10 m/s -> 0.2 m this tick
        scene = scene_with((0, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj")
        scene.hands[("c1", "right")] = Pose(Vec3(1, 0, 0), UnitQuat.identity())
        grab_step(scene, [binding], 0.02)
        moved = scene.objects["obj"].pose.position.norm()
        assert abs(moved - 0.2) < 1e-12

    def test_fixed_point_at_target(self):
        scene = scene_with((1, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj")
        grab_step(scene, [binding], 0.02)
        assert (scene.objects["obj"].pose.position - Vec3(1, 0, 0)).norm() < 1e-12

    def test_converges_within_60_ticks(self):
        scene = scene_with((0, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj")
        scene.hands[("c1", "right")] = Pose(Vec3(1, 0, 0), UnitQuat.identity())
        for _ in range(60):
            grab_step(scene, [binding], 0.02)
        err = (scene.objects["obj"].pose.position - Vec3(1, 0, 0)).norm()
        assert err < 1e-3

    def test_never_overshoots(self):
        scene = scene_with((0, 0, 0))
        binding = grab_attach(scene, ("c1", "right"), "obj")
        scene.hands[("c1", "right")] = Pose(Vec3(0.7, 0, 0), UnitQuat.identity())
        target = Vec3(0.7, 0, 0)
        last = (scene.objects["obj"].pose.position - target).norm()
        for _ in range(100):
            grab_step(scene, [binding], 0.02)
            dist = (scene.objects["obj"].pose.position - target).norm()
            assert dist <= last + 1e-12
            last = dist


class TestCheckInsert:
    def test_exact_match(self):
        p = Pose(Vec3(1, 2, 3), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 30))
        assert check_insert(p, p)

    def test_within_defaults(self):
        target = Pose(Vec3(0, 0, 0), UnitQuat.identity())
        obj = Pose(Vec3(0.04, 0, 0), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 10))
        assert check_insert(obj, target)

    def test_rotation_gate_fails(self):
        target = Pose(Vec3(0, 0, 0), UnitQuat.identity())
        obj = Pose(Vec3(0.04, 0, 0), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 30))
        assert not check_insert(obj, target)

    def test_symmetric_under_rigid_motion(self):
        motion = Pose(Vec3(3, -1, 2), UnitQuat.from_axis_angle(Vec3(1, 1, 0), 40))
        obj = Pose(Vec3(0.03, 0.01, 0), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 8))
        target = Pose(Vec3(0, 0, 0), UnitQuat.identity())
        assert check_insert(obj, target) == check_insert(
            motion.compose(obj), motion.compose(target))


class TestTwoBoneIk:
    def test_full_extension(self):
        chain = solve_two_bone_ik(IkChain(Vec3(), 1, 1), Vec3(2, 0, 0))
        assert abs(chain.elbow_flexion_deg) < 1e-9
        _, end = ik_forward(chain)
        assert (end - Vec3(2, 0, 0)).norm() < 1e-9

    def test_law_of_cosines_right_angle(self):
        chain = solve_two_bone_ik(IkChain(Vec3(), 1, 1), Vec3(1, 1, 0))
        assert abs(chain.elbow_flexion_deg - 90.0) < 1e-6
        _, end = ik_forward(chain)
        assert (end - Vec3(1, 1, 0)).norm() < 1e-6

    def test_unreachable_clamps_along_direction(self):
        chain = solve_two_bone_ik(IkChain(Vec3(), 1, 1), Vec3(5, 0, 0))
        _, end = ik_forward(chain)
        assert (end - Vec3(2, 0, 0)).norm() < 1e-6

    def test_reachable_targets_1000_seeded(self):
        import random
        rng = random.Random(314)
        for _ in range(1000):
            l1, l2 = rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5)
            chain = IkChain(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                 rng.uniform(-1, 1)), l1, l2)
            d = rng.uniform(abs(l1 - l2) + 1e-3, l1 + l2 - 1e-3)
            theta = rng.uniform(0, math.pi)
            phi = rng.uniform(0, 2 * math.pi)
            target = chain.base + Vec3(
                d * math.sin(theta) * math.cos(phi),
                d * math.cos(theta),
                d * math.sin(theta) * math.sin(phi))
            solve_two_bone_ik(chain, target)
            assert 0.0 <= chain.elbow_flexion_deg <= 180.0
            _, end = ik_forward(chain)
            assert (end - target).norm() < 1e-6


class TestSweep:
    REGION = SweepRegion(Vec3(0, 0, 0), 1.0)

    def test_inside_stroke_accumulates(self):
        p = sweep_accumulate(0.0, Vec3(0, 0, 0), Vec3(0.1, 0, 0), self.REGION)
        assert abs(p - 0.1) < 1e-12

    def test_endpoint_outside_ignored(self):
        p = sweep_accumulate(0.0, Vec3(0.95, 0, 0), Vec3(1.2, 0, 0), self.REGION)
        assert p == 0.0

    def test_threshold_crossed_on_fifth_stroke(self):
        progress = 0.0
        crossed_at = None
        for i in range(6):
            progress = sweep_accumulate(
                progress, Vec3(0, 0, 0), Vec3(0.1, 0, 0), self.REGION)
            if crossed_at is None and progress >= 0.5 - 1e-9:
                crossed_at = i + 1
        assert crossed_at == 5
