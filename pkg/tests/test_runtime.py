import random

import pytest

from xrtrain.core import InvalidInputError, Pose, UnitQuat, Vec3
from xrtrain.devices import CanonicalEvent, ProtocolError
from xrtrain.dsl import load_program
from xrtrain.harness import run_script
from xrtrain.runtime import (
    add_client,
    drain_outputs,
    engine_handle,
    engine_hash,
    engine_new,
    engine_tick,
    quiz_choice_pose,
)
from xrtrain.scripting import ScriptBuilder

from conftest import (
    FLOW_SCENARIO,
    KNOSSOS_START,
    SPONZA_FINAL,
    SPONZA_START,
    build_flow_script,
)

MINIMAL = '''scenario "SampleApp" {
  asset SponzaInteractable { pose = pose(0,1,0, 0,1,0, 0)  tags = ["interactable"] }
  lesson Lesson0 "Restoration" {
    stage Stage1 "Sponza" {
      action Action0 insert {
        interactable = "SponzaInteractable"
        final        = pose(1, 1, 0, 0,1,0, 90)
        hologram     = "HologramSponzaFinal"
        aidline      = "AidLine_Decision"
      } } } }
'''


class TestEngineNew:
    def test_first_insert_emits_hologram_and_aidline(self):
        state = engine_new(load_program(MINIMAL), seed=1)
        outputs = drain_outputs(state)
        kinds = {(o.kind, o.object_id or o.text) for o in outputs}
        assert ("HologramShown", "HologramSponzaFinal") in kinds
        assert ("AidlineShown", "AidLine_Decision") in kinds

    def test_same_seed_same_hash(self):
        program = load_program(MINIMAL)
        assert engine_hash(engine_new(program, 7)) == engine_hash(engine_new(program, 7))

    def test_quiz_first_exposes_payload_not_hologram(self, flow_program):
        state = engine_new(flow_program, seed=1)
        outputs = drain_outputs(state)
        assert not any(o.kind == "HologramShown" for o in outputs)
        payload = state.quiz_payload()
        assert payload["question"] == "Where is Sponza located?"
        assert payload["choices"] == ["France", "Italy", "Croatia"]

    def test_empty_program_rejected(self):
        program = load_program(MINIMAL)
        program.actions = []
        with pytest.raises(InvalidInputError):
            engine_new(program, 0)


def fresh(flow_program, client="c1"):
    state = engine_new(flow_program, seed=1)
    add_client(state, client)
    drain_outputs(state)
    return state


class TestEngineHandle:
    def test_unknown_client_rejected(self, flow_program):
        state = fresh(flow_program)
        with pytest.raises(ProtocolError):
            engine_handle(state, CanonicalEvent("QuizSelect", "ghost", 0, choice=2))

    def test_correct_quiz_answer_completes(self, flow_program):
        state = fresh(flow_program)
        outputs = engine_handle(
            state, CanonicalEvent("QuizSelect", "c1", 0, choice=2))
        kinds = [o.kind for o in outputs]
        assert "QuizFeedback" in kinds and "ActionCompleted" in kinds
        feedback = next(o for o in outputs if o.kind == "QuizFeedback")
        assert feedback.correct is True
        assert state.statuses[0] == "completed"

    def test_wrong_quiz_answer_leaves_quiz_active(self, flow_program):
        state = fresh(flow_program)
        outputs = engine_handle(
            state, CanonicalEvent("QuizSelect", "c1", 0, choice=0))
        feedback = next(o for o in outputs if o.kind == "QuizFeedback")
        assert feedback.correct is False
        assert state.statuses[0] == "active"
        assert state.current_action == 0

    def test_grab_of_future_object_warns_without_state_change(self, flow_program):
        state = fresh(flow_program)
        before = engine_hash(state)
        state.scene.hands[("c1", "right")] = Pose(KNOSSOS_START.position,
                                                  UnitQuat.identity())
        outputs = engine_handle(state, CanonicalEvent(
            "GrabStart", "c1", 0, object_id="KnossosPart", hand="right"))
        assert any(o.kind == "Notification" and o.level == "warning"
                   for o in outputs)
        assert engine_hash(state) == before

    def test_storyteller_grab_starts_narration(self, flow_program):
        state = fresh(flow_program)
        state.scene.hands[("c1", "right")] = Pose(Vec3(-0.5, 1, 0.5),
                                                  UnitQuat.identity())
        outputs = engine_handle(state, CanonicalEvent(
            "GrabStart", "c1", 0, object_id="AsinouChurch", hand="right"))
        assert any(o.kind == "NarrationStarted" and o.object_id == "AsinouChurch"
                   for o in outputs)
        # lines fall due after their delays (0.2 s -> tick 10, 0.6 s -> tick 30)
        lines = [o for o in engine_tick(state, 40) if o.kind == "NarrationLine"]
        assert [o.tick for o in lines] == [10, 30]
        assert lines[1].text == "It stands in Cyprus."


def release_sponza_at(state, pose: Pose):
    """Grab Sponza, teleport the hand so the object servos to `pose`, release."""
    state.scene.hands[("c1", "right")] = Pose(SPONZA_START.position,
                                              UnitQuat.identity())
    engine_handle(state, CanonicalEvent(
        "GrabStart", "c1", 0, object_id="SponzaInteractable", hand="right"))
    state.scene.hands[("c1", "right")] = pose
    engine_tick(state, 100)
    return engine_handle(state, CanonicalEvent("Release", "c1", 0, hand="right"))


class TestInsertAction:
    def test_wrong_rotation_release_tints_red(self, flow_program):
        state = fresh(flow_program)
        engine_handle(state, CanonicalEvent("QuizSelect", "c1", 0, choice=2))
        bad = Pose(SPONZA_FINAL.position,
                   UnitQuat.from_axis_angle(Vec3(0, 1, 0), 60))  # 30 deg off
        outputs = release_sponza_at(state, bad)
        kinds = [o.kind for o in outputs]
        assert "TintApplied" in kinds
        tint = next(o for o in outputs if o.kind == "TintApplied")
        assert tint.color == "red"
        assert any(o.kind == "Notification" and o.level == "error" for o in outputs)
        assert "ActionCompleted" not in kinds
        assert state.current_action == 1

    def test_tint_expires_after_duration(self, flow_program):
        state = fresh(flow_program)
        engine_handle(state, CanonicalEvent("QuizSelect", "c1", 0, choice=2))
        bad = Pose(SPONZA_FINAL.position,
                   UnitQuat.from_axis_angle(Vec3(0, 1, 0), 60))
        release_sponza_at(state, bad)
        assert state.scene.objects["SponzaInteractable"].tint is not None
        engine_tick(state, 49)
        assert state.scene.objects["SponzaInteractable"].tint is not None
        engine_tick(state, 1)
        assert state.scene.objects["SponzaInteractable"].tint is None

    def test_correct_release_snaps_and_completes(self, flow_program):
        state = fresh(flow_program)
        engine_handle(state, CanonicalEvent("QuizSelect", "c1", 0, choice=2))
        outputs = release_sponza_at(state, SPONZA_FINAL)
        assert any(o.kind == "ActionCompleted" for o in outputs)
        obj = state.scene.objects["SponzaInteractable"]
        assert (obj.pose.position - SPONZA_FINAL.position).norm() < 1e-12

    def test_far_release_no_tint(self, flow_program):
        state = fresh(flow_program)
        engine_handle(state, CanonicalEvent("QuizSelect", "c1", 0, choice=2))
        outputs = release_sponza_at(state, Pose(Vec3(3, 1, 3), UnitQuat.identity()))
        assert not any(o.kind == "TintApplied" for o in outputs)


class TestTick:
    def test_quiescence(self, flow_program):
        state = fresh(flow_program)
        before = engine_hash(state)
        engine_tick(state, 1000)
        assert engine_hash(state) == before

    def test_tick_count_validated(self, flow_program):
        state = fresh(flow_program)
        with pytest.raises(InvalidInputError):
            engine_tick(state, 0)


class TestFullPlaythrough:
    def test_ar_playthrough_completes(self, flow_program):
        script = build_flow_script("AR")
        result = run_script(flow_program, script.events, {"c1": "AR"})
        assert result.completed
        paths = [o.path for o in result.outputs if o.kind == "ActionCompleted"]
        assert paths == ["Lesson0/Stage0/Action0", "Lesson0/Stage1/Action0",
                        "Lesson0/Stage1/Action1", "Lesson0/Stage2/Action0"]
        assert any(o.kind == "ScenarioCompleted" for o in result.outputs)

    def test_vr_playthrough_completes(self, flow_program):
        script = build_flow_script("VR")
        result = run_script(flow_program, script.events, {"c1": "VR"})
        assert result.completed

    def test_cross_reality_equivalence(self, flow_program):
        ar = run_script(flow_program, build_flow_script("AR").events, {"c1": "AR"})
        vr = run_script(flow_program, build_flow_script("VR").events, {"c1": "VR"})
        assert ar.completed and vr.completed
        assert engine_hash(ar.state) == engine_hash(vr.state)

    def test_determinism_identical_output_sequences(self, flow_program):
        runs = [run_script(flow_program, build_flow_script("AR").events,
                           {"c1": "AR"}) for _ in range(2)]
        assert [o for o in runs[0].outputs] == [o for o in runs[1].outputs]
        assert engine_hash(runs[0].state) == engine_hash(runs[1].state)


class TestOrderEnforcement:
    def test_random_sequences_keep_order(self, flow_program):
        rng = random.Random(777)
        hands = ["right", "left"]
        object_ids = list(flow_program.assets) + ["quiz:0", "quiz:2", "bogus"]
        for _ in range(300):
            state = engine_new(flow_program, seed=1)
            add_client(state, "c1")
            statuses_seen = [list(state.statuses)]
            for _ in range(12):
                kind = rng.choice(["GrabStart", "Release", "ToolActivate",
                                   "QuizSelect", "HandMoved", "Activate"])
                ev = CanonicalEvent(
                    kind, "c1", state.scene.tick,
                    object_id=rng.choice(object_ids),
                    hand=rng.choice(hands),
                    choice=rng.randrange(4),
                    pose=Pose(Vec3(rng.uniform(-2, 2), rng.uniform(0, 2),
                                   rng.uniform(-2, 2)), UnitQuat.identity()))
                engine_handle(state, ev)
                if rng.random() < 0.4:
                    engine_tick(state, rng.randrange(1, 10))
                statuses_seen.append(list(state.statuses))
            for statuses in statuses_seen:
                completed = [i for i, s in enumerate(statuses) if s == "completed"]
                assert completed == list(range(len(completed)))
