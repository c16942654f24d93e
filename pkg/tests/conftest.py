import pytest

from xrtrain.core import Pose, UnitQuat, Vec3
from xrtrain.dsl import load_program
from xrtrain.runtime import quiz_choice_pose
from xrtrain.scripting import ScriptBuilder

FLOW_SCENARIO = '''# Restoration playthrough: quiz, Sponza insert, tool pass, Knossos insert.
scenario "CulturalHeritage" {
  asset SponzaInteractable {
    pose = pose(0, 1, 0, 0,1,0, 0)
    tags = ["interactable"]
  }
  asset KnossosPart {
    pose = pose(-1, 1, 0, 0,1,0, 0)
    tags = ["interactable"]
  }
  asset Scalpel {
    pose = pose(0.5, 1, 0.5, 0,1,0, 0)
    tags = ["interactable", "tool"]
  }
  asset AsinouChurch {
    pose = pose(-0.5, 1, 0.5, 0,1,0, 0)
    tags = ["interactable", "storyteller_trigger"]
    narration = [[0.2, "This is the church of Asinou."], [0.6, "It stands in Cyprus."]]
  }
  lesson Lesson0 "Restoration" {
    stage Stage0 "Quiz" {
      action Action0 quiz {
        question = "Where is Sponza located?"
        choices = ["France", "Italy", "Croatia"]
        correct = 2
      }
    }
    stage Stage1 "Sponza" {
      action Action0 insert {
        interactable = "SponzaInteractable"
        final = pose(1, 1, 0, 0,1,0, 90)
        hologram = "HologramSponzaFinal"
        aidline = "AidLine_Decision"
      }
      action Action1 tool {
        tool = "Scalpel"
        region = [1, 1, 0, 0.5]
        required_active_s = 0.2
      }
    }
    stage Stage2 "Knossos" {
      action Action0 insert {
        interactable = "KnossosPart"
        final = pose(-1, 1, 1, 0,1,0, 0)
        hologram = "HologramKnossosFinal"
      }
    }
  }
}
'''

SPONZA_START = Pose(Vec3(0, 1, 0), UnitQuat.identity())
SPONZA_FINAL = Pose(Vec3(1, 1, 0), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 90))
KNOSSOS_START = Pose(Vec3(-1, 1, 0), UnitQuat.identity())
KNOSSOS_FINAL = Pose(Vec3(-1, 1, 1), UnitQuat.identity())
SCALPEL_START = Pose(Vec3(0.5, 1, 0.5), UnitQuat.identity())
TOOL_REGION_CENTER = Vec3(1, 1, 0)


def build_flow_script(profile: str, client: str = "c1") -> ScriptBuilder:
    """The full playthrough, lowered for one device profile."""
    b = ScriptBuilder(profile=profile, client=client)
    b.wait(5)
    b.select_quiz(quiz_choice_pose(2, 3))
    b.wait(5)
    b.carry(Pose(SPONZA_START.position, UnitQuat.identity()), SPONZA_FINAL)
    b.wait(5)
    b.run_tool(SCALPEL_START, TOOL_REGION_CENTER, active_ticks=15)
    b.wait(5)
    b.carry(Pose(KNOSSOS_START.position, UnitQuat.identity()), KNOSSOS_FINAL)
    b.wait(5)
    return b


@pytest.fixture
def flow_program():
    return load_program(FLOW_SCENARIO)
