"""Regenerate the AR and VR playthrough scripts for the flow scenario.

The two scripts lower the same plan (quiz answer, Sponza insert, scalpel
pass, Knossos insert) to each device profile, so a run with either must end
at the same state hash.  Outputs land in tests/fixtures/scripts/.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from xrtrain.core import Pose, UnitQuat, Vec3
from xrtrain.runtime import quiz_choice_pose
from xrtrain.scripting import ScriptBuilder, write_script

SPONZA_START = Pose(Vec3(0, 1, 0), UnitQuat.identity())
SPONZA_FINAL = Pose(Vec3(1, 1, 0), UnitQuat.from_axis_angle(Vec3(0, 1, 0), 90))
KNOSSOS_START = Pose(Vec3(-1, 1, 0), UnitQuat.identity())
KNOSSOS_FINAL = Pose(Vec3(-1, 1, 1), UnitQuat.identity())
SCALPEL_START = Pose(Vec3(0.5, 1, 0.5), UnitQuat.identity())
TOOL_REGION_CENTER = Vec3(1, 1, 0)


def build(profile: str) -> ScriptBuilder:
    b = ScriptBuilder(profile=profile, client="c1")
    b.wait(5)
    b.select_quiz(quiz_choice_pose(2, 3))
    b.wait(5)
    b.carry(SPONZA_START, SPONZA_FINAL)
    b.wait(5)
    b.run_tool(SCALPEL_START, TOOL_REGION_CENTER, active_ticks=15)
    b.wait(5)
    b.carry(KNOSSOS_START, KNOSSOS_FINAL)
    b.wait(5)
    return b


def main() -> None:
    out_dir = os.path.join(os.path.dirname(__file__), "..",
                           "tests", "fixtures", "scripts")
    os.makedirs(out_dir, exist_ok=True)
    for profile in ("AR", "VR"):
        path = os.path.join(out_dir, f"flow_{profile.lower()}.jsonl")
        write_script(path, build(profile).events)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
