"""Reducing a 3D mass/dipole expansion to the plane.

Integrating a 3D potential along lines parallel to a preferred axis gives
twice the corresponding planar potential. The defects below measure how
closely the truncated integral at half-length L matches.
"""
import json
from importlib.resources import files

from pointsource.geometry import validate_configuration
from pointsource.real_basis import RealExpansionSpec3
from pointsource.reduction import reduce_dipole_r3, reduce_pm_r3

doc = json.loads(files("pointsource").joinpath("data/example_spec3.json").read_text())
cfg = validate_configuration(doc["sources"]["points"])

for L in (1e2, 1e3, 1e4):
    spec2, rep = reduce_pm_r3(RealExpansionSpec3(cfg, doc["masses"]), L=L)
    print(f"masses   L={L:7.0e}  defect {rep.defect:.2e}  Richardson {rep.richardson:.2e}")

spec2, rep = reduce_dipole_r3(RealExpansionSpec3(cfg, None, doc["dipoles"]))
print(f"dipoles  L={rep.L:7.0e}  defect {rep.defect:.2e}  axial raw {rep.axial_integral:.2e}  "
      f"axial Richardson {rep.axial_richardson:.2e}")
print("projected planar dipoles:")
for d in spec2.dipoles:
    print(f"  ({d[0]: .4f}, {d[1]: .4f})")
