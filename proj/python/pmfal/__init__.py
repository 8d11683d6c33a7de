"""Planar 3-RRR mechanism with flexible actuation links.

Thin Python layer over the C++ core: kinematics, assumed-mode dynamics,
mode-shape identification, the neural pose observer and the closed-loop
control harness.
"""

from ._pmfal import *  # noqa: F401,F403
from ._pmfal import __doc__ as _core_doc  # noqa: F401
