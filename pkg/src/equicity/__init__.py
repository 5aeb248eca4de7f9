"""Participatory spatial-allocation game engine.

Round pipeline: pooled consensus over interests and controls, proportional
fitting to the district programme, voxel massing on sensitivity fields,
multi-criteria evaluation, and gamification badges.
"""

__version__ = "0.1.0"
