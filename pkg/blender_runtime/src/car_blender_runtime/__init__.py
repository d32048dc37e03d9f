"""Blender-side runtime for emitted room-scene scripts.

Importable only inside Blender's embedded interpreter (or against a test
double of ``bpy``). Units and frames match the scene IR: meters, Z up, yaw
counter-clockwise about Z, object origin at the footprint center on the
bottom face.
"""

__version__ = "0.1.0"
