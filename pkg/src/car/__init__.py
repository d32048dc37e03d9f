"""Staged top-down-image-to-Blender-scene pipeline and its benchmark tools."""

__version__ = "0.1.0"
