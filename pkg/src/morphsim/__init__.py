"""Voxel soft-body simulator and gait search for a shape-changing sheet robot."""

__version__ = "0.1.0"
