"""Voxel maps, collision checking, RRT and the fixed workcell poses."""
