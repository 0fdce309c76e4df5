"""Synthetic RGBD scenes and the detector, forest and mean-shift pipeline."""
