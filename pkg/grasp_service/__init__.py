"""Grasping by hanging: hangability detection and hook-gripper grasp planning."""
__version__ = "1.0.0"
