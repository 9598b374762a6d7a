"""
Utility functions for Grasp Service.
"""
