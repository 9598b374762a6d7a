"""
Routes package for Grasp Service.
All API routes are organized here by domain.
"""
