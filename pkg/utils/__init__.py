"""
Utility modules shared by the hypersphere toolkit.
"""
