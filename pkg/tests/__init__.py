"""
Test modules for the hypersphere toolkit.
"""
