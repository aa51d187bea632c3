"""
Configuration module for the hypersphere embedding toolkit.
"""
