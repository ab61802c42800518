"""
Test package for the Dissipative Kicked Top Lab.
"""
