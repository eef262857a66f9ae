"""
Channel Steering - steerability of quantum channel extensions

A numerical toolkit for channel extensions, instruments and assemblages,
with semidefinite certificates of (un)steerability and steering quantifiers.
"""

__version__ = "0.1.0"
