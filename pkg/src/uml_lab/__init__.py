"""Desk-scale laboratory for unpaired multimodal learning.

Linear-Gaussian estimation theory, shared-weight training and the
post-hoc analysis metrics, all in float64 numpy.
"""

__version__ = "0.1.0"
