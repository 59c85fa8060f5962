"""Desk-scale passive bistatic motion sensing pipeline.

Synthesizes framed IQ bursts, passes them through multipath channels with
gesture-driven time-varying Doppler, extracts time-Doppler spectrograms via
the cross ambiguity function (offset-invariant) or a CSI-magnitude baseline,
classifies gestures with a from-scratch residual CNN, and fits the
accuracy-versus-sensing-duration law.
"""

__version__ = "0.1.0"
