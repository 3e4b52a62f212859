"""CRB evaluation, beamforming optimization, and MLE validation for
IRS-enabled non-line-of-sight sensing."""

__version__ = "0.1.0"
