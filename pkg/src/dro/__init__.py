"""Direct Doppler-aware radar odometry for spinning FMCW radars."""

__version__ = "0.1.0"
