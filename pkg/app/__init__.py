"""CLCP: cross-link channel prediction for 802.11ax uplink OFDMA."""

__version__ = "1.0.0"
