"""Multi-label musical instrument recognition from raw audio waveforms."""

__version__ = "0.1.0"
