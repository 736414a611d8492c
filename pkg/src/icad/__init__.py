"""Information-centrality sentinel selection and volume-anomaly detection."""

__version__ = "0.1.0"
