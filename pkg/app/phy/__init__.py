"""PHY-layer evaluation: metrics, MCS table, rate adaptation, capacity and detection."""
