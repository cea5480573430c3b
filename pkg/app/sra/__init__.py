"""OFDMA scheduling: RU tree, user pools, divide-and-conquer RU selection."""
