"""Proximity groups: links whose users sit close together share one model."""

from typing import Dict, List, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage


def form_groups(positions: Dict[int, Sequence[float]], radius_m: float = 4.0) -> List[List[int]]:
    """Complete-linkage clusters: every pair inside a group is within ``radius_m``.

    Groups come back sorted by their smallest link id; ids inside a group ascend.
    """
    ids = sorted(positions)
    if not ids:
        return []
    if len(ids) == 1:
        return [ids]
    pts = np.array([positions[i] for i in ids], dtype=float)
    labels = fcluster(linkage(pts, method="complete"), t=radius_m, criterion="distance")
    groups: Dict[int, List[int]] = {}
    for link, label in zip(ids, labels):
        groups.setdefault(int(label), []).append(link)
    return sorted(groups.values(), key=lambda g: g[0])
