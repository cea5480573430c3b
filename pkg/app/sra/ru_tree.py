"""
802.11ax resource-unit hierarchy.

Leaves are the 26-tone RUs at their standard tone positions; every larger RU
is the union of its leaves. Levels are ranked by RU size, level 0 being the
whole channel, so the 26-tone leaves sit at the deepest level L. Center
26-tone RUs ("extra" nodes) belong to level L and are merged together with
the two halves of their parent.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from cachetools import cached

from app.channel.csi import FFT_SIZE
from app.phy.mcs import load_mcs_table, phy_rate_bps
from app.schemas import RuRef

DATA_TONES = {26: 24, 52: 48, 106: 102, 242: 234, 484: 468, 996: 980, 1992: 1960}

# starts of the negative-half 26-tone RUs; the positive half mirrors them
_NEG_STARTS = {
    20: (-121, -95, -68, -42),
    40: (-243, -217, -189, -163, -136, -109, -83, -55, -29),
    80: (-499, -473, -445, -419, -392, -365, -339, -311, -285,
         -257, -231, -203, -177, -150, -123, -97, -69, -43),
}
_CENTER_26 = np.concatenate([np.arange(-16, -3), np.arange(4, 17)])


@dataclass
class RuNode:
    node_id: str
    level: int
    index: int
    tones: int
    tone_index: np.ndarray
    extra: bool = False
    children: Tuple[str, ...] = ()
    parent: Optional[str] = None

    @property
    def span(self) -> Tuple[int, int]:
        return int(self.tone_index.min()), int(self.tone_index.max())

    @property
    def data_tones(self) -> int:
        return DATA_TONES[self.tones]


@dataclass
class RuTree:
    bandwidth_mhz: int
    nodes: Dict[str, RuNode]
    root: str
    levels: List[List[str]] = field(default_factory=list)

    @property
    def fft_size(self) -> int:
        return FFT_SIZE[self.bandwidth_mhz]

    @property
    def depth(self) -> int:
        """Index L of the deepest (26-tone) level."""
        return len(self.levels) - 1

    @property
    def leaves(self) -> List[str]:
        return [n for n in self._walk(self.root) if not self.nodes[n].children]

    def node(self, node_id: str) -> RuNode:
        return self.nodes[node_id]

    def columns(self, node_id: str) -> np.ndarray:
        """CSI column indices of the node's tones."""
        return self.nodes[node_id].tone_index + self.fft_size // 2

    def level_sizes(self) -> List[int]:
        return [self.nodes[ids[0]].tones for ids in self.levels]

    def ref(self, node_id: str) -> RuRef:
        n = self.nodes[node_id]
        return RuRef(node_id=n.node_id, level=n.level, index=n.index, tones=n.tones,
                     extra=n.extra, span=n.span)

    def usable_mask(self) -> np.ndarray:
        mask = np.zeros(self.fft_size, dtype=bool)
        for leaf in self.leaves:
            mask[self.columns(leaf)] = True
        return mask

    def _walk(self, node_id: str) -> Iterator[str]:
        yield node_id
        for child in self.nodes[node_id].children:
            yield from self._walk(child)

    def covers(self, node_id: Optional[str] = None) -> Iterator[List[str]]:
        """Every way of partitioning a node into RUs."""
        node_id = node_id or self.root
        yield [node_id]
        children = self.nodes[node_id].children
        if not children:
            return

        def product(i: int) -> Iterator[List[str]]:
            if i == len(children):
                yield []
                return
            for head in self.covers(children[i]):
                for tail in product(i + 1):
                    yield head + tail

        yield from product(0)


def _leaf_tones(bandwidth_mhz: int) -> List[np.ndarray]:
    if bandwidth_mhz == 160:
        half = _leaf_tones(80)
        return [t - 512 for t in half] + [t + 512 for t in half]
    neg = [np.arange(s, s + 26) for s in _NEG_STARTS[bandwidth_mhz]]
    pos = [-t[::-1] for t in reversed(neg)]
    if bandwidth_mhz == 40:
        return neg + pos
    # 20 MHz: 4 + center + 4; 80 MHz: 18 + center + 18
    return neg + [_CENTER_26.copy()] + pos


def _group_20(leaves: Sequence[int]) -> Tuple:
    """Shape of one 242-tone RU over nine consecutive leaf positions."""
    a, b = ("52", leaves[0:2]), ("52", leaves[2:4])
    c, d = ("52", leaves[5:7]), ("52", leaves[7:9])
    return ("242", [("106", [a, b]), ("c26", leaves[4]), ("106", [c, d])])


def _shape(bandwidth_mhz: int, leaves: Sequence[int]) -> Tuple:
    if bandwidth_mhz == 20:
        return _group_20(leaves)
    if bandwidth_mhz == 40:
        return ("484", [_group_20(leaves[0:9]), _group_20(leaves[9:18])])
    if bandwidth_mhz == 80:
        return ("996", [_shape(40, leaves[0:18]), ("c26", leaves[18]), _shape(40, leaves[19:37])])
    return ("1992", [_shape(80, leaves[0:37]), _shape(80, leaves[37:74])])


@cached(cache={})
def build_ru_tree(bandwidth_mhz: int) -> RuTree:
    if bandwidth_mhz not in _NEG_STARTS and bandwidth_mhz != 160:
        raise ValueError(f"Unsupported bandwidth: {bandwidth_mhz} MHz")
    tones = _leaf_tones(bandwidth_mhz)
    nodes: Dict[str, RuNode] = {}
    sizes = sorted(_sizes_below(bandwidth_mhz), reverse=True)
    level_of = {s: i for i, s in enumerate(sizes)}
    counters = {s: 0 for s in sizes}
    counters["e"] = 0

    def add(size: int, tone_index: np.ndarray, extra: bool, children: Tuple[str, ...]) -> str:
        if extra:
            node_id = f"RU({level_of[26]},e{counters['e']})"
            index = counters["e"]
            counters["e"] += 1
        else:
            node_id = f"RU({level_of[size]},{counters[size]})"
            index = counters[size]
            counters[size] += 1
        nodes[node_id] = RuNode(node_id, level_of[size], index, size, tone_index, extra, children)
        for child in children:
            nodes[child].parent = node_id
        return node_id

    def build(spec) -> str:
        kind, body = spec
        if kind == "c26":
            return add(26, tones[body], True, ())
        if kind == "52":
            kids = tuple(add(26, tones[i], False, ()) for i in body)
        else:
            kids = tuple(build(s) for s in body)
        tone_index = np.sort(np.concatenate([nodes[k].tone_index for k in kids]))
        return add(int(kind), tone_index, False, kids)

    root = build(_shape(bandwidth_mhz, list(range(len(tones)))))
    levels: List[List[str]] = [[] for _ in sizes]
    tree = RuTree(bandwidth_mhz, nodes, root, levels)
    for node_id in tree._walk(root):
        levels[nodes[node_id].level].append(node_id)
    return tree


def _sizes_below(bandwidth_mhz: int) -> List[int]:
    top = {20: 242, 40: 484, 80: 996, 160: 1992}[bandwidth_mhz]
    return [s for s in (26, 52, 106, 242, 484, 996, 1992) if s <= top]


def phy_rate_table(tree: RuTree) -> np.ndarray:
    """PHY rate (bit/s) per (level, MCS) for one spatial stream."""
    table = load_mcs_table()
    return np.array([[phy_rate_bps(DATA_TONES[size], e.index) for e in table]
                     for size in tree.level_sizes()])
