# CSI acquisition strategies, one per simulation mode
from app.schemas import Mode
from app.strategies.base import Acquisition, BaseStrategy, RoundState
from app.strategies.baseline import BaselineStrategy
from app.strategies.clcp import ClcpStrategy
from app.strategies.crossband import CrossbandStrategy
from app.strategies.oracle import OracleStrategy

STRATEGIES = {
    Mode.BASELINE: BaselineStrategy,
    Mode.CROSSBAND: CrossbandStrategy,
    Mode.CLCP: ClcpStrategy,
    Mode.ORACLE: OracleStrategy,
}

__all__ = [
    "STRATEGIES", "Acquisition", "BaseStrategy", "RoundState",
    "BaselineStrategy", "ClcpStrategy", "CrossbandStrategy", "OracleStrategy",
]
