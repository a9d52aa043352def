"""
Centralized configuration for the WLAN fairness workbench.

Loads settings from environment variables / .env file and exposes them
as module-level constants so every other module can simply
``from src.config import …``.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# ---------------------------------------------------------------------------
# Load .env from project root
# ---------------------------------------------------------------------------
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
load_dotenv(_PROJECT_ROOT / ".env")


def parse_int_list(raw: str) -> list[int]:
    """Parse ``"1,2,3"`` or a ``"start:stop:step"`` range (stop inclusive)."""
    raw = raw.strip()
    if ":" in raw:
        start, stop, step = (int(x) for x in raw.split(":"))
        return list(range(start, stop + 1, step))
    return [int(x) for x in raw.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# Model defaults (simulation parameters table: TCP window size 42)
# ---------------------------------------------------------------------------
DEFAULT_WINDOW: int = int(os.getenv("DEFAULT_WINDOW", "42"))
DEFAULT_RTT: float = float(os.getenv("DEFAULT_RTT", "0.1"))

# ---------------------------------------------------------------------------
# Simulator defaults
# ---------------------------------------------------------------------------
SIM_DURATION: float = float(os.getenv("SIM_DURATION", "100"))
SIM_WARMUP: float = float(os.getenv("SIM_WARMUP", "0"))
WIRELESS_RATE_BPS: float = float(os.getenv("WIRELESS_RATE_BPS", "11e6"))
WIRED_DELAY_S: float = float(os.getenv("WIRED_DELAY_S", "0.001"))
DATA_FRAME_BYTES: int = int(os.getenv("DATA_FRAME_BYTES", "1040"))
ACK_FRAME_BYTES: int = int(os.getenv("ACK_FRAME_BYTES", "40"))
MIN_RTO_S: float = float(os.getenv("MIN_RTO_S", "1.0"))

# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------
# Repetitions per simulated buffer size; the figures never state a count.
DEFAULT_SEEDS: list[int] = parse_int_list(os.getenv("DEFAULT_SEEDS", "1,2,3,4,5"))
DEFAULT_BUFFERS: list[int] = parse_int_list(os.getenv("DEFAULT_BUFFERS", "5:200:5"))
DEFAULT_VARIANTS: list[str] = [
    v.strip()
    for v in os.getenv("DEFAULT_VARIANTS", "new_cubic,old_quartic,simulation").split(",")
    if v.strip()
]
SWEEP_WORKERS: int = int(os.getenv("SWEEP_WORKERS", "1"))

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
