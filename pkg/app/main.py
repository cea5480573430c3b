"""
CLCP Backend
FastAPI service the access point forwards observed CSI to for path
estimation, cross-link prediction and uplink scheduling.
"""

import os
from typing import Dict, Optional

import numpy as np
import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.channel.csi import Csi, FrequencyGrid, PathSet
from app.errors import DataError
from app.estimator import estimate_paths, residual_power
from app.model.network import ClcpModel
from app.model.serialization import load_model_dir
from app.phy.metrics import evm
from app.phy.rate import select_mcs
from app.schemas import (
    CsiPayload, EstimateRequest, EstimateResponse,
    EvmRequest, EvmResponse,
    PathRow, PredictRequest, PredictResponse,
    Schedule, ScheduleRequest,
)
from app.sra.pools import UserDemand
from app.sra.ru_tree import build_ru_tree
from app.sra.scheduler import schedule_uplink
from app.utils.log import get_logger

# Load environment variables
load_dotenv()

log = get_logger("API")

# Group models load on first use
_models: Optional[Dict[int, ClcpModel]] = None

app = FastAPI(
    title="CLCP Backend",
    description="Cross-link channel prediction and uplink OFDMA scheduling for 802.11ax",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def get_models() -> Dict[int, ClcpModel]:
    global _models
    if _models is None:
        directory = os.getenv("CLCP_MODEL_DIR")
        if directory and os.path.isdir(directory):
            _models = load_model_dir(directory)
            log.info(f"loaded {len(_models)} group model(s) from {directory}")
        else:
            log.warning(f"CLCP_MODEL_DIR={directory!r} is not a directory - using fallback (no models)")
            _models = {}
    return _models


def reset_models() -> None:
    """Forget loaded models; the next request re-reads CLCP_MODEL_DIR."""
    global _models
    _models = None


# ============ PAYLOAD CONVERSION ============

def csi_from_payload(payload: CsiPayload) -> Csi:
    values = np.asarray(payload.real, dtype=float) + 1j * np.asarray(payload.imag, dtype=float)
    if values.ndim != 2:
        raise DataError("CSI real/imag must be (antennas, subcarriers) matrices of equal shape")
    try:
        grid = FrequencyGrid.for_bandwidth(payload.bandwidth_mhz, values.shape[0], payload.center_freq_hz)
    except ValueError as e:
        raise DataError(str(e)) from e
    if values.shape[1] != grid.subcarriers:
        raise DataError(f"{values.shape[1]} subcarriers given, {payload.bandwidth_mhz} MHz has {grid.subcarriers}")
    return Csi(values, grid.wavelengths, grid.antenna_spacing, observed_mask=payload.observed_mask,
               timestamp_us=payload.timestamp_us)


def payload_from_csi(csi: Csi, bandwidth_mhz: int, center_freq_hz: float) -> CsiPayload:
    return CsiPayload(real=csi.values.real.tolist(), imag=csi.values.imag.tolist(),
                      bandwidth_mhz=bandwidth_mhz, center_freq_hz=center_freq_hz,
                      observed_mask=csi.observed_mask.tolist(), timestamp_us=csi.timestamp_us)


def _rows(ps: PathSet):
    return [PathRow(theta=p.theta, d=p.d, a=p.a, phi=p.phi) for p in ps]


def _failure(e: Exception) -> HTTPException:
    if isinstance(e, ValueError):
        log.warning(f"rejected request: {e}")
        return HTTPException(status_code=422, detail=str(e))
    log.error(f"{type(e).__name__}: {e}")
    return HTTPException(status_code=500, detail=str(e))


@app.get("/")
async def root():
    return {"status": "ok", "message": "CLCP backend is running"}


@app.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "version": __version__,
        "groups": sorted(get_models()),
    }


# ============ PATH ESTIMATION ============

@app.post("/estimate-paths", response_model=EstimateResponse)
def estimate(request: EstimateRequest):
    try:
        csi = csi_from_payload(request.csi)
        ps = estimate_paths(csi, request.estimator)
        return EstimateResponse(paths=_rows(ps), residual_power=residual_power(csi, ps))
    except HTTPException:
        raise
    except Exception as e:
        raise _failure(e) from e


# ============ CROSS-LINK PREDICTION ============

@app.post("/predict", response_model=PredictResponse)
def predict(request: PredictRequest):
    try:
        model = get_models().get(request.group_id)
        if model is None:
            raise HTTPException(status_code=404, detail=f"No model for group {request.group_id}")
        unknown = [l for l in list(request.observed) + request.targets if l not in model.link_ids]
        if unknown:
            raise DataError(f"links {unknown} are not in group {request.group_id}")
        observed = {link: PathSet([(r.theta, r.d, r.a, r.phi) for r in rows], model.cfg.max_paths)
                    for link, rows in request.observed.items()}
        preds = model.predict(observed, request.targets, strict=request.strict)
        bw = model.grid.bandwidth_mhz
        center = float(model.grid.frequencies[model.grid.subcarriers // 2])
        return PredictResponse(group_id=request.group_id,
                               predictions={link: payload_from_csi(csi, bw, center) for link, csi in preds.items()})
    except HTTPException:
        raise
    except Exception as e:
        raise _failure(e) from e


# ============ SCHEDULING ============

@app.post("/schedule", response_model=Schedule)
def schedule(request: ScheduleRequest):
    try:
        if not request.users:
            raise DataError("schedule needs at least one user")
        wrong = [u.id for u in request.users if u.csi.bandwidth_mhz != request.bandwidth_mhz]
        if wrong:
            raise DataError(f"users {wrong} report CSI for another bandwidth")
        tree = build_ru_tree(request.bandwidth_mhz)
        noise = 10 ** (-request.snr_db / 10)
        usable = np.nonzero(tree.usable_mask())[0]
        csis = {u.id: csi_from_payload(u.csi) for u in request.users}
        demands = [UserDemand(u.id, u.bsr_bytes, select_mcs(csis[u.id], noise, columns=usable))
                   for u in request.users]
        return schedule_uplink(demands, csis, tree, n_t=request.ap_antennas, n_r=request.user_antennas,
                               noise_power=noise, t_min_s=request.t_min_ms * 1e-3)
    except HTTPException:
        raise
    except Exception as e:
        raise _failure(e) from e


# ============ EVM ============

@app.post("/evm", response_model=EvmResponse)
def evm_endpoint(request: EvmRequest):
    try:
        return EvmResponse(evm_db=evm(csi_from_payload(request.pred), csi_from_payload(request.gt)))
    except HTTPException:
        raise
    except Exception as e:
        raise _failure(e) from e


if __name__ == "__main__":
    uvicorn.run(app, host=os.getenv("HOST", "0.0.0.0"), port=int(os.getenv("PORT", "8000")))
