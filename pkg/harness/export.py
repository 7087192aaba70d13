"""CSV/JSON writers for result tables and Wigner grids"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from physics.wigner import CONVENTION, PhaseSpaceGrid

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class WignerMetadata(BaseModel):
    """JSON sidecar written next to every Wigner grid"""
    state_label: str
    xi_r: float = Field(..., ge=0)
    xi_phi: float
    fock_cutoff: int
    convention: str = CONVENTION
    points: int
    min_value: float
    max_value: float
    normalization: Optional[float] = None


def _prepare(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_table(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """UTF-8 CSV with a header row and 17 significant digits"""
    path = _prepare(path)
    table.to_csv(path, float_format=FLOAT_FORMAT, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"💾 Wrote {len(table)} rows to {path}")
    return path


def wigner_frame(grid: PhaseSpaceGrid) -> pd.DataFrame:
    """First row is the Re axis, first column the Im axis, top-left cell empty"""
    body = np.empty((grid.im_axis.size + 1, grid.re_axis.size + 1))
    body[0, 0] = np.nan
    body[0, 1:] = grid.re_axis
    body[1:, 0] = grid.im_axis
    body[1:, 1:] = grid.values
    return pd.DataFrame(body)


def write_wigner(grid: PhaseSpaceGrid, path: Union[str, Path], metadata: WignerMetadata) -> Path:
    path = _prepare(path)
    wigner_frame(grid).to_csv(path, float_format=FLOAT_FORMAT, header=False, index=False,
                              na_rep="", encoding="utf-8", lineterminator="\n")
    sidecar = path.with_suffix(".json")
    sidecar.write_text(metadata.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"💾 Wrote {grid.im_axis.size}x{grid.re_axis.size} Wigner grid to {path} (+ {sidecar.name})")
    return path


def read_wigner(path: Union[str, Path]) -> PhaseSpaceGrid:
    raw = pd.read_csv(path, header=None).to_numpy(dtype=float)
    return PhaseSpaceGrid(re_axis=raw[0, 1:], im_axis=raw[1:, 0], values=raw[1:, 1:])


def write_json(payload: Union[BaseModel, Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = _prepare(path)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=float)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"💾 Wrote {path}")
    return path
