"""
Publishing skills for writing run artifacts.
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import aiofiles
import numpy as np
from pydantic import BaseModel

from ..models.simulation import MomentTrajectory
from ..utils.logger import log
from config.settings import settings

CSV_FLOAT = "%.17g"


def to_jsonable(payload: Union[BaseModel, Dict[str, Any]]) -> Any:
    """Plain JSON structure; no timestamps, so equal inputs give equal bytes."""
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): to_jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(v) for v in payload]
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    if isinstance(payload, np.generic):
        return payload.item()
    if isinstance(payload, Path):
        return str(payload)
    return payload


class PublishingSkills:
    """Collection of skills for writing JSON reports and trajectory CSVs."""

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    async def save_json(self, payload: Union[BaseModel, Dict[str, Any]], filename: str) -> str:
        """
        Save a model or dict as sorted, indented JSON.

        Args:
            payload: Model or dict to save
            filename: File name inside the output directory

        Returns:
            Path to saved file
        """
        filepath = self.output_dir / filename
        text = json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"
        try:
            async with aiofiles.open(filepath, "w", encoding="utf-8") as f:
                await f.write(text)
            log.info(f"Saved {filepath}")
            return str(filepath)
        except OSError as e:
            log.error(f"Failed to save {filepath}: {e}")
            raise

    @staticmethod
    def trajectory_table(traj: MomentTrajectory, envelope: Optional[np.ndarray] = None) -> str:
        """CSV text: t, zbar_i, q_i_j (upper triangle), then g and envelope when present."""
        size = traj.mean.shape[1]
        iu, ju = np.triu_indices(size)
        header = ["t"] + [f"zbar_{i}" for i in range(size)] + [f"q_{i}_{j}" for i, j in zip(iu, ju)]
        columns = [traj.times[:, None], traj.mean, traj.cov[:, iu, ju]]
        if traj.g is not None:
            header.append("g")
            columns.append(traj.g[:, None])
        if envelope is not None:
            header.append("envelope")
            columns.append(np.asarray(envelope)[:, None])
        table = np.hstack(columns)
        lines = [",".join(header)]
        lines.extend(",".join(CSV_FLOAT % v for v in row) for row in table)
        return "\n".join(lines) + "\n"

    async def save_trajectory(
        self, traj: MomentTrajectory, filename: str = "trajectory.csv", envelope: Optional[np.ndarray] = None
    ) -> str:
        """Write the moment trajectory as plot-ready CSV."""
        filepath = self.output_dir / filename
        text = self.trajectory_table(traj, envelope)
        async with aiofiles.open(filepath, "w", encoding="utf-8") as f:
            await f.write(text)
        log.info(f"Trajectory saved to {filepath} ({traj.times.size} samples)")
        return str(filepath)
