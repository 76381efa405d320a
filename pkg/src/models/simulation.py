"""
Data models for fault signals and simulated moment trajectories.
"""
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .matrix import Tensor


class FaultPiece(BaseModel):
    """
    One smooth piece on [start, end).

    constant: f = offset
    sine:     f = amplitude * sin(omega (t - start)) + offset
    cosine:   f = amplitude * cos(omega (t - start)) + offset

    amplitude / omega / offset may be scalars or one value per fault channel.
    """
    model_config = ConfigDict(frozen=True)

    start: float = Field(..., allow_inf_nan=False)
    end: float = Field(..., allow_inf_nan=False)
    kind: Literal["constant", "sine", "cosine"]
    amplitude: List[float] = Field(default_factory=lambda: [0.0])
    omega: List[float] = Field(default_factory=lambda: [1.0])
    offset: List[float] = Field(default_factory=lambda: [0.0])

    @field_validator("amplitude", "omega", "offset", mode="before")
    @classmethod
    def _listify(cls, value: Union[float, List[float]]) -> List[float]:
        return [value] if np.isscalar(value) else list(value)

    @field_validator("amplitude", "omega", "offset")
    @classmethod
    def _finite(cls, value: List[float]) -> List[float]:
        if not all(np.isfinite(v) for v in value):
            raise ValueError("fault parameters must be finite")
        return value

    @model_validator(mode="after")
    def _check_interval(self) -> "FaultPiece":
        if self.end <= self.start:
            raise ValueError(f"empty fault interval [{self.start}, {self.end})")
        return self

    def channels(self, n_f: int) -> np.ndarray:
        """(3, n_f) array of amplitude, omega, offset broadcast to n_f channels."""
        return np.vstack([
            np.broadcast_to(np.asarray(p, dtype=float), (n_f,))
            for p in (self.amplitude, self.omega, self.offset)
        ])

    def value(self, t: np.ndarray, n_f: int) -> np.ndarray:
        """f(t) for t inside the piece; shape (len(t), n_f)."""
        a, w, b = self.channels(n_f)
        theta = np.multiply.outer(np.asarray(t, dtype=float) - self.start, w)
        if self.kind == "sine":
            return a * np.sin(theta) + b
        if self.kind == "cosine":
            return a * np.cos(theta) + b
        return np.broadcast_to(b, theta.shape).copy()

    def rate(self, t: np.ndarray, n_f: int) -> np.ndarray:
        """df/dt inside the piece."""
        a, w, _ = self.channels(n_f)
        theta = np.multiply.outer(np.asarray(t, dtype=float) - self.start, w)
        if self.kind == "sine":
            return a * w * np.cos(theta)
        if self.kind == "cosine":
            return -a * w * np.sin(theta)
        return np.zeros(theta.shape)


class FaultSignal(BaseModel):
    """Piecewise-smooth fault partitioning [0, horizon]."""
    model_config = ConfigDict(frozen=True)

    pieces: List[FaultPiece] = Field(..., min_length=1)
    n_f: int = Field(1, gt=0)

    @model_validator(mode="after")
    def _check_partition(self) -> "FaultSignal":
        if self.pieces[0].start != 0.0:
            raise ValueError("fault pieces must start at t = 0")
        for prev, nxt in zip(self.pieces, self.pieces[1:]):
            if not np.isclose(prev.end, nxt.start, rtol=0.0, atol=1e-12):
                raise ValueError(f"gap or overlap between pieces at t = {prev.end}")
        for piece in self.pieces:
            for param in (piece.amplitude, piece.omega, piece.offset):
                if len(param) not in (1, self.n_f):
                    raise ValueError(f"piece parameters need 1 or {self.n_f} entries")
        return self

    @classmethod
    def zero(cls, horizon: float, n_f: int = 1) -> "FaultSignal":
        return cls(pieces=[FaultPiece(start=0.0, end=horizon, kind="constant", offset=0.0)], n_f=n_f)

    @property
    def end(self) -> float:
        return self.pieces[-1].end

    @property
    def boundaries(self) -> List[float]:
        """Interior piece boundaries."""
        return [p.start for p in self.pieces[1:]]

    def piece_at(self, t: float) -> FaultPiece:
        for piece in self.pieces:
            if t < piece.end:
                return piece
        return self.pieces[-1]

    def value(self, t: float) -> np.ndarray:
        """Right-continuous f(t)."""
        return self.piece_at(t).value(np.array([t]), self.n_f)[0]

    def rate(self, t: float) -> np.ndarray:
        return self.piece_at(t).rate(np.array([t]), self.n_f)[0]

    def jump(self, index: int) -> np.ndarray:
        """f(t+) - f(t-) at the start of piece `index` (index >= 1)."""
        prev, nxt = self.pieces[index - 1], self.pieces[index]
        left = prev.value(np.array([prev.end]), self.n_f)[0]
        right = nxt.value(np.array([nxt.start]), self.n_f)[0]
        return right - left


class MomentTrajectory(BaseModel):
    """Mean and covariance of z sampled on a strictly increasing grid."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: Tensor
    mean: Tensor = Field(..., description="(samples, size)")
    cov: Tensor = Field(..., description="(samples, size, size)")
    jump_times: List[float] = Field(default_factory=list)
    g: Optional[Tensor] = Field(None, description="Tr(S Q) + zbar^T S zbar when S is attached")

    def at(self, t: float) -> int:
        """Index of the sample nearest to t."""
        return int(np.argmin(np.abs(self.times - t)))

    def error_second_moment(self, n: int) -> np.ndarray:
        """<e e^T> = Q_ee + ebar ebar^T per sample."""
        mean_e = self.mean[:, n:]
        return self.cov[:, n:, n:] + np.einsum("ti,tj->tij", mean_e, mean_e)

    def lyapunov_expectation(self, S: np.ndarray) -> np.ndarray:
        """g(t) = Tr(S Q) + zbar^T S zbar."""
        return np.einsum("ij,tji->t", S, self.cov) + np.einsum("ti,ij,tj->t", self.mean, S, self.mean)


class MonteCarloMoments(BaseModel):
    """Empirical moments at checkpoints with standard errors."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    checkpoints: List[float]
    trials: int
    mean: Tensor
    mean_se: Tensor
    second: Tensor = Field(..., description="Raw second moment <z z^T>")
    second_se: Tensor
    energy: Tensor = Field(..., description="<|z|^2>")
    energy_se: Tensor


class EnvelopeVerdict(BaseModel):
    """g(t) against e^{-c(t-t_s)} g(t_s) + tau/c on each smooth segment."""
    model_config = ConfigDict(frozen=True)

    passed: bool
    max_ratio: float
    max_violation: float
    worst_time: float
    segments: int
    tolerance: float


class SimulationSummary(BaseModel):
    """Everything the simulate stage reports besides the trajectory itself."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float
    beta: float
    jumps: List[float] = Field(default_factory=list)
    jump_times: List[float] = Field(default_factory=list)
    steps: int
    terminal_mean: List[float]
    covariance: Dict[str, float]
    bound_steps: Dict[str, float]
    certified: bool
    decay_rate: Optional[float] = None
    offset: Optional[float] = None
    envelope: Optional[EnvelopeVerdict] = None
    monte_carlo: Optional[MonteCarloMoments] = None
    monte_carlo_max_z: Optional[float] = Field(None, description="Largest |moment - oracle| / SE at the checkpoints")
