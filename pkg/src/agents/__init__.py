"""Agents package."""
from .orchestrator import OrchestratorAgent
from .validator import ValidatorAgent
from .synthesizer import SynthesizerAgent
from .certifier import CertifierAgent
from .simulator import SimulatorAgent
from .reporter import ReporterAgent

__all__ = [
    "OrchestratorAgent",
    "ValidatorAgent",
    "SynthesizerAgent",
    "CertifierAgent",
    "SimulatorAgent",
    "ReporterAgent",
]
