"""Skills package."""
from .realizability_skills import RealizabilitySkills
from .assembly_skills import AssemblySkills
from .lifting_skills import LiftingSkills
from .certification_skills import CertificationSkills
from .lmi_skills import LMISkills
from .simulation_skills import SimulationSkills
from .publishing_skills import PublishingSkills

__all__ = [
    "RealizabilitySkills",
    "AssemblySkills",
    "LiftingSkills",
    "CertificationSkills",
    "LMISkills",
    "SimulationSkills",
    "PublishingSkills",
]
