"""
Flows package for the PT dilation simulator.

``experiment_steps`` holds the individual pipeline steps used by the CLI
commands; ``experiment_flow`` chains them in a CrewAI Flow. The Flow module is
imported on demand because crewai is only needed for full reproductions.
"""

from flows.experiment_steps import STEPS

__all__ = ['STEPS']
