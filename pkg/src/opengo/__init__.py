"""Language-guided skill orchestration for a simulated quadruped.

The package is organized around one closed loop: an instruction arrives,
the dispatcher builds a context from the registered skill library and
recent history, a planner backend proposes a plan in a fixed wire
format, the plan is validated and executed step by step on the tick
simulator under a safety monitor, and outcomes feed the learning store
that biases future planning.
"""

__version__ = "0.1.0"
