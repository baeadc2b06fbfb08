"""Wave functionals on time-sliced trajectories and the quantum action operator."""

__version__ = "0.1.0"
