"""Desk-scale curriculum self play laboratory.

Submodules:
  nets        numpy MLPs, Adam, squashed-Gaussian heads, checkpoints
  envs        goal spaces, regret landscape, point-mass world
  learner     goal-conditioned SAC learner and hindsight relabeling
  goalgen     one-step SAC goal generator with regret refresh
  game        round orchestration for curriculum self play and baselines
  evalharness evaluation protocols and goal snapshots
  bench       toy regret-landscape optimizer benches
  config      run configuration (INI) and resolution
  cli         train / bench-landscape / eval commands
"""

__version__ = "0.1.0"
