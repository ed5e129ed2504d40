"""Transition storage with goal and horizon relabeling at sample time."""

from tdm_lab.replay.buffer import DEFAULT_CAPACITY, RelabelStrategy, ReplayBuffer

__all__ = ['DEFAULT_CAPACITY', 'RelabelStrategy', 'ReplayBuffer']
