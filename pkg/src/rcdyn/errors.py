"""Exception types and state-space caps shared across the package."""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, replace


class ParameterError(ValueError):
    """Invalid model parameter, graph argument or configuration value."""


class CapExceededError(ValueError):
    """A state space or matrix dimension is larger than the configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class NotReversibleError(ValueError):
    """Detailed balance fails beyond tolerance."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its sweep limit."""


@dataclass(frozen=True)
class Caps:
    rc_states: int = 2**24       # enumeration of 2^|E| subsets (measures)
    spin_states: int = 2**22     # enumeration of q^|V| colourings
    joint_states: int = 2**22    # q^|V| * 2^|E|
    matrix_states: int = 2**16   # dense transition matrices
    eigen_dim: int = 4096
    power_dim: int = 1024


ENV_MAX_STATES = "RCDYN_MAX_STATES"

_caps = Caps()
_explicit: frozenset[str] = frozenset()


def get_caps() -> Caps:
    """Current caps.  ``RCDYN_MAX_STATES`` overrides the matrix and joint caps
    unless they were set explicitly through :func:`set_caps`."""
    env = os.environ.get(ENV_MAX_STATES)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"{ENV_MAX_STATES} must be an integer, got {env!r}")
        if n < 1:
            raise ParameterError(f"{ENV_MAX_STATES} must be positive")
        fields = {"matrix_states", "joint_states"} - _explicit
        return replace(_caps, **{f: n for f in fields})
    return _caps


def set_caps(**overrides) -> Caps:
    """Replace process-wide caps, returning the previous value."""
    global _caps, _explicit
    old = _caps
    _caps = replace(_caps, **overrides)
    _explicit = _explicit | frozenset(overrides)
    return old


@contextmanager
def caps_override(**overrides):
    """Temporarily replace caps; the previous caps are restored on exit."""
    global _caps, _explicit
    saved = _caps, _explicit
    set_caps(**overrides)
    try:
        yield get_caps()
    finally:
        _caps, _explicit = saved


def check_cap(what: str, size: int, cap: int) -> None:
    if size > cap:
        raise CapExceededError(what, size, cap)
