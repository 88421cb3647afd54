"""Mixed-radix encoding of joint action profiles.

Organization 0 is the most significant digit, so the states in which it
played action 0 form the leading contiguous block of indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

# Default ceiling on explicitly enumerated state spaces.
ENUMERATION_CAP = 4096


class StateSpaceTooLarge(ValueError):
    """Raised when an operation would need to enumerate too many states."""


@dataclass(frozen=True)
class StateSpace:
    n_orgs: int
    n_actions: int

    def __post_init__(self):
        if self.n_orgs < 1 or self.n_actions < 1:
            raise ValueError("state space needs at least one org and one action")

    @property
    def size(self) -> int:
        return self.n_actions**self.n_orgs

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_actions,) * self.n_orgs

    def is_enumerable(self, cap: int = ENUMERATION_CAP) -> bool:
        return self.size <= cap

    def require_enumerable(self, cap: int = ENUMERATION_CAP) -> None:
        if not self.is_enumerable(cap):
            raise StateSpaceTooLarge(
                f"{self.n_actions}^{self.n_orgs} = {self.size} states exceeds the "
                f"enumeration cap of {cap}; use on-the-fly simulation instead"
            )

    def validate(self, profile: Sequence[int]) -> tuple[int, ...]:
        prof = tuple(int(a) for a in profile)
        if len(prof) != self.n_orgs:
            raise ValueError(f"profile has {len(prof)} entries, expected {self.n_orgs}")
        for a in prof:
            if not 0 <= a < self.n_actions:
                raise ValueError(f"action {a} outside 0..{self.n_actions - 1}")
        return prof

    def encode(self, profile: Sequence[int]) -> int:
        index = 0
        for a in self.validate(profile):
            index = index * self.n_actions + a
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        index = int(index)
        if not 0 <= index < self.size:
            raise ValueError(f"state index {index} outside 0..{self.size - 1}")
        digits = []
        for _ in range(self.n_orgs):
            index, a = divmod(index, self.n_actions)
            digits.append(a)
        return tuple(reversed(digits))

    @cached_property
    def actions(self) -> np.ndarray:
        """(size, n_orgs) integer array; row j is decode(j)."""
        self.require_enumerable()
        grids = np.indices(self.shape).reshape(self.n_orgs, -1)
        return grids.T.copy()

    def block(self, org: int, action: int) -> np.ndarray:
        """Boolean mask of states in which ``org`` played ``action``."""
        return self.actions[:, org] == action
