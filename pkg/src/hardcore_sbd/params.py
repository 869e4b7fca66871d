from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .geometry import ContractError, Window


@dataclass(frozen=True)
class SimParams:
    """Model and run constants shared by every simulation routine.

    ``rho`` is the per-pair kill probability, ``lam`` the rain intensity per
    unit volume and time, ``slab_len`` the time granularity of rain generation.
    """

    d: int = 2
    L: float = 20.0
    rho: float = 0.75
    lam: float = 1.0
    seed: int = 0
    boundary: str = "torus"
    slab_len: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ContractError(f"rho must lie in [0, 1], got {self.rho}")
        if not self.lam > 0:
            raise ContractError(f"lam must be positive, got {self.lam}")
        if not self.slab_len > 0:
            raise ContractError(f"slab_len must be positive, got {self.slab_len}")
        if not 0 <= self.seed < 1 << 64:
            raise ContractError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self.window  # validates d, L, boundary

    @property
    def window(self) -> Window:
        return Window(self.d, float(self.L), self.boundary)

    def with_(self, **kw) -> "SimParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)
