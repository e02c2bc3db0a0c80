from typing import Dict, Optional

from constants.quadrature_constants import DeltaMode, LikelihoodKind
from libs.model.exceptions import ModelInputError


class QuadratureSpec:
    """ Which composite likelihood to fit and how to lay out its dummy points.  nd_target defaults
    to the number of observed points. """

    def __init__(
        self,
        kind: str = LikelihoodKind.poisson,
        nd_target: Optional[int] = None,
        delta_mode: str = DeltaMode.constant,
        bandwidth: Optional[float] = None,
    ):
        if kind not in LikelihoodKind.values():
            raise ModelInputError(f"unknown likelihood kind '{kind}', expected one of {LikelihoodKind.values()}")
        if delta_mode not in DeltaMode.values():
            raise ModelInputError(f"unknown delta mode '{delta_mode}', expected one of {DeltaMode.values()}")
        if nd_target is not None and int(nd_target) < 1:
            raise ModelInputError(f"nd_target must be at least 1, received {nd_target}")
        if bandwidth is not None and not bandwidth > 0:
            raise ModelInputError(f"bandwidth must be positive, received {bandwidth}")
        self.kind = kind
        self.nd_target = None if nd_target is None else int(nd_target)
        self.delta_mode = delta_mode
        self.bandwidth = bandwidth

    @classmethod
    def from_dict(cls, spec: Dict) -> "QuadratureSpec":
        return cls(
            kind=spec.get("kind", LikelihoodKind.poisson),
            nd_target=spec.get("nd"),
            delta_mode=spec.get("delta_mode", DeltaMode.constant),
            bandwidth=spec.get("bandwidth"),
        )

    def as_dict(self) -> Dict:
        return {"kind": self.kind, "nd": self.nd_target, "delta_mode": self.delta_mode, "bandwidth": self.bandwidth}

    def __repr__(self):
        return f"QuadratureSpec({self.as_dict()})"
