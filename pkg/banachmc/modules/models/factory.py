from __future__ import annotations

from collections.abc import Callable

from banachmc.common_values import Representation
from banachmc.modules.models.bvp_model import BvpModel, BvpSampler
from banachmc.modules.models.fa_model import FaModel, FaSampler
from banachmc.modules.sampling import LevelSampler
from banachmc.modules.spaces import Partition


def make_level_sampler(
    model: BvpModel | FaModel,
    level_map: Callable[[int], Partition],
    level_min: int = 1,
    cost_exponent: float = 1.0,
    representation: Representation | str = Representation.CELL_AVERAGE,
) -> LevelSampler:
    """Coupled sampler for `model`: one y drives every level, level_min pairs with zero."""
    if isinstance(model, BvpModel):
        return BvpSampler(model, level_map, level_min, cost_exponent)
    if isinstance(model, FaModel):
        return FaSampler(model, level_map, level_min, cost_exponent, representation)
    raise TypeError(f"No level sampler for {type(model).__name__}")
