"""
Position-based tap pruning: binary masks remove the outermost symmetric tap
pair of a filter at scheduled iterations
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from fiberdl import constants
from fiberdl.ldbp.model import LdbpModel
from fiberdl.train.adam import AdamState

logger = logging.getLogger("PRUNING")


class PruneEvent(NamedTuple):
    iteration: int
    layer: int


@dataclass
class PruneSchedule:
    target_half_lengths: List[int]
    events: List[PruneEvent] = field(default_factory=list)

    def __post_init__(self):
        self.events = [PruneEvent(int(it), int(layer)) for it, layer in self.events]
        iterations = [event.iteration for event in self.events]
        if any(b <= a for a, b in zip(iterations, iterations[1:])):
            raise ValueError("prune events must have strictly increasing iterations")

    def at(self, iteration: int) -> List[PruneEvent]:
        return [event for event in self.events if event.iteration == iteration]

    @property
    def last_iteration(self):
        return self.events[-1].iteration if self.events else 0

    def to_dict(self):
        return {
            "target_half_lengths": list(self.target_half_lengths),
            "events": [list(event) for event in self.events],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(list(data["target_half_lengths"]), [tuple(e) for e in data["events"]])


def build_prune_schedule(
    initial_half_lengths: Sequence[int],
    target_half_lengths: Sequence[int],
    iterations: int,
    fraction: float = constants.PRUNE_FRACTION,
    delay: int = 0,
) -> PruneSchedule:
    """
    Spread the removals uniformly over the first `fraction` of `iterations`
    training iterations that follow the first `delay` ones, one tap pair per
    event, always from the layer that currently has the longest filter still
    above its target (lowest index on ties).
    """
    initial = [int(k) for k in initial_half_lengths]
    target = [int(k) for k in target_half_lengths]
    if len(initial) != len(target):
        raise ValueError("initial and target half lengths differ in layer count")
    if any(t < 0 or t > k for k, t in zip(initial, target)):
        raise ValueError("targets must lie between 0 and the initial half length")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"prune fraction must lie in (0, 1], got {fraction}")
    if delay < 0:
        raise ValueError(f"prune delay must not be negative, got {delay}")

    count = sum(k - t for k, t in zip(initial, target))
    if count == 0:
        return PruneSchedule(target, [])
    window = max(count, int(fraction * iterations))
    if window > iterations:
        logger.warning(f"{count} prune events do not fit into {iterations} iterations")

    current = np.array(initial)
    goal = np.array(target)
    events = []
    for event in range(count):
        remaining = np.where(current > goal, current, -1)
        layer = int(np.argmax(remaining))
        current[layer] -= 1
        events.append(PruneEvent(delay + 1 + (event * window) // count, layer))
    return PruneSchedule(target, events)


def _parameter_offsets(model: LdbpModel):
    offsets = {}
    position = 0
    for kind, index, size in model.parameter_blocks():
        offsets[(kind, index)] = position
        position += size
    return offsets


def prune_apply(
    model: LdbpModel, schedule: PruneSchedule, iteration: int, adam_state: Optional[AdamState] = None
) -> LdbpModel:
    """
    Fire every event scheduled at this iteration: the outermost active
    half-tap is masked and zeroed together with its Adam moments.
    """
    events = schedule.at(iteration)
    if not events:
        return model
    offsets = _parameter_offsets(model)
    for event in events:
        linear = model.layers[event.layer].linear
        position = linear.active_half_length
        if position <= schedule.target_half_lengths[event.layer] or position == 0:
            logger.debug(f"Layer {event.layer} already at its target, event skipped")
            continue
        linear.mask[position] = False
        linear.half_taps[position] = 0.0
        if adam_state is not None:
            for kind in ("re", "im"):
                flat = offsets[(kind, event.layer)] + position
                adam_state.first_moment[flat] = 0.0
                adam_state.second_moment[flat] = 0.0
        logger.debug(f"Iteration {iteration}: layer {event.layer} pruned to {linear.length} taps")
    return model
