"""
Mini-batch training loop with fresh Monte-Carlo frames every iteration,
progressive pruning and effective-SNR evaluation
"""

import csv
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from fiberdl import constants
from fiberdl.dsp import dsp_utils, rxdsp
from fiberdl.dsp.objects import ComplexSignal
from fiberdl.dsp.system import FrameSimulator
from fiberdl.errors import NumericalError, TrainingDiverged
from fiberdl.ldbp.model import LdbpModel, linear_only_forward
from fiberdl.train import gradient as grad_module
from fiberdl.train.adam import AdamState, TrainConfig, adam_step
from fiberdl.train.pruning import PruneSchedule, prune_apply

Equalizer = Union[LdbpModel, Callable[[ComplexSignal], ComplexSignal]]


class HistoryRow(NamedTuple):
    iteration: int
    loss: float
    snr_db: Optional[float]
    total_taps: int
    power_mix_hash: str


class SnrPoint(NamedTuple):
    power_dbm: float
    snr_db: float


@dataclass
class TrainResult:
    model: LdbpModel
    history: List[HistoryRow]
    adam_state: AdamState
    iteration: int


def power_mix_hash(powers: Sequence[float]) -> str:
    return hashlib.sha1(np.asarray(powers, dtype=np.float64).tobytes()).hexdigest()[:12]


def write_history_csv(path, history: Sequence[HistoryRow]):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(HistoryRow._fields)
        for row in history:
            snr = "" if row.snr_db is None else f"{row.snr_db:.6f}"
            writer.writerow([row.iteration, f"{row.loss:.12e}", snr, row.total_taps, row.power_mix_hash])


def _equalize(equalizer: Equalizer, r: ComplexSignal, linear_only: bool) -> ComplexSignal:
    if isinstance(equalizer, LdbpModel):
        return linear_only_forward(equalizer, r) if linear_only else equalizer.forward(r)
    return equalizer(r)


def evaluate(
    equalizer: Equalizer,
    system: FrameSimulator,
    powers: Sequence[float],
    num_frames: int,
    seed: int,
    threads: int = 1,
    linear_only: bool = False,
) -> List[SnrPoint]:
    """
    Effective SNR per launch power. Frame k at power index i always comes from
    substream (seed, STREAM_EVAL, i, k), so every equalizer sees the same data.
    """
    if num_frames < 1:
        raise ValueError("need at least one evaluation frame")

    def run(job):
        index, frame_index, power = job
        frame = system.simulate(power, seed, stream=(constants.STREAM_EVAL, index, frame_index))
        u = _equalize(equalizer, frame.received, linear_only)
        s_tilde = frame.symbols.with_symbols(system.matched_filter(power).apply(u.samples))
        s_hat, _ = rxdsp.phase_correct(s_tilde, frame.symbols)
        return s_hat, frame.symbols

    table = []
    with ThreadPoolExecutor(max_workers=threads) as executor:
        for index, power in enumerate(powers):
            jobs = [(index, k, power) for k in range(num_frames)]
            pairs = list(executor.map(run, jobs))
            table.append(SnrPoint(float(power), rxdsp.effective_snr(pairs)))
    return table


class Trainer:
    def __init__(
        self,
        system: FrameSimulator,
        config: TrainConfig,
        schedule: Optional[PruneSchedule] = None,
        threads: int = 1,
        checkpoint: Optional[Callable[[int, LdbpModel, AdamState], None]] = None,
    ):
        self.logger = logging.getLogger("TRAIN")
        self.system = system
        self.config = config
        self.schedule = schedule or PruneSchedule([], [])
        self.threads = threads
        self.checkpoint = checkpoint

    def _batch_powers(self, iteration):
        rng = dsp_utils.substream(self.config.seed, constants.STREAM_TRAIN, iteration, 0)
        return rng.choice(np.asarray(self.config.power_set_dbm), size=self.config.batch_size)

    def _iteration_gradient(self, model, iteration, powers, executor):
        def simulate(job):
            frame_index, power = job
            return self.system.simulate(
                float(power), self.config.seed, stream=(constants.STREAM_TRAIN, iteration, frame_index + 1)
            )

        batch = list(executor.map(simulate, enumerate(powers)))
        return grad_module.gradient(model, batch, self.system.spec, executor)

    def _evaluation_snr(self, model):
        table = evaluate(
            model, self.system, self.config.power_set_dbm, self.config.eval_frames,
            self.config.seed, threads=self.threads,
        )
        return max(point.snr_db for point in table)

    def run(
        self,
        model: LdbpModel,
        adam_state: Optional[AdamState] = None,
        start_iteration: int = 0,
    ) -> TrainResult:
        model = model.copy()
        state = adam_state or AdamState.zeros(model.parameter_count)
        history = []
        initial_loss = None
        strikes = 0
        cfg = self.config

        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            for iteration in range(start_iteration + 1, cfg.iterations + 1):
                powers = self._batch_powers(iteration)
                loss, grads = self._iteration_gradient(model, iteration, powers, executor)
                if not math.isfinite(loss) or not np.all(np.isfinite(grads)):
                    raise NumericalError(f"non-finite loss or gradient at iteration {iteration}")

                if initial_loss is None:
                    initial_loss = loss
                strikes = strikes + 1 if loss > constants.DIVERGENCE_FACTOR * initial_loss else 0
                if strikes >= constants.DIVERGENCE_PATIENCE:
                    raise TrainingDiverged(
                        f"loss {loss:.3e} stayed above {constants.DIVERGENCE_FACTOR:g}x the initial "
                        f"{initial_loss:.3e} for {strikes} iterations (iteration {iteration})"
                    )

                params, state = adam_step(state, model.parameters(), grads, cfg, model.parameter_mask())
                model.set_parameters(params)
                prune_apply(model, self.schedule, iteration, state)

                snr = None
                if cfg.eval_interval and iteration % cfg.eval_interval == 0:
                    snr = self._evaluation_snr(model)
                history.append(HistoryRow(iteration, loss, snr, model.total_taps, power_mix_hash(powers)))

                if cfg.log_interval and iteration % cfg.log_interval == 0:
                    extra = f", SNR {snr:.2f} dB" if snr is not None else ""
                    self.logger.info(f"Iteration {iteration}/{cfg.iterations}: loss {loss:.4e}, taps {model.total_taps}{extra}")
                if self.checkpoint is not None:
                    self.checkpoint(iteration, model, state)

        return TrainResult(model, history, state, max(start_iteration, cfg.iterations))


def train(
    model: LdbpModel,
    system: FrameSimulator,
    config: TrainConfig,
    schedule: Optional[PruneSchedule] = None,
    threads: int = 1,
) -> TrainResult:
    return Trainer(system, config, schedule, threads).run(model)
