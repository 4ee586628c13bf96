"""
Runs the experiment verbs of the command line: simulation with baseline
equalizers, training, evaluation, pruning curves, response export and the
dispersive-memory estimate
"""

import csv
import json
import logging
import os
from functools import partial

import numpy as np
import scipy

from fiberdl import constants, version
from fiberdl.config import ExperimentConfig
from fiberdl.dsp import rxdsp
from fiberdl.errors import ConfigError
from fiberdl.ldbp import design
from fiberdl.ldbp.model import LdbpModel, overall_response
from fiberdl.train.adam import AdamState
from fiberdl.train.pruning import PruneSchedule, build_prune_schedule
from fiberdl.train.trainer import Trainer, evaluate, write_history_csv


class ExperimentManager:
    def __init__(self, arguments, config: ExperimentConfig):
        self.arguments = arguments
        self.config = config
        self.logger = logging.getLogger("EXPERIMENT")
        self.output_dir = config.output_dir
        self.threads = config.threads
        self.system = config.simulator()

    # Output helpers

    def _path(self, name):
        return os.path.join(self.output_dir, name)

    def _write_json(self, name, data):
        with open(self._path(name), "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")

    def _write_csv(self, name, header, rows):
        with open(self._path(name), "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)

    def _write_manifest(self, command):
        self._write_json(f"manifest-{command}.json", {
            "command": command,
            "seed": self.config.seed,
            "config": self.config.manifest_config(),
            "versions": {"fiberdl": version, "numpy": np.__version__, "scipy": scipy.__version__},
        })

    def _prepare(self, command):
        os.makedirs(self.output_dir, exist_ok=True)
        self._write_manifest(command)

    def _status(self, message, **extra):
        print(json.dumps({"status": "success", "message": message, **extra}))

    # Shared pieces

    def cd_memory(self):
        cfg = self.config
        return design.cd_memory_taps(
            cfg.link.beta2_ps2_per_km, cfg.spec.occupied_bandwidth_hz, cfg.link.length_km, self.system.sample_rate_hz
        )

    def _half_lengths(self, values):
        plan = design.step_plan(self.config.link, self.config.model.steps_per_span, self.config.model.layout, self.config.model.sizing)
        if isinstance(values, int):
            return [values] * plan.num_layers
        if len(values) != plan.num_layers:
            raise ConfigError(f"{len(values)} half lengths given for {plan.num_layers} layers")
        return [int(v) for v in values]

    def build_model(self) -> LdbpModel:
        cfg, settings = self.config, self.config.model
        ls_config = design.LsFitConfig(
            signal_band_fraction=design.default_band_fraction(cfg.spec.rolloff, cfg.spec.baud_rate_hz, self.system.sample_rate_hz),
            max_oob_gain=settings.max_oob_gain,
        )
        model = design.init_model(
            cfg.link, settings.layout, settings.steps_per_span, self._half_lengths(settings.half_lengths),
            settings.init, cfg.seed, self.system.sample_rate_hz,
            ls_config=ls_config, sizing=settings.sizing, loss_aware=settings.loss_aware,
            essm_half_lengths=settings.essm_half_lengths, shared_eta=settings.shared_eta,
        )
        if settings.multiobjective_weights:
            result = design.multiobjective_ls(model, design.MultiObjectiveConfig(
                weights=settings.multiobjective_weights,
                beta2_ps2_per_km=cfg.link.beta2_ps2_per_km,
                signal_band_fraction=ls_config.signal_band_fraction,
            ))
            model = result.model
            self.logger.info(f"Joint filter design finished after {len(result.objective_history) - 1} sweeps")
        return model

    def _schedule(self, model: LdbpModel, fraction: float, targets=None, delay: int = 0) -> PruneSchedule:
        targets = self.config.prune.target_half_lengths if targets is None else targets
        if targets is None:
            return PruneSchedule([], [])
        initial = [layer.linear.active_half_length for layer in model.layers]
        iterations = max(1, self.config.train.iterations - delay)
        return build_prune_schedule(initial, self._half_lengths(targets), iterations, fraction, delay)

    def _baselines(self):
        link = self.config.link
        equalizers = {"cdc": partial(rxdsp.cd_compensate, link=link)}
        for steps in self.config.evaluation.dbp_steps_per_span:
            equalizers[f"dbp_{steps}stps"] = partial(rxdsp.reference_dbp, link=link, steps_per_span=steps)
        return equalizers

    def _snr_table(self, equalizers):
        evaluation = self.config.evaluation
        columns = {}
        for name, equalizer in equalizers.items():
            linear_only = name.endswith("_linear_only")
            table = evaluate(equalizer, self.system, evaluation.powers_dbm, evaluation.num_frames,
                             self.config.seed, threads=self.threads, linear_only=linear_only)
            columns[name] = [point.snr_db for point in table]
            self.logger.info(f"{name}: peak SNR {max(columns[name]):.2f} dB")
        header = ["power_dbm"] + [f"{name}_snr_db" for name in columns]
        rows = []
        for index, power in enumerate(evaluation.powers_dbm):
            rows.append([f"{power:.3f}"] + [f"{columns[name][index]:.6f}" for name in columns])
        return header, rows, columns

    def _load_model(self, path=None):
        path = path or self._path("model.json")
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"model dump not found: {path}")
        state = AdamState.from_dict(data["adam"]) if "adam" in data else None
        return LdbpModel.from_dict(data["model"]), state, int(data.get("iteration", 0))

    def _save_model(self, name, model, state=None, iteration=0):
        dump = {"model": model.to_dict(), "iteration": iteration, "total_taps": model.total_taps}
        if state is not None:
            dump["adam"] = state.to_dict()
        self._write_json(name, dump)

    # Verbs

    def simulate(self):
        self._prepare("simulate")
        evaluation = self.config.evaluation
        frame = self.system.simulate(evaluation.powers_dbm[0], self.config.seed, stream=(constants.STREAM_SIMULATE,))
        np.save(self._path("received.npy"), frame.received.samples)
        np.save(self._path("symbols.npy"), frame.symbols.symbols)

        header, rows, columns = self._snr_table(self._baselines())
        self._write_csv("simulate_snr.csv", header, rows)
        self._status("Simulation finished", peak_snr_db={name: max(values) for name, values in columns.items()})

    def train(self):
        self._prepare("train")
        resume = getattr(self.arguments, "resume", None)
        if resume:
            model, state, start = self._load_model(resume)
            self.logger.info(f"Resuming from {resume} at iteration {start}")
            schedule = self._schedule(self.build_model(), self.config.prune.fraction)
        else:
            model, state, start = self.build_model(), None, 0
            schedule = self._schedule(model, self.config.prune.fraction)

        result = Trainer(self.system, self.config.train, schedule, self.threads).run(model, state, start)
        self._save_model("model.json", result.model, result.adam_state, result.iteration)
        write_history_csv(self._path("history.csv"), result.history)
        self._status("Training finished", total_taps=result.model.total_taps, iterations=result.iteration)

    def evaluate(self):
        self._prepare("evaluate")
        model, _, _ = self._load_model(getattr(self.arguments, "model", None))
        equalizers = {"ldbp": model, "ldbp_linear_only": model}
        equalizers.update(self._baselines())
        header, rows, columns = self._snr_table(equalizers)
        self._write_csv("evaluate_snr.csv", header, rows)
        self._status("Evaluation finished", peak_snr_db={name: max(values) for name, values in columns.items()})

    def prune_curve(self):
        self._prepare("prune-curve")
        evaluation = self.config.evaluation
        interval = self.config.prune.checkpoint_interval
        model = self.build_model()
        # down to 3 taps per step unless targets are configured; the first
        # checkpoint interval trains the unpruned model
        targets = self.config.prune.target_half_lengths or 1
        schedule = self._schedule(model, 1.0, targets, delay=interval)
        if schedule.last_iteration > self.config.train.iterations:
            self.logger.warning(f"Pruning ends at iteration {schedule.last_iteration}, after the last of {self.config.train.iterations}")
        t_cd = self.cd_memory()
        rows = []

        def checkpoint(iteration, current, state):
            if iteration % interval:
                return
            if rows and current.total_taps >= rows[-1][1]:
                return
            table = evaluate(current, self.system, evaluation.powers_dbm, evaluation.num_frames,
                             self.config.seed, threads=self.threads)
            snr = max(point.snr_db for point in table)
            rows.append([iteration, current.total_taps, f"{snr:.6f}", f"{t_cd:.3f}"])
            self._save_model(f"checkpoint-{iteration:06d}.json", current, state, iteration)
            self.logger.info(f"Checkpoint {iteration}: {current.total_taps} taps, peak SNR {snr:.2f} dB")

        Trainer(self.system, self.config.train, schedule, self.threads, checkpoint=checkpoint).run(model)
        self._write_csv("prune_curve.csv", ["iteration", "total_taps", "snr_db", "t_cd"], rows)
        self._status("Pruning curve finished", points=len(rows), t_cd=t_cd)

    def response(self):
        self._prepare("response")
        model, _, _ = self._load_model(getattr(self.arguments, "model", None))
        overall = overall_response(model, self.config.evaluation.response_points)
        omega = 2.0 * np.pi * overall.frequencies

        header = ["frequency_norm"]
        columns = []
        for index, layer in enumerate(model.layers):
            step = layer.linear.response(omega)
            header += [f"step{index}_mag_db", f"step{index}_phase_rad"]
            columns += [20.0 * np.log10(np.abs(step)), np.angle(step)]
        header += ["overall_mag_db", "overall_phase_rad"]
        columns += [20.0 * np.log10(np.abs(overall.response)), np.angle(overall.response)]

        rows = []
        for i, frequency in enumerate(overall.frequencies):
            rows.append([f"{frequency:.6f}"] + [f"{column[i]:.9f}" for column in columns])
        self._write_csv("response.csv", header, rows)
        self._status("Response exported", total_taps=overall.total_length)

    def tcd(self):
        t_cd = self.cd_memory()
        self.logger.info(f"Dispersive memory of {self.config.link.length_km:g} km: {t_cd:.1f} taps")
        self._status(f"T_cd = {t_cd:.1f} taps", t_cd=t_cd)
