#!/usr/bin/env python3
"""
Command line entry point of fiberdl
"""

import json
import logging
import sys

from fiberdl import args, constants, version
from fiberdl.config import ConfigManager
from fiberdl.errors import ConfigError, FiberDLError, NumericalError
from fiberdl.experiments.manager import ExperimentManager


def display_version():
    print(f"{version}")


def overrides_from(arguments):
    """Translate command line flags into a configuration overlay"""
    overrides = {}
    if arguments.seed is not None:
        overrides["seed"] = arguments.seed
    if arguments.threads is not None:
        overrides["threads"] = arguments.threads
    if arguments.out is not None:
        overrides["output_dir"] = arguments.out
    if getattr(arguments, "noiseless", False):
        overrides["channel"] = {"noiseless": True}
    if getattr(arguments, "gamma", None) is not None:
        overrides["link"] = {"gamma_per_w_km": arguments.gamma}
    return overrides


def run(arguments):
    logger = logging.getLogger("FIBERDL")
    config = ConfigManager().load(arguments.preset, arguments.config, overrides_from(arguments))
    experiment_manager = ExperimentManager(arguments, config)

    switcher = {
        "simulate": experiment_manager.simulate,
        "train": experiment_manager.train,
        "evaluate": experiment_manager.evaluate,
        "prune-curve": experiment_manager.prune_curve,
        "response": experiment_manager.response,
        "tcd": experiment_manager.tcd,
    }
    logger.debug(f"Running {arguments.command} with seed {config.seed} on {config.threads} threads")
    switcher[arguments.command]()


def main():
    arguments, unknown_args = args.init_parser()
    level = logging.INFO
    if '-d' in unknown_args or '--debug' in unknown_args:
        level = logging.DEBUG
    logging.basicConfig(format="[%(name)s] %(levelname)s: %(message)s", level=level)
    logger = logging.getLogger("FIBERDL")
    logger.debug(arguments)

    if arguments.display_version:
        display_version()
        return constants.EXIT_OK

    if not arguments.command:
        print("No command provided!")
        return constants.EXIT_CONFIG_ERROR

    try:
        run(arguments)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(json.dumps({"status": "error", "message": str(e)}))
        return constants.EXIT_CONFIG_ERROR
    except NumericalError as e:
        where = f" (layer {e.layer})" if e.layer is not None else ""
        logger.error(f"Numerical failure{where}: {e}")
        print(json.dumps({"status": "error", "message": str(e), "layer": e.layer}))
        return constants.EXIT_NUMERICAL_ERROR
    except (FiberDLError, ValueError) as e:
        logger.error(f"Invalid experiment: {e}")
        print(json.dumps({"status": "error", "message": str(e)}))
        return constants.EXIT_CONFIG_ERROR
    return constants.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
