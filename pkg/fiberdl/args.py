"""
Argument parser for fiberdl
"""

import argparse


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--preset', type=str, help='Name of a shipped preset (see fiberdl/presets)')
    common.add_argument('--config', type=str, help='JSON file overlaid on top of the preset')
    common.add_argument('--seed', type=int, help='Root seed of every random substream')
    common.add_argument('--threads', type=int, help='Number of worker threads')
    common.add_argument('--out', type=str, help='Output directory')
    return common


def init_parser():
    """Initialize the experiment runner's argument parser"""

    parser = argparse.ArgumentParser(
        description='Split-step fiber simulation and learned digital backpropagation experiments',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )

    parser.add_argument(
        '--display-version',
        action='store_true',
        help='Display version information'
    )

    common = _common_arguments()
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Simulate command
    simulate_parser = subparsers.add_parser('simulate', parents=[common], help='Propagate frames and report baseline equalizer SNRs')
    simulate_parser.add_argument('--noiseless', action='store_true', help='Disable amplifier noise')
    simulate_parser.add_argument('--gamma', type=float, help='Override the nonlinear coefficient in 1/(W km)')

    # Train command
    train_parser = subparsers.add_parser('train', parents=[common], help='Train an LDBP model')
    train_parser.add_argument('--resume', type=str, help='Model dump to continue training from')

    # Evaluate command
    evaluate_parser = subparsers.add_parser('evaluate', parents=[common], help='SNR table of a trained model and the baselines')
    evaluate_parser.add_argument('--model', type=str, help='Model dump (defaults to <out>/model.json)')

    # Prune curve command
    subparsers.add_parser('prune-curve', parents=[common], help='Train while pruning to 3 taps per step and record SNR versus total taps')

    # Response command
    response_parser = subparsers.add_parser('response', parents=[common], help='Export per-step and overall filter responses')
    response_parser.add_argument('--model', type=str, help='Model dump (defaults to <out>/model.json)')

    # T_cd command
    subparsers.add_parser('tcd', parents=[common], help='Print the dispersive memory of the configured link in taps')

    return parser.parse_known_args()
