"""
Step planning and filter design for the LDBP model: logarithmic step sizes,
half-step merging, least-squares FIR initialization, joint multi-objective
design and cascade factorization of long filters
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import fft as sfft
from scipy import linalg

from fiberdl import constants
from fiberdl.dsp import dsp_utils
from fiberdl.dsp.objects import FiberLink, Layout, StepSizing
from fiberdl.errors import FactorizationError
from fiberdl.ldbp.model import LdbpModel, Layer, LinearStep, NonlinearKind, NonlinearStep

logger = logging.getLogger("DESIGN")


class InitScheme(Enum):
    LEAST_SQUARES = "ls"
    UNIT = "unit"
    RANDOM = "random"


def log_step_sizes(
    span_km: float,
    steps_per_span: int,
    alpha_db_per_km: float,
    adjust: float = constants.LOG_STEP_ADJUST,
    num_spans: int = 1,
) -> np.ndarray:
    """
    Steps that carry equal shares of the adjusted effective length of a span.
    With a' = adjust * alpha, boundary z_k solves
    1 - exp(-a' z_k) = (k / M) (1 - exp(-a' L)).
    Returned in backpropagation order (largest first), repeated per span.
    """
    if steps_per_span < 1:
        raise ValueError(f"steps per span must be at least 1, got {steps_per_span}")
    alpha = adjust * alpha_db_per_km * math.log(10.0) / 10.0
    fractions = np.arange(steps_per_span + 1) / steps_per_span
    if alpha * span_km < 1e-12:
        bounds = span_km * fractions
    else:
        bounds = -np.log1p(fractions * math.expm1(-alpha * span_km)) / alpha
    bounds[-1] = span_km
    return np.tile(np.diff(bounds)[::-1], num_spans)


def merge_half_steps(deltas: Sequence[float]) -> np.ndarray:
    """(d_1/2, (d_1+d_2)/2, ..., d_M/2) for the symmetric layout"""
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.size == 0:
        raise ValueError("no steps to merge")
    merged = np.empty(deltas.size + 1)
    merged[0] = deltas[0] / 2.0
    merged[1:-1] = (deltas[:-1] + deltas[1:]) / 2.0
    merged[-1] = deltas[-1] / 2.0
    return merged


@dataclass
class StepPlan:
    deltas_km: np.ndarray
    merged_km: np.ndarray
    layout: Layout
    # Per layer: length of its nonlinear step and the forward position inside
    # the span where that step starts (drives the attenuation factor).
    nonlinear_km: np.ndarray = None
    z_start_km: np.ndarray = None

    def __post_init__(self):
        if np.any(self.deltas_km < 0) or np.any(self.merged_km < 0):
            raise ValueError("step lengths must not be negative")

    @property
    def num_layers(self):
        return self.merged_km.size

    @property
    def total_km(self):
        return float(np.sum(self.deltas_km))


def step_plan(
    link: FiberLink,
    steps_per_span: int,
    layout: Layout,
    sizing: StepSizing = StepSizing.LOGARITHMIC,
    adjust: float = constants.LOG_STEP_ADJUST,
) -> StepPlan:
    if sizing == StepSizing.LOGARITHMIC:
        span_steps = log_step_sizes(link.span_km, steps_per_span, link.alpha_db_per_km, adjust)
    else:
        span_steps = np.full(steps_per_span, link.span_km / steps_per_span)

    # span_steps is largest-first; forward order runs small steps first
    forward = span_steps[::-1]
    forward_starts = np.concatenate([[0.0], np.cumsum(forward)[:-1]])
    span_starts = forward_starts[::-1]

    deltas = np.tile(span_steps, link.num_spans)
    starts = np.tile(span_starts, link.num_spans)
    if layout == Layout.SYMMETRIC_PLUS_HALF:
        merged = merge_half_steps(deltas)
        nonlinear = np.concatenate([deltas, [0.0]])
        z_start = np.concatenate([starts, [0.0]])
    else:
        merged = deltas.copy()
        nonlinear = deltas.copy()
        z_start = starts
    return StepPlan(deltas, merged, layout, nonlinear, z_start)


def ideal_inverse_cd(delta_km: float, beta2_s2_per_km: float, sample_rate_hz: float, omega: np.ndarray) -> np.ndarray:
    """exp(j xi omega^2) with xi = -beta2 delta f_s^2 / 2, omega in rad/sample"""
    xi = -beta2_s2_per_km * delta_km * sample_rate_hz ** 2 / 2.0
    return np.exp(1j * xi * np.asarray(omega) ** 2)


def ls_grid(num_points: int) -> np.ndarray:
    """num_points + 1 normalized frequencies 2 pi i / N covering [-pi, pi]"""
    return 2.0 * np.pi * np.arange(-(num_points // 2), num_points // 2 + 1) / num_points


def cosine_basis(omega: np.ndarray, half_length: int) -> np.ndarray:
    """Columns 1, 2cos(omega), ..., 2cos(K omega): the symmetric filter's DTFT"""
    basis = 2.0 * np.cos(np.outer(omega, np.arange(half_length + 1)))
    basis[:, 0] = 1.0
    return basis


@dataclass
class LsFitConfig:
    num_freq_points: Optional[int] = None
    signal_band_fraction: float = 0.5
    max_oob_gain: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.signal_band_fraction <= 0.5:
            raise ValueError(f"band fraction must lie in (0, 0.5], got {self.signal_band_fraction}")
        if self.max_oob_gain <= 0:
            raise ValueError("out-of-band gain cap must be positive")

    def points_for(self, half_length: int) -> int:
        length = 2 * half_length + 1
        if self.num_freq_points is None:
            return max(constants.LS_MIN_FREQ_POINTS, constants.LS_POINTS_PER_TAP * length)
        if self.num_freq_points < 4 * length:
            raise ValueError(f"{self.num_freq_points} frequency points are too few for a {length}-tap filter")
        return self.num_freq_points

    def in_band(self, omega: np.ndarray) -> np.ndarray:
        return np.abs(omega) <= 2.0 * np.pi * self.signal_band_fraction + 1e-12


def default_band_fraction(rolloff: float, baud_rate_hz: float, sample_rate_hz: float) -> float:
    return min(0.5, (1.0 + rolloff) / 2.0 * baud_rate_hz / sample_rate_hz)


class LsFit(NamedTuple):
    step: LinearStep
    cap_met: bool
    oob_gain: float


def _solve(matrix, target):
    solution, _, rank, _ = linalg.lstsq(matrix, target)
    return solution, rank


def ls_fit_filter(
    target: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    half_length: int,
    config: LsFitConfig,
    delta_km: float = 0.0,
) -> LsFit:
    """
    Least-squares symmetric FIR fit of a target response within the signal
    band. If the out-of-band gain exceeds the cap, a penalty pulling the
    out-of-band response to zero is added and tightened until the cap holds.

    target is either sampled on ls_grid(N) or a callable of omega.
    """
    if half_length < 0:
        raise ValueError(f"half length must not be negative, got {half_length}")
    num_points = config.points_for(half_length)
    omega = ls_grid(num_points)
    desired = target(omega) if callable(target) else np.asarray(target, dtype=np.complex128)
    if desired.shape != omega.shape:
        raise ValueError(f"target has {desired.size} points, the design grid has {omega.size}")

    basis = cosine_basis(omega, half_length).astype(np.complex128)
    in_band = config.in_band(omega)
    half_taps, _ = _solve(basis[in_band], desired[in_band])

    out_band = basis[~in_band]
    oob_gain = float(np.max(np.abs(out_band @ half_taps))) if out_band.size else 0.0
    cap = config.max_oob_gain * (1.0 + 1e-9)
    penalty = constants.LS_PENALTY_START
    rounds = 0
    while oob_gain > cap and rounds < constants.LS_PENALTY_ROUNDS:
        matrix = np.vstack([basis[in_band], math.sqrt(penalty) * out_band])
        rhs = np.concatenate([desired[in_band], np.zeros(out_band.shape[0])])
        half_taps, _ = _solve(matrix, rhs)
        oob_gain = float(np.max(np.abs(out_band @ half_taps)))
        penalty *= constants.LS_PENALTY_GROWTH
        rounds += 1

    cap_met = oob_gain <= cap
    if not cap_met:
        logger.warning(f"Out-of-band gain {oob_gain:.3f} above cap {config.max_oob_gain} for a {2 * half_length + 1}-tap filter")
    return LsFit(LinearStep(half_taps, delta_km=delta_km), cap_met, oob_gain)


def exact_filter(delta_km: float, link: FiberLink, sample_rate_hz: float, n: int) -> LinearStep:
    """Length-n symmetric filter whose n-point DFT is exactly the inverse CD response"""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"exact filters need an odd block length, got {n}")
    omega = dsp_utils.angular_frequencies(n, 1.0)
    response = ideal_inverse_cd(delta_km, link.beta2_s2_per_km, sample_rate_hz, omega)
    taps = sfft.ifft(response)
    return LinearStep(taps[: (n - 1) // 2 + 1], delta_km=delta_km)


def _expand(values, count, name):
    if np.isscalar(values):
        return [int(values)] * count
    values = [int(v) for v in values]
    if len(values) != count:
        raise ValueError(f"{name} has {len(values)} entries for {count} layers")
    return values


def init_model(
    link: FiberLink,
    layout: Layout,
    steps_per_span: int,
    half_lengths: Union[int, Sequence[int]],
    scheme: InitScheme,
    seed: int,
    sample_rate_hz: float,
    ls_config: Optional[LsFitConfig] = None,
    sizing: StepSizing = StepSizing.LOGARITHMIC,
    loss_aware: bool = True,
    essm_half_lengths: Optional[Union[int, Sequence[int]]] = None,
    shared_eta: bool = False,
    adjust: float = constants.LOG_STEP_ADJUST,
) -> LdbpModel:
    plan = step_plan(link, steps_per_span, layout, sizing, adjust)
    count = plan.num_layers
    lengths = _expand(half_lengths, count, "half_lengths")
    kappas = None if essm_half_lengths is None else _expand(essm_half_lengths, count, "essm_half_lengths")
    ls_config = ls_config or LsFitConfig()
    rng = dsp_utils.substream(seed, constants.STREAM_INIT)

    designed = {}
    layers = []
    for index in range(count):
        delta, half_length = float(plan.merged_km[index]), lengths[index]
        if scheme == InitScheme.UNIT:
            linear = LinearStep.unit(half_length, delta)
        elif scheme == InitScheme.RANDOM:
            taps = rng.standard_normal(half_length + 1) + 1j * rng.standard_normal(half_length + 1)
            energy = np.abs(taps[0]) ** 2 + 2.0 * np.sum(np.abs(taps[1:]) ** 2)
            linear = LinearStep(taps / energy, delta_km=delta)
        else:
            key = (round(delta, 9), half_length)
            if key not in designed:
                target = lambda omega, d=delta: ideal_inverse_cd(d, link.beta2_s2_per_km, sample_rate_hz, omega)
                designed[key] = ls_fit_filter(target, half_length, ls_config, delta).step
            linear = LinearStep(designed[key].half_taps.copy(), delta_km=delta)

        kind = NonlinearKind.STANDARD
        eta = np.zeros(0)
        if kappas is not None and plan.nonlinear_km[index] > 0:
            kind = NonlinearKind.ESSM
            eta = np.zeros(kappas[index] + 1)
            eta[0] = 1.0
        alpha = link.alpha_np_per_km if loss_aware else 0.0
        nonlinear = NonlinearStep(
            kind=kind,
            delta_km=float(plan.nonlinear_km[index]),
            gamma_per_w_km=link.gamma_per_w_km,
            alpha_np_per_km=alpha,
            attenuation=math.exp(-alpha * plan.z_start_km[index]),
            eta_half_taps=eta,
        )
        layers.append(Layer(linear, nonlinear))

    logger.info(f"Initialized {count} layers ({layout.value}, {scheme.value}), total taps {sum(2 * k for k in lengths) + 1}")
    return LdbpModel(layers, layout, sample_rate_hz, shared_eta=shared_eta and kappas is not None)


@dataclass
class MultiObjectiveConfig:
    """
    Weights are indexed by run length: weights[r - 1] applies to every
    objective formed by the combined response of r consecutive filters.
    A single weight [1.0] designs each filter on its own.
    """

    beta2_ps2_per_km: float
    weights: Sequence[float] = (1.0,)
    max_sweeps: int = constants.MO_MAX_SWEEPS
    tol: float = constants.MO_TOL
    num_freq_points: Optional[int] = None
    signal_band_fraction: float = 0.5

    def __post_init__(self):
        self.weights = [float(w) for w in self.weights]
        if not self.weights or any(w < 0 for w in self.weights) or not any(w > 0 for w in self.weights):
            raise ValueError("weights must be non-negative with at least one positive entry")
        if self.max_sweeps < 1:
            raise ValueError("at least one sweep is needed")


class MultiObjectiveResult(NamedTuple):
    model: LdbpModel
    objective_history: List[float]
    regularized: bool


def _objectives(count, weights):
    runs = []
    for length, weight in enumerate(weights, start=1):
        if weight == 0 or length > count:
            continue
        for start in range(count - length + 1):
            runs.append((start, length, weight))
    return runs


def multiobjective_ls(model: LdbpModel, config: MultiObjectiveConfig) -> MultiObjectiveResult:
    """
    Joint design of all linear steps by cyclic coordinate descent. Each
    filter solves its weighted least-squares problem with every other filter
    held fixed, so the objective never increases.
    """
    result = model.copy()
    linears = [layer.linear for layer in result.layers]
    count = len(linears)
    beta2 = config.beta2_ps2_per_km * 1e-24
    num_points = config.num_freq_points or max(
        constants.LS_MIN_FREQ_POINTS, constants.LS_POINTS_PER_TAP * max(2 * s.half_length + 1 for s in linears)
    )
    omega = ls_grid(num_points)
    omega = omega[np.abs(omega) <= 2.0 * np.pi * config.signal_band_fraction + 1e-12]
    bases = [cosine_basis(omega, s.half_length) for s in linears]
    singles = [ideal_inverse_cd(s.delta_km, beta2, result.sample_rate_hz, omega) for s in linears]
    runs = _objectives(count, config.weights)

    def responses():
        return [basis @ s.half_taps for basis, s in zip(bases, linears)]

    def objective():
        current = responses()
        total = 0.0
        for start, length, weight in runs:
            combined = np.prod(current[start:start + length], axis=0)
            desired = np.prod(singles[start:start + length], axis=0)
            total += weight * float(np.sum(np.abs(combined - desired) ** 2))
        return total

    history = [objective()]
    regularized = False
    for sweep in range(config.max_sweeps):
        for index, step in enumerate(linears):
            current = responses()
            active = np.flatnonzero(step.mask)
            rows, rhs = [], []
            for start, length, weight in runs:
                if not start <= index < start + length:
                    continue
                others = np.prod([current[j] for j in range(start, start + length) if j != index], axis=0) \
                    if length > 1 else np.ones(omega.size)
                scale = math.sqrt(weight)
                rows.append(scale * others[:, None] * bases[index][:, active])
                rhs.append(scale * np.prod(singles[start:start + length], axis=0))
            if not rows:
                continue
            matrix, target = np.vstack(rows), np.concatenate(rhs)
            solution, rank = _solve(matrix, target)
            if rank < active.size:
                ridge = math.sqrt(constants.MO_RIDGE) * np.eye(active.size)
                solution, _ = _solve(np.vstack([matrix, ridge]), np.concatenate([target, np.zeros(active.size)]))
                regularized = True

            previous = step.half_taps.copy()
            before = objective()
            step.half_taps = np.zeros_like(previous)
            step.half_taps[active] = solution
            if objective() > before:
                step.half_taps = previous

        history.append(objective())
        logger.debug(f"Sweep {sweep + 1}: objective {history[-1]:.6e}")
        if history[-2] - history[-1] <= config.tol * max(history[-2], 1e-300):
            break

    if regularized:
        logger.warning(f"Rank-deficient weighted LS problem, ridge {constants.MO_RIDGE} applied")
    return MultiObjectiveResult(result, history, regularized)


def factor_filter(taps: np.ndarray) -> List[np.ndarray]:
    """
    Split a symmetric filter of length T into (T - 1) / 2 symmetric 3-tap
    filters whose cascade reproduces it. Roots of the palindromic transfer
    polynomial come in reciprocal pairs (q, 1/q); each pair gives one factor
    g (1, -(q + r), 1) and the gain is spread evenly.
    """
    taps = np.asarray(taps, dtype=np.complex128)
    if taps.size % 2 == 0 or taps.size < 3:
        raise ValueError(f"need an odd filter length of at least 3, got {taps.size}")
    if taps.size == 3:
        return [taps.copy()]
    count = (taps.size - 1) // 2

    core = taps
    stripped = 0
    while core.size > 1 and core[0] == 0 and core[-1] == 0:
        core = core[1:-1]
        stripped += 1
    if core[0] == 0:
        raise FactorizationError("filter is not symmetric around its center")

    gain = np.power(complex(core[0]), 1.0 / count)
    factors = [gain * np.array([0.0, 1.0, 0.0]) for _ in range(stripped)]
    roots = list(np.roots(core)) if core.size > 1 else []
    while roots:
        q = roots.pop(0)
        partner = int(np.argmin([abs(q * r - 1.0) for r in roots]))
        r = roots.pop(partner)
        factors.append(gain * np.array([1.0, -(q + r), 1.0]))

    product = np.array([1.0 + 0j])
    for factor in factors:
        product = np.convolve(product, factor)
    error = np.max(np.abs(product - taps))
    if len(factors) != count or error > 1e-6 * np.max(np.abs(taps)):
        raise FactorizationError(f"cascade of {len(factors)} factors misses the filter by {error:.3e}")
    return factors


def cd_memory_taps(beta2_ps2_per_km: float, bandwidth_hz: float, length_km: float, sample_rate_hz: float) -> float:
    """Dispersive memory |2 pi beta2 df L f_s| in samples"""
    return abs(2.0 * math.pi * beta2_ps2_per_km * 1e-24 * bandwidth_hz * length_km * sample_rate_hz)
