"""
Jamming strategies. Each returns a complex jamming sequence that is added
to the transmitted samples.

The jammer is assumed to know the transmitted symbol stream and to be
perfectly symbol-aligned. Strategy identifiers are the CLI names:
``noise``, ``phase``, ``fixed``, ``aj``, ``deceive``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from advjam.adversary import AttackConfig, minimal_norm_attack, minimal_targeted_attack
from advjam.channel import NoiseSpec, PowerBudget, awgn
from advjam.constellation import ConstellationSpec, nearest_boundary_vector, targeted_vector
from advjam.demod import DemodModel

STRATEGIES = ("noise", "phase", "fixed", "aj", "deceive")
DEFAULT_MARGIN = 0.10


@dataclass(frozen=True)
class JammerConfig:
    kind: str
    budget: PowerBudget | None = None
    amplitude_margin: float = DEFAULT_MARGIN
    swap: tuple[str, str] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown jamming strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.amplitude_margin < 0:
            raise ValueError("amplitude_margin must be >= 0")
        if self.kind == "deceive":
            if self.swap is None or len(self.swap) != 2 or self.swap[0] == self.swap[1]:
                raise ValueError("deception needs two distinct labels to swap")
        elif self.budget is None:
            raise ValueError(f"strategy {self.kind!r} needs a power budget")


@dataclass(frozen=True)
class DutyCycleSchedule:
    t: float  # fraction of symbols jammed
    per_symbol_power: float
    seed: int = 0

    def mask(self, n: int) -> np.ndarray:
        """Independent Bernoulli(t) selection of jammed symbols."""
        if self.t >= 1.0:
            return np.ones(n, dtype=bool)
        if self.t <= 0.0:
            return np.zeros(n, dtype=bool)
        return np.random.default_rng(self.seed).random(n) < self.t


def make_schedule(budget: PowerBudget, per_symbol_power: float, seed: int = 0) -> DutyCycleSchedule:
    """Jam a fraction ``min(1, P_budget / P_symbol)`` of the symbols.

    When the budget covers every symbol the emitted waveform is left as is;
    surplus power is not spent.
    """
    if not per_symbol_power > 0:
        raise ValueError(f"per-symbol power must be positive, got {per_symbol_power}")
    t = min(1.0, budget.perturbation_power / per_symbol_power)
    return DutyCycleSchedule(t=t, per_symbol_power=per_symbol_power, seed=seed)


def noise_jam(n: int, budget: PowerBudget, seed: int = 0) -> np.ndarray:
    sigma = np.sqrt(budget.perturbation_power / 2.0)
    return awgn(np.zeros(n, dtype=complex), NoiseSpec(sigma, seed))


def boundary_directions(spec: ConstellationSpec) -> np.ndarray:
    """Unit nearest-boundary direction per symbol."""
    v = np.array([nearest_boundary_vector(s, spec) for s in range(spec.order)])
    return v / np.abs(v)


def phase_jam(symbols, spec: ConstellationSpec, budget: PowerBudget, seed: int = 0) -> np.ndarray:
    """Gaussian amplitude along each symbol's nearest-boundary direction.

    Amplitude is |N(0, P)|, whose second moment is P.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    rng = np.random.default_rng(seed)
    amp = np.abs(rng.standard_normal(symbols.size)) * np.sqrt(budget.perturbation_power)
    return amp * boundary_directions(spec)[symbols]


def fixed_power_jam(n: int, budget: PowerBudget, seed: int = 0) -> np.ndarray:
    """Constant magnitude sqrt(P), independent uniform phase."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.sqrt(budget.perturbation_power) * np.exp(1j * theta)


def adversarial_displacements(model: DemodModel, spec: ConstellationSpec,
                              cfg: AttackConfig | None = None) -> np.ndarray:
    """Minimal-norm adversarial displacement for every clean symbol (one attack per label)."""
    return np.array([minimal_norm_attack(model, spec.points[s], s, cfg, spec).delta
                     for s in range(spec.order)])


def adversarial_jam(symbols, model: DemodModel | None, spec: ConstellationSpec,
                    budget: PowerBudget, cfg: AttackConfig | None = None,
                    margin: float = DEFAULT_MARGIN, seed: int = 0,
                    displacements: np.ndarray | None = None) -> np.ndarray:
    """Duty-cycled minimal-norm adversarial jamming.

    ``displacements`` may carry precomputed per-symbol attacks (see
    :func:`adversarial_displacements`); otherwise they are computed from
    ``model``.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    out = np.zeros(symbols.size, dtype=complex)
    if symbols.size == 0 or budget.perturbation_power == 0:
        return out
    if displacements is None:
        displacements = adversarial_displacements(model, spec, cfg)
    wave = (1.0 + margin) * displacements[symbols]
    # average over the actual stream so expected emitted power meets the budget exactly
    per_symbol = float(np.mean(np.abs(wave) ** 2))
    sched = make_schedule(budget, per_symbol, seed)
    mask = sched.mask(symbols.size)
    out[mask] = wave[mask]
    return out


def deception_vectors(spec: ConstellationSpec, swap: tuple[str, str],
                      model: DemodModel | None = None,
                      cfg: AttackConfig | None = None) -> tuple[complex, complex]:
    """Displacements A->B and B->A.

    Geometric (cell projection) without a model; minimal targeted attacks
    against ``model`` otherwise.
    """
    a, b = spec.index_of(swap[0]), spec.index_of(swap[1])
    if a == b:
        raise ValueError("swap labels must differ")
    if model is None:
        return targeted_vector(a, b, spec), targeted_vector(b, a, spec)
    ab = minimal_targeted_attack(model, spec.points[a], b, cfg, spec).delta
    ba = minimal_targeted_attack(model, spec.points[b], a, cfg, spec).delta
    return ab, ba


def deception_jam(symbols, spec: ConstellationSpec, swap: tuple[str, str],
                  margin: float = DEFAULT_MARGIN, model: DemodModel | None = None,
                  cfg: AttackConfig | None = None,
                  vectors: tuple[complex, complex] | None = None) -> np.ndarray:
    """Make symbols labelled ``swap[0]`` read as ``swap[1]`` and vice versa; leave the rest alone."""
    a, b = spec.index_of(swap[0]), spec.index_of(swap[1])
    ab, ba = vectors or deception_vectors(spec, swap, model, cfg)
    symbols = np.asarray(symbols, dtype=np.int64)
    out = np.zeros(symbols.size, dtype=complex)
    out[symbols == a] = (1.0 + margin) * ab
    out[symbols == b] = (1.0 + margin) * ba
    return out


@dataclass
class Jammer:
    """A configured strategy bound to its constellation and (for ``aj``) a model.

    Adversarial and deception displacements are computed once at
    construction and reused.
    """

    config: JammerConfig
    spec: ConstellationSpec
    model: DemodModel | None = None
    attack: AttackConfig | None = None
    _displacements: np.ndarray | None = field(default=None, repr=False)
    _swap_vectors: tuple[complex, complex] | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = self.config.kind
        if kind == "aj" and self._displacements is None:
            if self.model is None:
                raise ValueError("adversarial jamming needs a trained demodulator")
            self._displacements = adversarial_displacements(self.model, self.spec, self.attack)
        if kind == "deceive" and self._swap_vectors is None:
            self._swap_vectors = deception_vectors(self.spec, self.config.swap, self.model, self.attack)

    def __call__(self, symbols, seed: int | None = None) -> np.ndarray:
        cfg = self.config
        seed = cfg.seed if seed is None else seed
        symbols = np.asarray(symbols, dtype=np.int64)
        n = symbols.size
        if cfg.kind == "noise":
            return noise_jam(n, cfg.budget, seed)
        if cfg.kind == "phase":
            return phase_jam(symbols, self.spec, cfg.budget, seed)
        if cfg.kind == "fixed":
            return fixed_power_jam(n, cfg.budget, seed)
        if cfg.kind == "aj":
            return adversarial_jam(symbols, None, self.spec, cfg.budget, margin=cfg.amplitude_margin,
                                   seed=seed, displacements=self._displacements)
        return deception_jam(symbols, self.spec, cfg.swap, cfg.amplitude_margin,
                             vectors=self._swap_vectors)

    def with_budget(self, budget: PowerBudget) -> "Jammer":
        """Same strategy at another power budget, sharing cached attacks."""
        cfg = JammerConfig(self.config.kind, budget, self.config.amplitude_margin,
                           self.config.swap, self.config.seed)
        return Jammer(cfg, self.spec, self.model, self.attack, self._displacements, self._swap_vectors)
