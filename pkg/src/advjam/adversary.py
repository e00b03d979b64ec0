"""
Adversarial displacements against a trained demodulator.

Untargeted attacks maximise the cross-entropy of the true label inside an
L2 ball; targeted attacks minimise the cross-entropy of a chosen label.
Both are normalised-gradient PGD over either the logit margin (default)
or the cross-entropy. The margin objective matters at symbols with several
equidistant boundaries: the cross-entropy gradient there points between
the tied competitors, and PGD stalls on that direction. A bisection over the ball radius turns
them into minimal-norm attacks, which is what the jammers emit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from advjam.constellation import (
    ConstellationSpec,
    DegenerateTargetError,
    boundary_vectors,
    build_qam,
    min_distance,
    nearest_boundary_vector,
    targeted_vector,
)
from advjam.demod import DemodModel


class AttackSaturationError(RuntimeError):
    """No successful perturbation up to the search bound; the model is suspect."""


@dataclass(frozen=True)
class AttackConfig:
    steps: int = 40
    step_scale: float = 2.5 / 40
    bisection_iters: int = 12
    eps_max: float = 2.0  # in units of min_distance
    restarts: int = 0
    seed: int = 0
    loss: str = "margin"  # or "ce"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.eps_max <= 0:
            raise ValueError("eps_max must be positive")
        if self.loss not in ("margin", "ce"):
            raise ValueError(f"unknown attack loss {self.loss!r}")


@dataclass(frozen=True)
class AdversarialResult:
    delta: complex
    success: bool
    norm: float
    predicted_after: int


def _project(delta: complex, eps: float) -> complex:
    r = abs(delta)
    if r > eps:
        delta *= eps / r
    return delta


def _pgd(model: DemodModel, x: complex, label: int, eps: float, cfg: AttackConfig,
         targeted: bool) -> AdversarialResult:
    alpha = cfg.step_scale * eps
    # untargeted pushes the objective at `label` up, targeted pushes it down
    sign = -1.0 if targeted else 1.0
    if cfg.loss == "ce":
        def ascent(z):
            return sign * model.input_gradient(z, label)
    else:
        def ascent(z):
            _, g = model.margin_and_input_grad(z, label)
            return sign * complex(g[0, 0], g[0, 1])

    def done(pred):
        return pred == label if targeted else pred != label

    starts = [0j]
    if cfg.restarts:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(cfg.restarts):
            r = eps * np.sqrt(rng.uniform())
            starts.append(r * np.exp(2j * np.pi * rng.uniform()))

    best = None
    for start in starts:
        delta = start
        pred = model.predict(x + delta)
        if delta != 0 and done(pred):
            return AdversarialResult(delta, True, abs(delta), pred)
        for _ in range(cfg.steps):
            g = ascent(x + delta)
            gn = abs(g)
            if gn == 0 or not np.isfinite(gn):
                break
            delta = _project(delta + alpha * g / gn, eps)
            assert abs(delta) <= eps * (1 + 1e-12)
            pred = model.predict(x + delta)
            if done(pred):
                return AdversarialResult(delta, True, abs(delta), pred)
        if best is None:
            best = AdversarialResult(delta, False, abs(delta), pred)
    return best


def pgd_untargeted(model: DemodModel, x: complex, y: int, eps: float,
                   cfg: AttackConfig | None = None) -> AdversarialResult:
    """L2 PGD ascent on the loss of label ``y``; stops at the first label change."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return _pgd(model, complex(x), y, eps, cfg or AttackConfig(), targeted=False)


def pgd_targeted(model: DemodModel, x: complex, target: int, eps: float,
                 cfg: AttackConfig | None = None) -> AdversarialResult:
    """L2 PGD descent on the loss of ``target``; success means predict(x + delta) == target."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = complex(x)
    if model.predict(x) == target:
        raise DegenerateTargetError(f"input already demodulates as target {target}")
    return _pgd(model, x, target, eps, cfg or AttackConfig(), targeted=True)


def _bisect(attack, hi: float, iters: int) -> AdversarialResult:
    best = attack(hi)
    if not best.success:
        raise AttackSaturationError(f"no successful perturbation within radius {hi:.6g}")
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        res = attack(mid)
        if res.success:
            hi, best = mid, res
        else:
            lo = mid
    return best


def minimal_norm_attack(model: DemodModel, x: complex, y: int, cfg: AttackConfig | None = None,
                        spec: ConstellationSpec | None = None) -> AdversarialResult:
    """Smallest-radius untargeted PGD success, found by bisection on the radius."""
    cfg = cfg or AttackConfig()
    spec = spec or build_qam(model.order)
    hi = cfg.eps_max * min_distance(spec)
    return _bisect(lambda e: pgd_untargeted(model, x, y, e, cfg), hi, cfg.bisection_iters)


def minimal_targeted_attack(model: DemodModel, x: complex, target: int,
                            cfg: AttackConfig | None = None,
                            spec: ConstellationSpec | None = None) -> AdversarialResult:
    """Smallest-radius targeted PGD success.

    The search bound is widened to cover the constellation diameter, since a
    far target can sit several cells away.
    """
    cfg = cfg or AttackConfig()
    spec = spec or build_qam(model.order)
    p = spec.points
    hi = max(cfg.eps_max * min_distance(spec), float(np.abs(p[:, None] - p[None, :]).max()))
    return _bisect(lambda e: pgd_targeted(model, x, target, e, cfg), hi, cfg.bisection_iters)


@dataclass(frozen=True)
class GapRow:
    symbol: int
    label: str
    attack_norm: float
    oracle_norm: float
    ratio: float
    cosine: float  # best match over all tied nearest-boundary directions
    unique_boundary: bool


def oracle_gap_report(model: DemodModel, spec: ConstellationSpec,
                      cfg: AttackConfig | None = None) -> list[GapRow]:
    """Minimal-norm attack on every clean symbol vs the geometric boundary vector."""
    rows = []
    for s in range(spec.order):
        res = minimal_norm_attack(model, spec.points[s], s, cfg, spec)
        oracle = nearest_boundary_vector(s, spec)
        tied = boundary_vectors(s, spec)
        cos = max(_cosine(res.delta, v) for v in tied)
        rows.append(GapRow(s, spec.labels[s], res.norm, abs(oracle), res.norm / abs(oracle), cos,
                           len(tied) == 1))
    return rows


def _cosine(a: complex, b: complex) -> float:
    na, nb = abs(a), abs(b)
    if na == 0 or nb == 0:
        return 0.0
    return float((a.real * b.real + a.imag * b.imag) / (na * nb))


GAP_HEADER = ["symbol", "label", "attack_norm", "oracle_norm", "ratio", "cosine"]


def write_gap_csv(rows: list[GapRow], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(GAP_HEADER)
            for r in rows:
                w.writerow([r.symbol, r.label, f"{r.attack_norm:.6g}", f"{r.oracle_norm:.6g}",
                            f"{r.ratio:.6g}", f"{r.cosine:.6g}"])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def targeted_oracle_norm(src: int, dst: int, spec: ConstellationSpec) -> float:
    return abs(targeted_vector(src, dst, spec))
