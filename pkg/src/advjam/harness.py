"""
End-to-end experiments: SER/BER sweeps over SJR, the oracle-gap report and
the deception run.

Per sweep cell (strategy, SJR): seeded random bits -> modulate -> add
jamming -> optional channel AWGN -> demodulate -> count errors. The bit
payload is shared by every cell of a run; jamming and channel noise are
seeded per cell from (run seed, strategy id, SJR index), so results do not
depend on execution order or on which other strategies are in the run.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from advjam.adversary import AttackConfig, AttackSaturationError
from advjam.channel import NoiseSpec, awgn, budget_from_db
from advjam.constellation import ConstellationSpec, bits_to_symbols, build_qam, nearest_point
from advjam.demod import DemodModel, TrainingError, train_demodulator
from advjam.jammers import DEFAULT_MARGIN, STRATEGIES, Jammer, JammerConfig, deception_jam

log = logging.getLogger(__name__)

CSV_HEADER = ["strategy", "sjr_db", "ser", "ber", "symbols", "errors", "seed"]
DEFAULT_SWAP = {16: ("1100", "1000"), 4: ("00", "01")}


class PipelineError(RuntimeError):
    pass


class DeceptionError(RuntimeError):
    pass


@dataclass
class SweepConfig:
    order: int = 16
    sjr_start: float = 4.0
    sjr_end: float = 16.0
    sjr_step: float = 2.0
    snr_db: float | None = None  # None = noiseless channel
    bits: int = 500_000
    strategies: tuple[str, ...] = ("noise", "phase", "fixed", "aj")
    seed: int = 0
    demod: str = "learned"  # or "mindist"
    margin: float = DEFAULT_MARGIN
    swap: tuple[str, str] | None = None
    workers: int = 1

    def __post_init__(self):
        self.strategies = tuple(self.strategies)
        k = int(np.log2(self.order))
        if self.bits % k:
            raise ValueError(f"bit count {self.bits} is not a multiple of {k}")
        if not self.sjr_step > 0:
            raise ValueError("SJR step must be positive")
        if self.sjr_end < self.sjr_start:
            raise ValueError("SJR grid is empty (end < start)")
        if self.demod not in ("learned", "mindist"):
            raise ValueError(f"unknown demodulator {self.demod!r}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}; expected one of {STRATEGIES}")

    def sjr_grid(self) -> np.ndarray:
        n = int(np.floor((self.sjr_end - self.sjr_start) / self.sjr_step + 1e-9)) + 1
        return np.round(self.sjr_start + self.sjr_step * np.arange(n), 9)


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    sjr_db: float
    ser: float
    ber: float
    symbols: int
    errors: int
    seed: int


def ber_from_symbols(tx, rx, spec: ConstellationSpec) -> tuple[float, float]:
    """(SER, BER) between transmitted and received symbol indices under the Gray labels."""
    tx = np.asarray(tx, dtype=np.int64)
    rx = np.asarray(rx, dtype=np.int64)
    if tx.shape != rx.shape:
        raise ValueError(f"length mismatch: {tx.size} transmitted vs {rx.size} received")
    if tx.size == 0:
        return 0.0, 0.0
    # index == label value, so XOR counts flipped bits
    popcount = np.array([bin(v).count("1") for v in range(spec.order)])
    flips = popcount[tx ^ rx]
    ser = float(np.mean(tx != rx))
    ber = float(flips.sum() / (tx.size * spec.bits_per_symbol))
    return ser, ber


def cell_seed(run_seed: int, strategy: str, sjr_index: int) -> int:
    ss = np.random.SeedSequence([run_seed, STRATEGIES.index(strategy), sjr_index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def payload_bits(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, 0xB175]).integers(0, 2, n, dtype=np.uint8)


def _demodulate(rx, demod: str, model: DemodModel | None, spec: ConstellationSpec):
    if demod == "learned":
        return model.predict(rx)
    return nearest_point(rx, spec)


def run_pipeline(cfg: SweepConfig, model: DemodModel | None = None,
                 attack: AttackConfig | None = None) -> list[SweepRow]:
    """Run every (strategy, SJR) cell of the sweep. Rows come back ordered by strategy, then SJR."""
    if not cfg.strategies:
        return []
    spec = build_qam(cfg.order)
    needs_model = cfg.demod == "learned" or "aj" in cfg.strategies
    if needs_model and model is None:
        log.info("training %d-QAM demodulator (seed %d)", cfg.order, cfg.seed)
        try:
            model = train_demodulator(spec, seed=cfg.seed)
        except TrainingError as exc:
            raise PipelineError(f"demodulator training failed: {exc}") from exc
    if model is not None and model.order != cfg.order:
        raise PipelineError(f"model is {model.order}-ary but the sweep is {cfg.order}-QAM")

    symbols = bits_to_symbols(payload_bits(cfg.bits, cfg.seed), spec)
    tx = spec.points[symbols]
    grid = cfg.sjr_grid()
    swap = cfg.swap or DEFAULT_SWAP[cfg.order]

    # attacks are computed once here; cells share the jammers read-only
    jammers = {}
    for name in cfg.strategies:
        try:
            jammers[name] = Jammer(JammerConfig(name, budget_from_db(1.0, grid[0]), cfg.margin,
                                                swap if name == "deceive" else None),
                                   spec, model, attack)
        except AttackSaturationError as exc:
            raise PipelineError(f"cell ({name}, {grid[0]:g} dB): attack saturated: {exc}") from exc

    def run_cell(name: str, j: int) -> SweepRow:
        sjr = float(grid[j])
        seed = cell_seed(cfg.seed, name, j)
        jam_seed, chan_seed = np.random.SeedSequence(seed).generate_state(2)
        jammer = jammers[name].with_budget(budget_from_db(1.0, sjr))
        rx = tx + jammer(symbols, seed=int(jam_seed))
        if cfg.snr_db is not None:
            rx = awgn(rx, NoiseSpec.from_snr_db(cfg.snr_db, int(chan_seed)))
        ry = _demodulate(rx, cfg.demod, model, spec)
        ser, ber = ber_from_symbols(symbols, ry, spec)
        errors = int(np.count_nonzero(ry != symbols))
        return SweepRow(name, sjr, ser, ber, int(symbols.size), errors, seed)

    cells = [(name, j) for name in cfg.strategies for j in range(len(grid))]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(lambda c: run_cell(*c), cells))
    else:
        rows = [run_cell(*c) for c in cells]
    return rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.6g}"


def write_csv(rows: list[SweepRow], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SweepRow(d["strategy"], float(d["sjr_db"]), float(d["ser"]), float(d["ber"]),
                         int(d["symbols"]), int(d["errors"]), int(d["seed"])) for d in reader]


_COLORS = {"noise": "#1f77b4", "phase": "#2ca02c", "fixed": "#ff7f0e", "aj": "#d62728",
           "deceive": "#9467bd"}


def plot_svg(rows: list[SweepRow], path, width: int = 640, height: int = 420) -> None:
    """SER-vs-SJR curves on a log SER axis, one polyline per strategy.

    Zero SER cannot sit on a log axis, so values are clamped to a floor of
    1/symbols, drawn as a dashed line.
    """
    if not rows:
        raise ValueError("nothing to plot")
    floor = 1.0 / max(r.symbols for r in rows)
    left, right, top, bottom = 64, 120, 20, 48
    pw, ph = width - left - right, height - top - bottom
    xs = [r.sjr_db for r in rows]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    y_lo = np.floor(np.log10(floor))

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(ser):
        return top + (0.0 - np.log10(max(ser, floor))) / (0.0 - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(int(y_lo), 1):
        y = py(10.0**e)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for x in sorted(set(xs)):
        out.append(f'<text x="{px(x):.2f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">SJR (dB)</text>')
    out.append(f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2})">SER</text>')
    yf = py(floor)
    out.append(f'<line x1="{left}" y1="{yf:.2f}" x2="{left + pw}" y2="{yf:.2f}" stroke="#888" '
               f'stroke-dasharray="4 3"/>')
    out.append(f'<text x="{left + pw + 6}" y="{yf + 4:.2f}" fill="#888">floor 1/N</text>')

    names = list(dict.fromkeys(r.strategy for r in rows))
    for k, name in enumerate(names):
        pts = sorted((r.sjr_db, r.ser) for r in rows if r.strategy == name)
        color = _COLORS.get(name, "black")
        coords = " ".join(f"{px(x):.2f},{py(s):.2f}" for x, s in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{coords}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 8}" y1="{ly}" x2="{left + pw + 28}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.8"/>')
        out.append(f'<text x="{left + pw + 32}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


@dataclass
class DeceptionSummary:
    spec: ConstellationSpec
    swap: tuple[str, str]
    confusion: np.ndarray  # confusion[tx, rx]
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = self.confusion.sum(axis=1)

    @property
    def exchanged(self) -> bool:
        """Swapped rows fully exchanged and every other row purely diagonal."""
        a, b = (self.spec.index_of(s) for s in self.swap)
        expected = np.diag(self.counts).astype(self.confusion.dtype)
        expected[a, a] = expected[b, b] = 0
        expected[a, b] = self.counts[a]
        expected[b, a] = self.counts[b]
        return bool(np.array_equal(self.confusion, expected))

    def write_csv(self, path) -> None:
        labels = self.spec.labels
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["tx"] + list(labels))
                for lab, row in zip(labels, self.confusion):
                    w.writerow([lab] + [int(v) for v in row])
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc


def run_deception(spec: ConstellationSpec, swap: tuple[str, str], bits: int, seed: int = 0,
                  model: DemodModel | None = None, margin: float = DEFAULT_MARGIN,
                  attack: AttackConfig | None = None, strict: bool = True) -> DeceptionSummary:
    """Swap two labels with targeted jamming over a random stream and tabulate the confusion matrix.

    With a model, both the targeted displacements and the demodulation use it;
    otherwise the geometric cell projection and minimum-distance decisions are used.
    """
    if swap[0] == swap[1]:
        raise ValueError("deception swap needs two distinct labels")
    for lab in swap:
        spec.index_of(lab)
    symbols = bits_to_symbols(payload_bits(bits, seed), spec)
    rx = spec.points[symbols] + deception_jam(symbols, spec, swap, margin, model, attack)
    ry = _demodulate(rx, "learned" if model is not None else "mindist", model, spec)
    conf = np.zeros((spec.order, spec.order), dtype=np.int64)
    np.add.at(conf, (symbols, ry), 1)
    summary = DeceptionSummary(spec, tuple(swap), conf)
    if strict and not summary.exchanged:
        raise DeceptionError(f"swap {swap[0]}<->{swap[1]} did not exchange cleanly")
    return summary
