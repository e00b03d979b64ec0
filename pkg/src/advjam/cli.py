"""Command-line entry point: ``advjam {train,sweep,attack-report,deceive}``."""

from __future__ import annotations

import argparse
import logging
import sys

from advjam.adversary import AttackConfig, AttackSaturationError, oracle_gap_report, write_gap_csv
from advjam.constellation import UnsupportedModulationError, build_qam
from advjam.demod import (
    DEFAULT_PER_CLASS,
    DEFAULT_TRAIN_SNR_DB,
    DemodModel,
    TrainConfig,
    TrainingError,
    generate_dataset,
    train,
)
from advjam.harness import (
    DeceptionError,
    PipelineError,
    SweepConfig,
    plot_svg,
    run_deception,
    run_pipeline,
    write_csv,
)

log = logging.getLogger("advjam")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _order(text: str) -> int:
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid modulation order {text!r}") from None
    if m not in (4, 16):
        raise argparse.ArgumentTypeError("modulation order must be 4 or 16")
    return m


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="advjam", description="Adversarial jamming lab for square QAM.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a learned demodulator")
    t.add_argument("--mod", type=_order, default=16)
    t.add_argument("--snr-db", type=float, default=None,
                   help="training SNR (default: 10 dB for 16QAM, 3 dB for QPSK)")
    t.add_argument("--per-class", type=int, default=DEFAULT_PER_CLASS)
    t.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    t.add_argument("--lr", type=float, default=TrainConfig.lr)
    t.add_argument("--hidden", type=int, default=TrainConfig.hidden)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="SER/BER versus SJR for several jamming strategies")
    s.add_argument("--mod", type=_order, default=16)
    s.add_argument("--strategies", default="noise,phase,fixed,aj")
    s.add_argument("--sjr-start", type=float, default=4.0)
    s.add_argument("--sjr-end", type=float, default=16.0)
    s.add_argument("--sjr-step", type=float, default=2.0)
    s.add_argument("--snr-db", type=float, default=None, help="channel SNR (default: noiseless)")
    s.add_argument("--bits", type=int, default=500_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--demod", choices=("learned", "mindist"), default="learned")
    s.add_argument("--model", default=None, help="weight file (trained in-process if omitted)")
    s.add_argument("--margin", type=float, default=0.10)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", required=True)
    s.add_argument("--svg", default=None)

    a = sub.add_parser("attack-report", help="minimal-norm attack vs geometric oracle, per symbol")
    a.add_argument("--model", required=True)
    a.add_argument("--mod", type=_order, default=16)
    a.add_argument("--out", required=True)

    d = sub.add_parser("deceive", help="targeted label-swap attack and confusion matrix")
    d.add_argument("--mod", type=_order, default=16)
    d.add_argument("--swap", default="1100:1000")
    d.add_argument("--bits", type=int, default=500_000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--model", default=None)
    d.add_argument("--margin", type=float, default=0.10)
    d.add_argument("--out", required=True)
    return p


def _load_model(path, order):
    if path is None:
        return None
    model = DemodModel.load(path)
    if model.order != order:
        raise UsageError(f"model {path} is {model.order}-ary, expected {order}")
    return model


def cmd_train(args) -> None:
    spec = build_qam(args.mod)
    snr = DEFAULT_TRAIN_SNR_DB[args.mod] if args.snr_db is None else args.snr_db
    if args.per_class < 1 or args.epochs < 1:
        raise UsageError("--per-class and --epochs must be >= 1")
    ds = generate_dataset(spec, args.per_class, snr, args.seed)
    model = train(ds, TrainConfig(hidden=args.hidden, epochs=args.epochs, lr=args.lr,
                                  seed=args.seed), order=args.mod)
    clean = (model.predict(spec.points) == range(spec.order)).mean()
    model.save(args.out)
    log.info("saved %s (clean accuracy %.4f, loss %.5f)", args.out, clean, model.meta["final_loss"])


def cmd_sweep(args) -> None:
    strategies = tuple(s for s in args.strategies.split(",") if s)
    try:
        cfg = SweepConfig(order=args.mod, sjr_start=args.sjr_start, sjr_end=args.sjr_end,
                          sjr_step=args.sjr_step, snr_db=args.snr_db, bits=args.bits,
                          strategies=strategies, seed=args.seed, demod=args.demod,
                          margin=args.margin, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    model = _load_model(args.model, args.mod)
    rows = run_pipeline(cfg, model)
    write_csv(rows, args.csv)
    if args.svg and rows:
        plot_svg(rows, args.svg)
    for r in rows:
        log.info("%-7s %6.2f dB  SER %.6f  BER %.6f", r.strategy, r.sjr_db, r.ser, r.ber)


def cmd_attack_report(args) -> None:
    spec = build_qam(args.mod)
    model = _load_model(args.model, args.mod)
    rows = oracle_gap_report(model, spec, AttackConfig())
    write_gap_csv(rows, args.out)
    for r in rows:
        log.info("%s  attack %.5f  oracle %.5f  ratio %.4f  cos %.4f",
                 r.label, r.attack_norm, r.oracle_norm, r.ratio, r.cosine)


def cmd_deceive(args) -> None:
    spec = build_qam(args.mod)
    parts = args.swap.split(":")
    if len(parts) != 2 or parts[0] == parts[1]:
        raise UsageError(f"--swap expects two distinct labels A:B, got {args.swap!r}")
    for lab in parts:
        if lab not in spec.labels:
            raise UsageError(f"label {lab!r} is not a {args.mod}-QAM label")
    if args.bits % spec.bits_per_symbol:
        raise UsageError(f"--bits must be a multiple of {spec.bits_per_symbol}")
    model = _load_model(args.model, args.mod)
    summary = run_deception(spec, (parts[0], parts[1]), args.bits, args.seed, model=model,
                            margin=args.margin, strict=False)
    summary.write_csv(args.out)
    if not summary.exchanged:
        raise DeceptionError(f"swap {args.swap} did not exchange cleanly; see {args.out}")
    log.info("swap %s exchanged cleanly over %d symbols", args.swap, int(summary.counts.sum()))


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "attack-report": cmd_attack_report,
            "deceive": cmd_deceive}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, UnsupportedModulationError) as exc:
        print(f"advjam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, AttackSaturationError, PipelineError, DeceptionError, OSError,
            ValueError) as exc:
        print(f"advjam: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
