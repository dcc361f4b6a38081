"""Command line: fit a model on a corpus, or serve generation frames."""

from __future__ import annotations

import argparse
import json
import sys

from .serving import serve_stdio, serve_tcp
from .training import AdapterConfig, CorpusUnreadable, TrainingDiverged, fit_lm


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lm-adapter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train the language model on an encoded corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="artifact directory to create")

    p = sub.add_parser("serve", help="serve the wire protocol from an artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--listen", default="stdio", help="'stdio' or HOST:PORT")
    p.add_argument("--temperature", type=float, default=1.0)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fit":
        config = AdapterConfig(
            corpus_path=args.corpus,
            out_dir=args.out,
            epochs=args.epochs,
            learning_rate=args.lr,
            batch_size=args.batch_size,
            device=args.device,
            seed=args.seed,
        )
        try:
            out = fit_lm(config)
        except (CorpusUnreadable, TrainingDiverged) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        log = json.loads((out / "training_log.json").read_text())
        print(f"artifact written to {out}; final loss {log['epoch_mean_loss'][-1]:.4f}")
        return 0

    if args.listen == "stdio":
        serve_stdio(args.artifact, args.temperature)
    else:
        host, _, port = args.listen.rpartition(":")
        serve_tcp(args.artifact, host or "127.0.0.1", int(port), args.temperature)
    return 0


if __name__ == "__main__":
    sys.exit(main())
