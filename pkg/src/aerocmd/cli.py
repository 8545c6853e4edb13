"""Command-line interface: serve, agent, evaluate, and corpus tooling."""

from __future__ import annotations

import argparse
import asyncio
import math
import sys

from . import __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerocmd",
        description="Natural-language drone operations: simulator, translator, console.",
    )
    parser.add_argument("--version", action="version", version=f"aerocmd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the simulator wire service")
    serve.add_argument("--config", help="JSON config file (home, envelope, dt, epoch, ports)")
    serve.add_argument("--host", default=None)
    serve.add_argument("--tcp-port", type=int, default=None)
    serve.add_argument("--ws-port", type=int, default=None)
    serve.add_argument(
        "--sim-speed",
        default=None,
        help="sim seconds per wall second; 'inf' steps as fast as possible",
    )
    serve.set_defaults(func=cmd_serve)

    agent = sub.add_parser("agent", help="interactive operator console")
    agent.add_argument("--endpoint", default="127.0.0.1:41451", metavar="HOST:PORT")
    agent.add_argument("--corpus", default=None, metavar="FILE")
    agent.add_argument("--backend", choices=["retrieval", "external"], default="retrieval")
    agent.add_argument("--backend-url", default=None)
    agent.add_argument("--auto-confirm", action="store_true")
    agent.add_argument("--transcript", default=None, metavar="FILE")
    agent.add_argument("--image-dir", default="images", metavar="DIR")
    agent.set_defaults(func=cmd_agent)

    evaluate = sub.add_parser("evaluate", help="score a translator over a dataset")
    evaluate.add_argument("--dataset", required=True, metavar="FILE")
    evaluate.add_argument("--corpus", required=True, metavar="FILE")
    evaluate.add_argument("--backend", choices=["retrieval", "external"], default="retrieval")
    evaluate.add_argument("--backend-url", default=None)
    evaluate.add_argument("--out", default=None, metavar="DIR", help="write report files here")
    evaluate.add_argument("--no-figures", action="store_true")
    evaluate.set_defaults(func=cmd_evaluate)

    corpus = sub.add_parser("corpus", help="dataset expansion and split tooling")
    corpus_sub = corpus.add_subparsers(dest="corpus_command", required=True)

    expand = corpus_sub.add_parser("expand", help="expand paraphrase templates into a dataset")
    expand.add_argument("--templates", required=True, metavar="FILE")
    expand.add_argument("--seed", type=int, default=42)
    expand.add_argument("--per-family", type=int, default=50)
    expand.add_argument("-o", "--output", required=True, metavar="FILE")
    expand.set_defaults(func=cmd_corpus_expand)

    split = corpus_sub.add_parser("split", help="family-held-out train/heldout split")
    split.add_argument("--dataset", required=True, metavar="FILE")
    split.add_argument("--fraction", type=float, default=0.25)
    split.add_argument("--seed", type=int, default=42)
    split.add_argument("--train-out", required=True, metavar="FILE")
    split.add_argument("--heldout-out", required=True, metavar="FILE")
    split.set_defaults(func=cmd_corpus_split)

    build = corpus_sub.add_parser(
        "build", help="build a retrieval corpus from the variants present in a train set"
    )
    build.add_argument("--templates", required=True, metavar="FILE")
    build.add_argument("--dataset", required=True, metavar="FILE", help="training examples")
    build.add_argument("-o", "--output", required=True, metavar="FILE")
    build.set_defaults(func=cmd_corpus_build)

    return parser


def cmd_serve(args) -> int:
    from .server import ServerConfig, serve_forever

    config = ServerConfig.from_file(args.config) if args.config else ServerConfig()
    overrides = {}
    if args.host is not None:
        overrides["host"] = args.host
    if args.tcp_port is not None:
        overrides["tcp_port"] = args.tcp_port
    if args.ws_port is not None:
        overrides["ws_port"] = args.ws_port
    if args.sim_speed is not None:
        overrides["sim_speed"] = (
            math.inf if args.sim_speed in ("inf", "infinity") else float(args.sim_speed)
        )
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    try:
        asyncio.run(serve_forever(config))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_agent(args) -> int:
    from .agent import SessionConfig, run_session
    from .translator import TranslatorConfig

    cfg = SessionConfig(
        endpoint=args.endpoint,
        corpus_path=args.corpus,
        backend=args.backend,
        backend_url=args.backend_url,
        auto_confirm=args.auto_confirm,
        transcript_path=args.transcript,
        image_output_dir=args.image_dir,
        translator=TranslatorConfig(),
    )
    return run_session(cfg)


def cmd_evaluate(args) -> int:
    from .corpus import load_corpus, load_dataset
    from .evaluator import evaluate, save_report
    from .translator import backend_translate, translate

    dataset = load_dataset(args.dataset)
    corpus = load_corpus(args.corpus)
    if args.backend == "external":
        if not args.backend_url:
            print("error: --backend external requires --backend-url", file=sys.stderr)
            return 2
        translator = lambda utterance: backend_translate(  # noqa: E731
            utterance, {"client": "evaluate"}, args.backend_url
        )
    else:
        translator = lambda utterance: translate(utterance, corpus)  # noqa: E731
    report = evaluate(dataset, translator)
    print(report.table())
    if args.out:
        written = save_report(report, args.out, figures=not args.no_figures)
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_corpus_expand(args) -> int:
    from .corpus import expand_templates, load_templates, save_dataset

    templates = load_templates(args.templates)
    examples = expand_templates(templates, seed=args.seed, per_family=args.per_family)
    save_dataset(examples, args.output)
    print(f"wrote {len(examples)} examples to {args.output}")
    return 0


def cmd_corpus_split(args) -> int:
    from .corpus import load_dataset, save_dataset, split_by_family

    examples = load_dataset(args.dataset)
    result = split_by_family(examples, args.fraction, args.seed)
    save_dataset(result.train, args.train_out)
    save_dataset(result.heldout, args.heldout_out)
    print(f"wrote {len(result.train)} train and {len(result.heldout)} heldout examples")
    for family_id in result.unsplit_families:
        print(f"note: family {family_id!r} has a single variant; kept in train")
    return 0


def cmd_corpus_build(args) -> int:
    from .corpus import build_retrieval_corpus, load_dataset, load_templates, save_corpus

    templates = load_templates(args.templates)
    train = load_dataset(args.dataset)
    corpus = build_retrieval_corpus(templates, train)
    save_corpus(corpus, args.output)
    print(f"wrote {len(corpus)} entries to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
