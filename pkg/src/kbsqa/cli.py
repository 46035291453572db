"""Command-line front door for batch experiments.

Subcommands: build-index, rank, train, eval, answer. Settings resolve
with the precedence command-line flag > config file > preset default;
the config file is plain ``key=value`` text. Every report file starts
with a "#" header naming the preset and seed, and a second "#" line
carrying the only timestamp, so reruns with a fixed seed are
byte-identical apart from that line.
"""

from __future__ import annotations

import argparse
import json
import os
import pickle
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .embeddings import EmbeddingTable, load_embeddings, with_corpus_frequencies
from .errors import (
    CheckpointError,
    ConfigError,
    KbsqaError,
    MissingFileError,
    TaggingError,
)
from .kb import KnowledgeGraph, NGramIndex, build_index, load_facts
from .matcher import JointMatcher, SymbolTable, preset_config
from .nn import load_checkpoint, save_checkpoint
from .pipeline import (
    Prediction,
    TrainConfig,
    evaluate,
    eval_report_lines,
    eval_report_summary,
    loss_curve_lines,
    build_matcher_vocabularies,
    select_fact,
    train,
)
from .ranking import RankedSubgraph, RankerConfig, rank_subgraph, topn_recall
from .tagging import lexicon_tag, load_questions, oracle_tag
from .text import tokenize

ENV_SEED = "KBSQA_SEED"

META_FORMAT = "JSQA1-meta"

#: n values reported by the recall table (clipped to the configured top-n)
RECALL_TABLE_NS = (1, 2, 3, 5, 10, 20, 50, 100, 200)

PRESET_DEFAULTS = {
    "paper": {
        "tau": 0.9,
        "top_n": 50,
        "cap": 200,
        "loss": "well-order",
        "margin": 0.1,
        "epochs": 20,
        "batch": 32,
        "lr": 0.01,
        "negatives": 20,
        "seed": 0,
        "max_ngram": 1,
    },
    "desk": {
        "tau": 0.9,
        "top_n": 10,
        "cap": 200,
        "loss": "well-order",
        "margin": 0.1,
        "epochs": 30,
        "batch": 8,
        "lr": 0.01,
        "negatives": 4,
        "seed": 0,
        "max_ngram": 1,
    },
}

_SETTING_TYPES = {
    "tau": float,
    "top_n": int,
    "cap": int,
    "loss": str,
    "margin": float,
    "epochs": int,
    "batch": int,
    "lr": float,
    "negatives": int,
    "seed": int,
    "max_ngram": int,
}

_PATH_KEYS = ("facts", "questions", "embeddings", "index", "checkpoint", "report_dir")

# config-file spellings that map onto internal setting names
_KEY_ALIASES = {"lambda": "margin", "top-n": "top_n", "report-dir": "report_dir"}


@dataclass
class RunConfig:
    """Fully resolved settings for one command invocation."""

    preset: str
    facts: Path | None
    questions: Path | None
    embeddings: Path | None
    index: Path | None
    checkpoint: Path | None
    report_dir: Path
    tau: float
    top_n: int
    cap: int
    loss: str
    margin: float
    epochs: int
    batch: int
    lr: float
    negatives: int
    seed: int
    max_ngram: int

    @property
    def loss_kind(self) -> str:
        return self.loss.replace("-", "_")


def read_config_file(path: Path) -> dict[str, str]:
    """Parse a plain key=value settings file ('#' lines are comments)."""
    if not path.exists():
        raise MissingFileError(str(path))
    settings: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = _KEY_ALIASES.get(key.strip(), key.strip().replace("-", "_"))
        settings[key] = value.strip()
    return settings


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, config file, environment, and preset defaults."""
    file_settings = (
        read_config_file(Path(args.config)) if getattr(args, "config", None) else {}
    )
    known = set(_SETTING_TYPES) | set(_PATH_KEYS) | {"preset"}
    for key in file_settings:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")

    preset = getattr(args, "preset", None) or file_settings.get("preset") or "desk"
    if preset not in PRESET_DEFAULTS:
        raise ConfigError(f"preset must be 'paper' or 'desk', got {preset!r}")
    defaults = PRESET_DEFAULTS[preset]

    def setting(name: str):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_settings:
            try:
                return _SETTING_TYPES[name](file_settings[name])
            except ValueError as exc:
                raise ConfigError(f"config key {name}: {exc}") from exc
        if name == "seed" and os.environ.get(ENV_SEED):
            try:
                return int(os.environ[ENV_SEED])
            except ValueError as exc:
                raise ConfigError(f"{ENV_SEED}: {exc}") from exc
        return defaults[name]

    def path_setting(name: str) -> Path | None:
        flag = getattr(args, name, None)
        if flag is not None:
            return Path(flag)
        if name in file_settings:
            return Path(file_settings[name])
        return None

    loss = setting("loss")
    if loss not in ("ranking", "well-order"):
        raise ConfigError(f"loss must be 'ranking' or 'well-order', got {loss!r}")
    return RunConfig(
        preset=preset,
        facts=path_setting("facts"),
        questions=path_setting("questions"),
        embeddings=path_setting("embeddings"),
        index=path_setting("index"),
        checkpoint=path_setting("checkpoint"),
        report_dir=path_setting("report_dir") or Path("reports"),
        tau=setting("tau"),
        top_n=setting("top_n"),
        cap=setting("cap"),
        loss=loss,
        margin=setting("margin"),
        epochs=setting("epochs"),
        batch=setting("batch"),
        lr=setting("lr"),
        negatives=setting("negatives"),
        seed=setting("seed"),
        max_ngram=setting("max_ngram"),
    )


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required for this command")


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_report(path: Path, cfg: RunConfig, lines: list[str]) -> None:
    header = [
        f"# preset={cfg.preset} seed={cfg.seed}",
        f"# generated {_timestamp()}",
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(header + lines) + "\n", encoding="utf-8")


def _load_graph_and_index(cfg: RunConfig) -> tuple[KnowledgeGraph, NGramIndex]:
    """Load the pickled index artifact, or build from the facts file."""
    if cfg.index is not None and cfg.index.exists():
        with open(cfg.index, "rb") as fh:
            artifact = pickle.load(fh)
        return artifact["kg"], artifact["index"]
    _require(cfg, "facts")
    kg = load_facts(cfg.facts)
    return kg, build_index(kg, cfg.max_ngram)


def _load_embedding_table(cfg: RunConfig) -> EmbeddingTable:
    if cfg.embeddings is None:
        return EmbeddingTable(1, {})
    return load_embeddings(cfg.embeddings)


def _ranker_config(cfg: RunConfig) -> RankerConfig:
    return RankerConfig(
        tau=cfg.tau, top_n=cfg.top_n, candidate_cap=max(cfg.cap, cfg.top_n)
    )


def cmd_build_index(cfg: RunConfig) -> int:
    _require(cfg, "facts", "index")
    kg = load_facts(cfg.facts)
    index = build_index(kg, cfg.max_ngram)
    cfg.index.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.index, "wb") as fh:
        pickle.dump({"kg": kg, "index": index, "max_ngram": cfg.max_ngram}, fh)
    print(
        f"indexed {len(kg)} facts ({len(index.postings)} n-grams, "
        f"max n {cfg.max_ngram}) -> {cfg.index}"
    )
    return 0


def _rank_all(
    cfg: RunConfig,
    kg: KnowledgeGraph,
    index: NGramIndex,
    emb: EmbeddingTable,
    questions,
) -> tuple[list[RankedSubgraph], int]:
    """Oracle-tag and rank every question; untaggable ones get empty subgraphs."""
    rcfg = _ranker_config(cfg)
    ranked: list[RankedSubgraph] = []
    untaggable = 0
    for q in questions:
        try:
            tq = oracle_tag(q.text, q.subject)
        except TaggingError:
            ranked.append(RankedSubgraph(question_id=q.question_id, entries=()))
            untaggable += 1
            continue
        ranked.append(rank_subgraph(tq, kg, index, emb, rcfg, question_id=q.question_id))
    return ranked, untaggable


def cmd_rank(cfg: RunConfig) -> int:
    _require(cfg, "questions")
    kg, index = _load_graph_and_index(cfg)
    questions = load_questions(cfg.questions)
    emb = with_corpus_frequencies(
        _load_embedding_table(cfg), [tokenize(q.text) for q in questions]
    )
    ranked, untaggable = _rank_all(cfg, kg, index, emb, questions)

    candidate_lines = ["# question_id\trank\tfact_id\tsubject\tliteral\tsemantic\tcombined"]
    for rs in ranked:
        for position, entry in enumerate(rs.entries, start=1):
            subject = kg.facts[entry.fact_id].subject
            candidate_lines.append(
                f"{rs.question_id}\t{position}\t{entry.fact_id}\t{subject}"
                f"\t{entry.literal:g}\t{entry.semantic:.6f}\t{entry.combined:.6f}"
            )
    _write_report(cfg.report_dir / "rank_candidates.tsv", cfg, candidate_lines)

    golds = [q.subject for q in questions]
    ns = sorted({n for n in RECALL_TABLE_NS if n <= cfg.top_n} | {cfg.top_n})
    recall_lines = [f"tau\t{cfg.tau:g}"]
    for n in ns:
        recall_lines.append(f"top_{n}_recall\t{topn_recall(ranked, golds, n, kg):.6f}")
    recall_lines.append(f"untaggable_count\t{untaggable}")
    recall_lines.append(f"total_questions\t{len(questions)}")
    _write_report(cfg.report_dir / "rank_recall.tsv", cfg, recall_lines)
    print(f"ranked {len(questions)} questions -> {cfg.report_dir}")
    return 0


def _save_meta(cfg: RunConfig, emb: EmbeddingTable, alphabet, word_vocab) -> None:
    meta = {
        "format": META_FORMAT,
        "preset": cfg.preset,
        "seed": cfg.seed,
        "loss": cfg.loss,
        "margin": cfg.margin,
        "tau": cfg.tau,
        "top_n": cfg.top_n,
        "cap": cfg.cap,
        "max_ngram": cfg.max_ngram,
        "alphabet": list(alphabet.symbols),
        "word_vocab": list(word_vocab.symbols),
        "word_log_freq": emb.word_log_freq,
        "floor_log_freq": emb.floor_log_freq,
    }
    meta_path = cfg.checkpoint.with_name(cfg.checkpoint.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def _load_meta(cfg: RunConfig) -> dict:
    meta_path = cfg.checkpoint.with_name(cfg.checkpoint.name + ".meta.json")
    if not meta_path.exists():
        raise MissingFileError(str(meta_path))
    meta = json.loads(meta_path.read_text())
    if meta.get("format") != META_FORMAT:
        raise CheckpointError(f"{meta_path}: unrecognized sidecar format")
    return meta


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, "facts", "questions", "checkpoint")
    kg = load_facts(cfg.facts)
    index = build_index(kg, cfg.max_ngram)
    questions = load_questions(cfg.questions)
    emb = with_corpus_frequencies(
        _load_embedding_table(cfg), [tokenize(q.text) for q in questions]
    )
    alphabet, word_vocab = build_matcher_vocabularies(questions, kg)
    char_config = preset_config(f"{cfg.preset}-char", alphabet)
    word_config = preset_config(f"{cfg.preset}-word", word_vocab)
    tcfg = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch,
        negatives_per_question=cfg.negatives,
        margin=cfg.margin,
        loss_kind=cfg.loss_kind,
        top_n_subgraph=cfg.top_n,
        seed=cfg.seed,
        learning_rate=cfg.lr,
    )
    result = train(
        questions, kg, index, emb, char_config, word_config, tcfg,
        ranker_config=_ranker_config(cfg),
    )
    cfg.checkpoint.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        cfg.checkpoint,
        result.char_matcher.parameter_list() + result.word_matcher.parameter_list(),
    )
    _save_meta(cfg, emb, alphabet, word_vocab)
    _write_report(cfg.report_dir / "loss_curve.tsv", cfg, loss_curve_lines(result.loss_curve))
    final = result.loss_curve[-1] if result.loss_curve else float("nan")
    print(
        f"trained {len(result.loss_curve)} epochs on {len(questions)} questions "
        f"({len(result.skipped_question_ids)} untaggable skipped), "
        f"final loss {final!r} -> {cfg.checkpoint}"
    )
    return 0


def _load_matchers(cfg: RunConfig) -> tuple[JointMatcher, JointMatcher, dict]:
    """Rebuild both matchers from the checkpoint and its sidecar."""
    if not cfg.checkpoint or not cfg.checkpoint.exists():
        raise MissingFileError(str(cfg.checkpoint))
    meta = _load_meta(cfg)

    def rebuild(symbols: list[str]) -> SymbolTable:
        ordered = tuple(symbols)
        return SymbolTable(symbols=ordered, index={s: i for i, s in enumerate(ordered)})

    alphabet = rebuild(meta["alphabet"])
    word_vocab = rebuild(meta["word_vocab"])
    char_config = preset_config(f"{meta['preset']}-char", alphabet)
    word_config = preset_config(f"{meta['preset']}-word", word_vocab)
    char_matcher = JointMatcher(char_config, seed=meta["seed"])
    word_matcher = JointMatcher(word_config, seed=meta["seed"] + 1)
    shapes = char_matcher.parameter_shapes() + word_matcher.parameter_shapes()
    tensors = load_checkpoint(cfg.checkpoint, shapes)
    char_matcher.load_parameter_list(tensors[: len(tensors) // 2])
    word_matcher.load_parameter_list(tensors[len(tensors) // 2 :])
    return char_matcher, word_matcher, meta


def _eval_embeddings(cfg: RunConfig, meta: dict) -> EmbeddingTable:
    """Embedding table carrying the training-corpus frequencies from the sidecar."""
    base = _load_embedding_table(cfg)
    return EmbeddingTable(
        dim=base.dim,
        vectors=base.vectors,
        word_log_freq=meta["word_log_freq"],
        floor_log_freq=meta["floor_log_freq"],
    )


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, "questions", "checkpoint")
    char_matcher, word_matcher, meta = _load_matchers(cfg)
    kg, index = _load_graph_and_index(cfg)
    questions = load_questions(cfg.questions)
    emb = _eval_embeddings(cfg, meta)
    rcfg = _ranker_config(cfg)
    predictions = []
    ranked_all: list[RankedSubgraph] = []
    for q in questions:
        try:
            tq = oracle_tag(q.text, q.subject)
        except TaggingError:
            predictions.append(
                Prediction(q.question_id, None, 0.0, 0.0, 0.0, failure="untaggable")
            )
            ranked_all.append(RankedSubgraph(question_id=q.question_id, entries=()))
            continue
        ranked = rank_subgraph(tq, kg, index, emb, rcfg, question_id=q.question_id)
        ranked_all.append(ranked)
        predictions.append(select_fact(tq, ranked, kg, char_matcher, word_matcher))
    ns = tuple(sorted({n for n in RECALL_TABLE_NS if n <= cfg.top_n} | {cfg.top_n}))
    report = evaluate(questions, predictions, kg, ranked_all, ns)
    _write_report(cfg.report_dir / "eval_report.tsv", cfg, eval_report_lines(report))
    _write_report(cfg.report_dir / "eval_summary.txt", cfg, eval_report_summary(report))
    print(
        f"evaluated {len(questions)} questions: object accuracy "
        f"{report.object_accuracy:.4f} -> {cfg.report_dir}"
    )
    return 0


def cmd_answer(cfg: RunConfig, question_text: str) -> int:
    _require(cfg, "checkpoint")
    char_matcher, word_matcher, meta = _load_matchers(cfg)
    kg, index = _load_graph_and_index(cfg)
    emb = _eval_embeddings(cfg, meta)
    # span lookup wants longer n-grams than unigram retrieval indexes
    tagging_index = index if index.max_n >= 3 else build_index(kg, 3)
    tq = lexicon_tag(question_text, tagging_index)
    ranked = rank_subgraph(tq, kg, index, emb, _ranker_config(cfg), question_id=0)
    prediction = select_fact(tq, ranked, kg, char_matcher, word_matcher)
    print(f"question: {question_text}")
    print(f"mention: {tq.mention}")
    print(f"pattern: {' '.join(tq.pattern_tokens)}")
    if prediction.fact_id is None:
        print("answer: none (empty subgraph)")
        return 1
    fact = kg.facts[prediction.fact_id]
    print(f"subject: {fact.subject}")
    print(f"relation: {fact.relation}")
    print(f"object: {fact.object}")
    print(f"subject_score: {prediction.subject_score:.6f}")
    print(f"relation_score: {prediction.relation_score:.6f}")
    print(f"combined_score: {prediction.combined:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbsqa",
        description="Knowledge-graph simple question answering pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--facts", help="facts TSV (subject<TAB>relation<TAB>object)")
        p.add_argument("--questions", help="questions TSV (subject, relation, object, text)")
        p.add_argument("--embeddings", help="embedding text file (word v1 ... vd)")
        p.add_argument("--index", help="pickled index artifact path")
        p.add_argument("--checkpoint", help="model checkpoint path")
        p.add_argument("--preset", choices=("paper", "desk"), help="configuration preset")
        p.add_argument("--tau", type=float, help="literal/semantic mixing weight")
        p.add_argument("--top-n", dest="top_n", type=int, help="subgraph size")
        p.add_argument("--cap", type=int, help="retrieval candidate cap")
        p.add_argument(
            "--loss", choices=("ranking", "well-order"), help="training loss"
        )
        p.add_argument(
            "--lambda", dest="margin", type=float, help="hinge margin of the loss"
        )
        p.add_argument("--epochs", type=int, help="training epochs")
        p.add_argument("--batch", type=int, help="training batch size")
        p.add_argument("--lr", type=float, help="Adam learning rate")
        p.add_argument(
            "--negatives", type=int, help="sampled negatives per question"
        )
        p.add_argument("--seed", type=int, help=f"RNG seed (or env {ENV_SEED})")
        p.add_argument("--report-dir", dest="report_dir", help="report output directory")

    for name in ("build-index", "rank", "train", "eval"):
        add_common(sub.add_parser(name))
    answer = sub.add_parser("answer")
    add_common(answer)
    answer.add_argument("question", help="question text to answer")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "build-index":
            return cmd_build_index(cfg)
        if args.command == "rank":
            return cmd_rank(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        return cmd_answer(cfg, args.question)
    except KbsqaError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: invalid-argument: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
