"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation or data error.
All randomness is controlled by --seed; running a command twice with the same
arguments produces byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import dataset as ds
from . import model as mdl
from .combiner import combine, extract_abbrev_pairs, propagate_abbrevs
from .errors import TaggerError
from .eval import evaluate
from .matcher import tag_dictionary, trie_build
from .ontology import (
    build_dictionary,
    load_dictionary,
    load_ontology,
    save_dictionary,
    select_subontology,
)
from .pipeline import Tagger
from .pubtator import (
    Document,
    load_text_directory,
    read_pubtator,
    write_pubtator,
)
from .recognizer import RecognizerConfig, tag_ml
from .textproc import analyze, tokenize

log = logging.getLogger(__name__)

THREADS_ENV = "ONTOTAG_THREADS"


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    dict_path: str | None = None
    model_path: str | None = None
    threshold: float = 0.95
    root: str | None = None
    disable_dict: bool = False
    disable_ml: bool = False
    threads: int = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ontotag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dict", help="compile an ontology into a dictionary TSV")
    p.add_argument("--ontology", required=True, help="OBO file")
    p.add_argument("--root", help="restrict to this concept and its descendants")
    p.add_argument("--output", required=True, help="dictionary TSV to write")
    p.set_defaults(func=cmd_build_dict)

    p = sub.add_parser("gen-dataset", help="build a training/dev dataset")
    p.add_argument("--dict", required=True, dest="dict_path")
    p.add_argument("--corpus", required=True, help="text dir or line-per-doc file")
    p.add_argument("--negatives", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dev-fraction", type=float, default=0.1)
    p.add_argument("--output", required=True, help="training TSV to write")
    p.add_argument("--dev-output", help="dev TSV to write")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train the n-gram classifier")
    p.add_argument("--input", required=True, help="training TSV")
    p.add_argument("--dev", help="dev TSV for early stopping")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=0.0001)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--patience", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="annotate documents")
    p.add_argument("--input", required=True, help="PubTator file or directory of .txt")
    p.add_argument("--dict", dest="dict_path")
    p.add_argument("--model")
    p.add_argument("--output", required=True, help="PubTator file to write")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--disable-dict", action="store_true")
    p.add_argument("--disable-ml", action="store_true")
    p.add_argument(
        "--format",
        choices=("auto", "pubtator", "text"),
        default="auto",
        help="input format; auto = directory means text, file means pubtator",
    )
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--gold", required=True, help="PubTator or doc-level TSV")
    p.add_argument("--pred", required=True, help="PubTator predictions")
    p.add_argument("--level", choices=("auto", "doc", "mention"), default="auto")
    p.add_argument("--json", dest="json_path", help="write the full report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "sweep-negatives", help="retrain at several negative counts and score each"
    )
    p.add_argument("--dict", required=True, dest="dict_path")
    p.add_argument("--corpus", required=True)
    p.add_argument("--counts", required=True, help="comma-separated negative counts")
    p.add_argument("--gold", required=True, help="PubTator gold to tag and score")
    p.add_argument("--output", help="TSV table to write (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.0001)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--dev-fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_sweep_negatives)

    p = sub.add_parser("tune-threshold", help="pick the best threshold on dev gold")
    p.add_argument("--model", required=True)
    p.add_argument("--dict", required=True, dest="dict_path")
    p.add_argument("--gold", required=True, help="PubTator dev gold")
    p.add_argument("--grid", required=True, help="comma-separated thresholds")
    p.add_argument("--output", help="TSV table to write (default stdout)")
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("serve", help="run the HTTP tagging service")
    p.add_argument("--dict", dest="dict_path")
    p.add_argument("--model")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--disable-dict", action="store_true")
    p.add_argument("--disable-ml", action="store_true")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def _check_threshold(value: float) -> float:
    if not 0.0 < value < 1.0:
        raise UsageError(f"--threshold must be in (0, 1), got {value}")
    return value


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "4")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc


def _load_corpus(path) -> list[str]:
    p = Path(path)
    if p.is_dir():
        texts = []
        for file in sorted(p.glob("*.txt")):
            texts.append(file.read_text(encoding="utf-8"))
        if not texts:
            raise TaggerError(f"{path}: no .txt files found")
        return texts
    with open(p, encoding="utf-8") as fp:
        return [line.rstrip("\n") for line in fp if line.strip()]


def cmd_build_dict(args) -> int:
    graph = load_ontology(args.ontology)
    scope = select_subontology(graph, args.root) if args.root else None
    dictionary = build_dictionary(graph, scope)
    save_dictionary(dictionary, args.output)
    print(f"concepts\t{len(scope) if scope is not None else len(graph)}")
    print(f"entries\t{dictionary.term_count}")
    return 0


def cmd_gen_dataset(args) -> int:
    dictionary = load_dictionary(args.dict_path)
    corpus = _load_corpus(args.corpus)
    spec = ds.DatasetSpec(
        negative_count=args.negatives,
        rng_seed=args.seed,
        dev_fraction=args.dev_fraction,
    )
    positives = ds.generate_positives(dictionary)
    negatives = ds.sample_negatives(corpus, dictionary, spec) if args.negatives else []
    train, dev = ds.assemble(positives, negatives, spec)
    ds.save_instances(train, args.output)
    if args.dev_output:
        ds.save_instances(dev, args.dev_output)
    print(f"positives\t{len(positives)}")
    print(f"negatives\t{len(negatives)}")
    print(f"train\t{len(train)}")
    print(f"dev\t{len(dev)}")
    return 0


def _train_config(args) -> mdl.TrainConfig:
    return mdl.TrainConfig(
        dim=args.dim,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        rng_seed=args.seed,
    )


def cmd_train(args) -> int:
    train_set = ds.load_instances(args.input)
    dev_set = ds.load_instances(args.dev) if args.dev else []
    if not dev_set:
        log.warning("no dev set; early stopping disabled, running all epochs")
    model = mdl.train(train_set, dev_set, _train_config(args))
    mdl.save_model(model, args.output)
    print(f"labels\t{len(model.labels)}")
    print(f"features\t{len(model.vocab)}")
    return 0


def _load_input_documents(args) -> list[Document]:
    path = Path(args.input)
    fmt = args.format
    if fmt == "auto":
        fmt = "text" if path.is_dir() else "pubtator"
    if fmt == "text":
        if not path.is_dir():
            raise UsageError("--format text expects a directory of .txt files")
        return load_text_directory(path)
    return [doc for doc, _ in read_pubtator(path)]


def cmd_tag(args) -> int:
    if args.disable_dict and args.disable_ml:
        raise UsageError("--disable-dict and --disable-ml cannot both be set")
    use_dict = not args.disable_dict
    use_ml = not args.disable_ml
    if use_dict and not args.dict_path:
        raise UsageError("--dict is required unless --disable-dict is set")
    if use_ml and not args.model:
        raise UsageError("--model is required unless --disable-ml is set")
    config = RecognizerConfig(threshold=_check_threshold(args.threshold))
    tagger = Tagger.load(
        dict_path=args.dict_path,
        model_path=args.model,
        config=config,
        use_dict=use_dict,
        use_ml=use_ml,
    )
    docs = _load_input_documents(args)

    def work(doc: Document):
        try:
            return doc, tagger.tag(doc.text)
        except Exception as exc:  # keep going; record the failure
            log.error("document %s failed: %s", doc.doc_id, exc)
            return doc, []

    threads = _thread_count()
    with open(args.output, "w", encoding="utf-8") as out:
        if threads == 1:
            results = map(work, docs)
            for doc, anns in results:
                write_pubtator(out, doc, anns)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for doc, anns in pool.map(work, docs):
                    write_pubtator(out, doc, anns)
    return 0


def _is_pubtator_file(path) -> bool:
    with open(path, encoding="utf-8") as fp:
        for line in fp:
            if not line.strip():
                continue
            parts = line.split("|", 2)
            return len(parts) == 3 and parts[1] in ("t", "a")
    return False


def _read_doc_tsv(path) -> dict[str, set[str]]:
    gold: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise TaggerError(f"{path}: malformed gold line {lineno}")
            gold.setdefault(parts[0], set()).add(parts[1])
    return gold


def _report_lines(report) -> list[str]:
    lines = [f"documents\t{report.doc_count}"]
    lines.append(f"doc_macro_precision\t{report.macro.precision:.6f}")
    lines.append(f"doc_macro_recall\t{report.macro.recall:.6f}")
    lines.append(f"doc_macro_f1\t{report.macro.f1:.6f}")
    if report.micro is not None:
        lines.append(f"mention_micro_precision\t{report.micro.precision:.6f}")
        lines.append(f"mention_micro_recall\t{report.micro.recall:.6f}")
        lines.append(f"mention_micro_f1\t{report.micro.f1:.6f}")
        if report.micro_degenerate:
            lines.append("mention_micro_degenerate\ttrue")
    return lines


def cmd_eval(args) -> int:
    pred_docs = read_pubtator(args.pred)
    pred_anns = {doc.doc_id: anns for doc, anns in pred_docs}
    gold_is_pubtator = _is_pubtator_file(args.gold)
    level = args.level
    if level == "mention" and not gold_is_pubtator:
        raise TaggerError("mention-level evaluation requires PubTator gold")
    if gold_is_pubtator:
        gold_docs = read_pubtator(args.gold)
        gold_mentions = {
            doc.doc_id: [(a.start, a.end, a.label) for a in anns]
            for doc, anns in gold_docs
        }
        token_spans = {
            doc.doc_id: [(t.start, t.end) for t in tokenize(doc.text)]
            for doc, _ in gold_docs
        }
        if level == "doc":
            report = evaluate(
                gold_labels={d: {m[2] for m in ms} for d, ms in gold_mentions.items()},
                pred_anns=pred_anns,
            )
        else:
            report = evaluate(
                gold_mentions=gold_mentions,
                pred_anns=pred_anns,
                token_spans=token_spans,
            )
    else:
        report = evaluate(gold_labels=_read_doc_tsv(args.gold), pred_anns=pred_anns)
    for line in _report_lines(report):
        print(line)
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fp:
            json.dump(report.to_dict(), fp, sort_keys=True, indent=2)
            fp.write("\n")
    return 0


def _parse_int_list(text, flag) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated integers") from exc
    if not values:
        raise UsageError(f"{flag} must not be empty")
    return values


def _gold_eval_inputs(path):
    gold_docs = read_pubtator(path)
    if not gold_docs:
        raise TaggerError(f"{path}: no documents found")
    gold_mentions = {
        doc.doc_id: [(a.start, a.end, a.label) for a in anns]
        for doc, anns in gold_docs
    }
    token_spans = {
        doc.doc_id: [(t.start, t.end) for t in tokenize(doc.text)]
        for doc, _ in gold_docs
    }
    return gold_docs, gold_mentions, token_spans


def cmd_sweep_negatives(args) -> int:
    counts = _parse_int_list(args.counts, "--counts")
    if any(c < 0 for c in counts):
        raise UsageError("--counts must be non-negative")
    _check_threshold(args.threshold)
    dictionary = load_dictionary(args.dict_path)
    corpus = _load_corpus(args.corpus)
    gold_docs, gold_mentions, token_spans = _gold_eval_inputs(args.gold)
    config = _train_config(args)
    rec_config = RecognizerConfig(threshold=args.threshold)
    positives = ds.generate_positives(dictionary)
    trie = trie_build(dictionary)
    rows = []
    for count in counts:
        spec = ds.DatasetSpec(
            negative_count=count,
            rng_seed=args.seed,
            dev_fraction=args.dev_fraction,
        )
        negatives = ds.sample_negatives(corpus, dictionary, spec) if count else []
        train, dev = ds.assemble(positives, negatives, spec)
        model = mdl.train(train, dev, config)
        tagger = Tagger(trie=trie, model=model, config=rec_config)
        pred_anns = {
            doc.doc_id: tagger.tag(doc.text) for doc, _ in gold_docs
        }
        report = evaluate(
            gold_mentions=gold_mentions, pred_anns=pred_anns, token_spans=token_spans
        )
        rows.append(
            (
                count,
                report.micro.precision,
                report.micro.recall,
                report.micro.f1,
                report.macro.precision,
                report.macro.recall,
                report.macro.f1,
            )
        )
    header = (
        "negatives\tmention_precision\tmention_recall\tmention_f1"
        "\tdoc_precision\tdoc_recall\tdoc_f1"
    )
    lines = [header]
    for row in rows:
        lines.append(
            "\t".join([str(row[0])] + [f"{v:.6f}" for v in row[1:]])
        )
    _emit_table(lines, args.output)
    return 0


def cmd_tune_threshold(args) -> int:
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError("--grid expects comma-separated floats") from exc
    if not grid:
        raise UsageError("--grid must not be empty")
    for value in grid:
        if not 0.0 < value < 1.0:
            raise UsageError(f"--grid values must be in (0, 1), got {value}")
    dictionary = load_dictionary(args.dict_path)
    model = mdl.load_model(args.model)
    trie = trie_build(dictionary)
    gold_docs, gold_mentions, token_spans = _gold_eval_inputs(args.gold)
    floor = RecognizerConfig(threshold=min(min(grid) / 2, 0.5))
    cached = []
    for doc, _ in gold_docs:
        sentences = analyze(doc.text)
        dict_anns = []
        ml_anns = []
        for sentence in sentences:
            dict_anns.extend(tag_dictionary(trie, sentence))
            ml_anns.extend(tag_ml(model, sentence, floor))
        cached.append((doc, sentences, dict_anns, ml_anns))
    lines = ["threshold\tmention_f1"]
    best_t = None
    best_f1 = -1.0
    for t in sorted(grid):
        pred_anns = {}
        for doc, sentences, dict_anns, ml_anns in cached:
            kept = [a for a in ml_anns if a.score > t]
            merged = combine(dict_anns, kept)
            pairs = extract_abbrev_pairs(doc.text, sentences)
            pred_anns[doc.doc_id] = propagate_abbrevs(merged, pairs, doc.text)
        report = evaluate(
            gold_mentions=gold_mentions, pred_anns=pred_anns, token_spans=token_spans
        )
        f1 = report.micro.f1
        lines.append(f"{t}\t{f1:.6f}")
        if f1 >= best_f1:
            best_f1 = f1
            best_t = t
    lines.append(f"best\t{best_t}")
    _emit_table(lines, args.output)
    return 0


def _emit_table(lines, output):
    if output:
        with open(output, "w", encoding="utf-8") as fp:
            fp.write("\n".join(lines) + "\n")
    else:
        for line in lines:
            print(line)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    if args.disable_dict and args.disable_ml:
        raise UsageError("--disable-dict and --disable-ml cannot both be set")
    config = RecognizerConfig(threshold=_check_threshold(args.threshold))
    tagger = Tagger.load(
        dict_path=args.dict_path,
        model_path=args.model,
        config=config,
        use_dict=not args.disable_dict and args.dict_path is not None,
        use_ml=not args.disable_ml and args.model is not None,
    )
    uvicorn.run(create_app(tagger), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except TaggerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint():
    sys.exit(main())
