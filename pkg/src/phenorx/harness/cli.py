"""Command-line pipeline: generate, balance, train, report, round-trip.

Every subcommand resolves one ExperimentConfig (preset, optional config
file, ``--scale`` overrides), writes its outputs into the run directory,
and records them in ``manifest.json`` with content hashes. Report stages
write CSV first and render a PNG of the same data alongside it. Failures
exit nonzero with one machine-parseable line on stderr
(``error: <kind>: <message>``) and remove any partially written outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from .config import (ExperimentConfig, HarnessError, apply_override,
                     config_sha256, config_to_text, load_config, preset_config)
from .rundir import RunDir

CONFIG_FILE = "config.ini"


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="experiment config file (INI)")
    common.add_argument("--preset", choices=("desk", "paper", "tiny"),
                        help="scale preset when no --config is given")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the experiment seed")
    common.add_argument("--out", metavar="DIR",
                        help="override the run directory")
    common.add_argument("--scale", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    return common


def resolve_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise HarnessError("--config and --preset are mutually exclusive")
    if args.config:
        config = load_config(args.config)
    else:
        config = preset_config(args.preset or "desk")
    for assignment in args.scale:
        config = apply_override(config, assignment)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.out is not None:
        config = dataclasses.replace(config, out=args.out)
    return config


def open_run(config: ExperimentConfig) -> RunDir:
    run = RunDir(config.out, config_sha256=config_sha256(config),
                 seed=config.seed)
    with run.stage("config") as stage:
        stage.path(CONFIG_FILE).write_text(config_to_text(config),
                                           encoding="utf-8")
    return run


def _generator_config(config: ExperimentConfig):
    from ..corpus.generator import GeneratorConfig

    return GeneratorConfig(
        **dataclasses.asdict(config.generator),
        seed=config.seed,
        preset="paper" if config.preset == "paper" else "desk",
    )


def _default(path_arg: str | None, run: RunDir, name: str) -> Path:
    return Path(path_arg) if path_arg else run.root / name


def _read_records(path: Path):
    from ..corpus.io import read_corpus

    if not path.exists():
        raise HarnessError(f"corpus file {path} not found; run gen-corpus first")
    return read_corpus(path)


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ----------------------------------------------------------------- corpus


def cmd_gen_corpus(args) -> int:
    from collections import Counter

    from ..corpus.generator import generate_corpus
    from ..corpus.io import write_corpus
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    records, truth = generate_corpus(_generator_config(config))
    histogram = Counter(r.phenotype.primary_icd9 for r in records)
    codes = sorted(histogram)

    with run.stage("gen-corpus") as stage:
        write_corpus(stage.path("corpus.jsonl"), records)
        _write_rows(
            stage.path("profiles.csv"),
            ["disease_id", "icd9", "category", "schedule", "zipf_exponent",
             "template", "alternates"],
            [[p.disease_id, p.icd9, p.category, p.schedule,
              f"{p.zipf_exponent:.6g}",
              " ".join(str(c) for c in p.template),
              " ".join(str(c) for c in p.alternates)]
             for p in truth.profiles],
        )
        _write_rows(stage.path("class_histogram.csv"),
                    ["icd9", "records"],
                    [[code, histogram[code]] for code in codes])
        figures.bars_png(stage.path("class_histogram.png"), codes,
                         [histogram[code] for code in codes],
                         "records per primary disease", "records")
    print(f"wrote {len(records)} records for {len(codes)} diseases "
          f"to {run.root / 'corpus.jsonl'}")
    return 0


def cmd_balance(args) -> int:
    from collections import Counter

    from ..balance import balance_corpus, uniform_cap
    from ..corpus.io import write_corpus
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    section = config.balance

    if section.strategy == "none":
        balanced = list(records)
    elif section.strategy == "uniform":
        labels = [r.phenotype.primary_icd9 for r in records]
        keep = sorted(uniform_cap(labels, section.per_class_cap, config.seed))
        balanced = [records[i] for i in keep]
    elif section.strategy == "medoid":
        balanced = balance_corpus(records, section.per_class_cap, config.seed,
                                  sample_ceiling=section.sample_ceiling)
    else:
        raise HarnessError(
            f"unknown balance strategy {section.strategy!r}; "
            "choose uniform, medoid, or none")

    before = Counter(r.phenotype.primary_icd9 for r in records)
    after = Counter(r.phenotype.primary_icd9 for r in balanced)
    codes = sorted(before)
    with run.stage("balance") as stage:
        write_corpus(stage.path("balanced.jsonl"), balanced)
        _write_rows(stage.path("balance_histogram.csv"),
                    ["icd9", "before", "after"],
                    [[code, before[code], after[code]] for code in codes])
        figures.bars_png(stage.path("balance_histogram.png"), codes,
                         [after[code] for code in codes],
                         f"records per class after {section.strategy} balancing",
                         "records")
    print(f"kept {len(balanced)} of {len(records)} records "
          f"(strategy={section.strategy}, cap={section.per_class_cap})")
    return 0


# ----------------------------------------------------------------- training


def cmd_train_rcnn(args) -> int:
    import numpy as np

    from .. import classifier
    from ..corpus.codec import encode_prescription
    from ..corpus.labels import HEAD_NAMES, LabelSpace
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    if args.corpus:
        corpus_path = Path(args.corpus)
    elif (run.root / "balanced.jsonl").exists():
        corpus_path = run.root / "balanced.jsonl"
    else:
        corpus_path = run.root / "corpus.jsonl"
    records = _read_records(corpus_path)
    space = LabelSpace.from_records(records)
    vectors = np.stack([encode_prescription(r.prescription) for r in records])
    labels = space.label_matrix(records)

    section = config.rcnn
    builder = (classifier.ClassifierConfig.paper if config.preset == "paper"
               else lambda **kw: classifier.ClassifierConfig.desk(space, **kw))
    classifier_config = builder(learning_rate=section.learning_rate,
                                lr_halflife=section.lr_halflife,
                                batch_size=section.batch_size)
    model = classifier.build(classifier_config, seed=config.seed)
    model, curve = classifier.train(model, vectors, labels,
                                    epochs=section.epochs, seed=config.seed)
    _, test_idx = classifier.split_train_test(len(records), config.seed)
    report = classifier.evaluate(model, vectors[test_idx], labels[test_idx])

    with run.stage("train-rcnn") as stage:
        stage.path("rcnn.bin")
        classifier.save(model, stage.path("rcnn.json").with_suffix(""))
        _write_rows(
            stage.path("rcnn_curve.csv"),
            ["epoch", "train_loss", "test_loss",
             *[f"accuracy_{name}" for name in HEAD_NAMES]],
            [[c.epoch, f"{c.train_loss:.6f}", f"{c.test_loss:.6f}",
              *[f"{a:.6f}" for a in c.head_accuracy]] for c in curve],
        )
        classifier.write_evaluation_csv(stage.path("rcnn_eval.csv"), report)
        classifier.write_confusion_csv(stage.path("rcnn_confusion.csv"),
                                       report.confusion[0],
                                       space.class_names("primary"))
        if curve:
            figures.training_curve_png(stage.path("rcnn_curve.png"), curve)
        figures.matrix_png(stage.path("rcnn_confusion.png"),
                           report.confusion[0], "primary-head confusion",
                           "predicted", "true")
    print(f"trained {section.epochs} epochs on {corpus_path.name}; "
          f"held-out primary accuracy {report.accuracy[0]:.4f}")
    return 0


def cmd_train_arnn(args) -> int:
    from .. import translator
    from ..corpus.tokens import build_source_vocab, build_target_vocab
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    source_vocab = build_source_vocab(records)
    target_vocab = build_target_vocab(records)
    pairs = translator.make_pairs(records, source_vocab, target_vocab)

    section = config.arnn
    translator_config = translator.ArnnConfig(
        source_vocab=source_vocab,
        target_vocab=target_vocab,
        layers=section.layers,
        hidden=section.hidden,
        embedding=section.embedding,
        learning_rate=section.learning_rate,
        lr_halflife=section.lr_halflife,
        batch_size=section.batch_size,
        beam_width=section.beam_width,
        clip_norm=section.clip_norm,
    )
    model = translator.build(translator_config, seed=config.seed)
    model, curve = translator.train(model, pairs, epochs=section.epochs,
                                    seed=config.seed)

    with run.stage("train-arnn") as stage:
        stage.path("arnn.bin")
        translator.save(model, stage.path("arnn.json").with_suffix(""))
        translator.write_perplexity_csv(stage.path("arnn_perplexity.csv"), curve)
        if curve:
            figures.perplexity_png(stage.path("arnn_perplexity.png"), curve)
    last = f"{curve[-1].test:.3f}" if curve else "n/a"
    print(f"trained {section.epochs} epochs on {len(pairs)} pairs; "
          f"test perplexity {last}")
    return 0


# ----------------------------------------------------------------- reports


def cmd_classify(args) -> int:
    import numpy as np

    from .. import classifier
    from ..corpus.codec import encode_prescription
    from ..corpus.labels import HEAD_NAMES, LabelSpace
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    model = classifier.load(_default(args.checkpoint, run, "rcnn"))
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    space = LabelSpace.from_records(records)
    if tuple(model.config.head_sizes) != tuple(space.head_sizes):
        raise HarnessError(
            "vocabulary mismatch: checkpoint heads "
            f"{tuple(model.config.head_sizes)} do not fit this corpus "
            f"{tuple(space.head_sizes)}")

    train_idx, test_idx = classifier.split_train_test(len(records), config.seed)
    chosen = {"train": train_idx, "test": test_idx,
              "all": np.arange(len(records))}[args.split]
    vectors = np.stack([encode_prescription(records[i].prescription)
                        for i in chosen])
    labels = space.label_matrix([records[i] for i in chosen])
    report = classifier.evaluate(model, vectors, labels)
    predicted = classifier.predict(model, vectors)

    names = {head: space.class_names(head) for head in HEAD_NAMES}
    rows = []
    for row, true_row, pred_row in zip(chosen, labels, predicted):
        cells = [int(row)]
        for h, head in enumerate(HEAD_NAMES):
            cells.append(names[head][true_row[h]])
            cells.append(names[head][pred_row[h]])
        rows.append(cells)

    with run.stage("classify") as stage:
        classifier.write_evaluation_csv(stage.path("classify_eval.csv"), report)
        classifier.write_confusion_csv(stage.path("classify_confusion.csv"),
                                       report.confusion[0],
                                       space.class_names("primary"))
        _write_rows(
            stage.path("predictions.csv"),
            ["record", *[c for head in HEAD_NAMES
                         for c in (f"true_{head}", f"predicted_{head}")]],
            rows,
        )
        figures.matrix_png(stage.path("classify_confusion.png"),
                           report.confusion[0], "primary-head confusion",
                           "predicted", "true")
    print(f"classified {report.n_examples} records ({args.split} split); "
          f"primary accuracy {report.accuracy[0]:.4f}")
    return 0


def _phenotype_from_flags(args):
    from ..corpus.types import Phenotype

    return Phenotype(
        primary_icd9=args.icd9,
        secondary_icd9=args.secondary,
        tertiary_icd9=args.tertiary,
        sex=args.sex,
        age=args.age,
        month=args.month,
        year=args.year,
    )


def cmd_translate(args) -> int:
    from .. import translator
    from ..corpus.tokens import phenotype_tokens
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    model = translator.load(_default(args.checkpoint, run, "arnn"))
    phenotype = _phenotype_from_flags(args)
    result = translator.translate(model, phenotype)
    rendered = translator.render_prescription(result.prescription)
    source = "; ".join(phenotype_tokens(phenotype))
    target_tokens = [model.config.target_vocab.token(i)
                     for i in result.tokens.ids]

    with run.stage("translate") as stage:
        stage.path("translation.txt").write_text(
            f"PHENOTYPE: {source}\nPRESCRIPTION: {rendered}\n",
            encoding="utf-8")
        _write_rows(stage.path("translate_attention.csv"),
                    ["target_token", *phenotype_tokens(phenotype)],
                    [[token, *[f"{w:.6f}" for w in row]]
                     for token, row in zip(target_tokens, result.attention)])
        figures.matrix_png(stage.path("translate_attention.png"),
                           result.attention, "decoder attention",
                           "source position", "decode step")
    print(f"PHENOTYPE: {source}")
    print(f"PRESCRIPTION: {rendered}")
    return 0


def cmd_perplexity(args) -> int:
    from .. import translator
    from ..corpus.tokens import bucket_of
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    model = translator.load(_default(args.checkpoint, run, "arnn"))
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    pairs = translator.make_pairs(records, model.config.source_vocab,
                                  model.config.target_vocab)
    if args.split != "all":
        from ..classifier import split_train_test

        train_idx, test_idx = split_train_test(len(pairs), config.seed)
        chosen = train_idx if args.split == "train" else test_idx
        pairs = [pairs[i] for i in chosen]

    overall = translator.perplexity(model, pairs)
    by_bucket = {}
    for bucket in model.config.buckets:
        subset = [p for p in pairs if bucket_of(p[1]) == bucket]
        if subset:
            by_bucket[bucket] = translator.perplexity(model, subset)

    with run.stage("perplexity") as stage:
        _write_rows(stage.path("perplexity.csv"),
                    ["bucket", "pairs", "perplexity"],
                    [["all", len(pairs), f"{overall:.6f}"],
                     *[[bucket,
                        sum(1 for p in pairs if bucket_of(p[1]) == bucket),
                        f"{ppl:.6f}"] for bucket, ppl in by_bucket.items()]])
        figures.bars_png(stage.path("perplexity.png"),
                         ["all", *[str(b) for b in by_bucket]],
                         [overall, *by_bucket.values()],
                         f"perplexity ({args.split} split)", "perplexity")
    print(f"perplexity {overall:.4f} over {len(pairs)} pairs ({args.split} split)")
    return 0


# ----------------------------------------------------------------- analysis


def _read_confusion_csv(path: Path):
    import numpy as np

    if not path.exists():
        raise HarnessError(f"confusion file {path} not found; "
                           "run train-rcnn or classify first")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    matrix = np.array([[float(cell) for cell in row[1:]] for row in rows[1:]],
                      dtype=np.float64)
    if matrix.shape != (len(names), len(names)):
        raise HarnessError(f"confusion file {path} is not square")
    return names, matrix


def _read_categories(path: Path) -> dict[str, str]:
    if not path.exists():
        return {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return {row["icd9"]: f"category-{row['category']}" for row in reader}


def cmd_analyze(args) -> int:
    import numpy as np

    from .. import analysis
    from ..analysis.common import write_labeled_csv
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    names, counts = _read_confusion_csv(
        _default(args.confusion, run, "rcnn_confusion.csv"))
    categories = _read_categories(_default(args.profiles, run, "profiles.csv"))
    section = config.analysis

    affinity = analysis.symmetrize(counts)
    laplacian = analysis.unnormalized_laplacian(affinity)
    eigenvalues, _ = analysis.eigendecompose(laplacian)
    coords = analysis.spectral_embed(affinity, k=section.spectral_k)

    if section.cluster_on == "spectral":
        points = coords
    elif section.cluster_on == "affinity":
        points = affinity
    else:
        raise HarnessError(f"unknown cluster_on {section.cluster_on!r}; "
                           "choose spectral or affinity")
    deltas = points[:, None, :] - points[None, :, :]
    distances = np.sqrt((deltas ** 2).sum(axis=2))
    dendrogram = analysis.hierarchical_cluster(distances, labels=names,
                                               linkage=section.linkage)

    with run.stage("analyze") as stage:
        write_labeled_csv(stage.path("affinity.csv"), affinity, names, names,
                          corner="class")
        _write_rows(stage.path("eigenvalues.csv"), ["index", "eigenvalue"],
                    [[i, f"{v:.10g}"] for i, v in enumerate(eigenvalues)])
        write_labeled_csv(stage.path("spectral_coords.csv"), coords, names,
                          [f"dim{i}" for i in range(coords.shape[1])],
                          corner="class")
        stage.path("dendrogram.nwk").write_text(dendrogram.newick() + "\n",
                                                encoding="utf-8")
        figures.eigenvalues_png(stage.path("eigenvalues.png"), eigenvalues)
        groups = [categories.get(name, "uncategorized") for name in names]
        figures.scatter_png(stage.path("spectral_coords.png"), coords[:, :3],
                            groups, "spectral embedding")
        figures.dendrogram_png(stage.path("dendrogram.png"), dendrogram)
        if section.cut_k > 0:
            assignment = dendrogram.cut(section.cut_k)
            _write_rows(stage.path("clusters.csv"), ["class", "cluster"],
                        [[name, int(c)] for name, c in zip(names, assignment)])
        if categories:
            labels, matrix = analysis.category_distances(coords, groups)
            write_labeled_csv(stage.path("category_distances.csv"), matrix,
                              list(labels), list(labels), corner="category")
    print(f"analyzed {len(names)} classes; "
          f"{int(np.sum(np.asarray(eigenvalues) < 1e-9))} zero eigenvalue(s)")
    return 0


def cmd_probe(args) -> int:
    from .. import classifier
    from ..analysis import single_component_probe
    from ..analysis.common import write_labeled_csv
    from ..corpus.labels import LabelSpace
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    model = classifier.load(_default(args.checkpoint, run, "rcnn"))
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    space = LabelSpace.from_records(records)
    if args.components:
        component_ids = sorted({int(c) for c in args.components.split(",")})
    else:
        component_ids = sorted({cid for r in records
                                for cid in r.prescription.component_ids})

    result = single_component_probe(model, component_ids,
                                    linkage=config.analysis.linkage)
    row_labels = [f"comp:{cid}" for cid in component_ids]

    with run.stage("probe") as stage:
        write_labeled_csv(stage.path("probe_matrix.csv"), result.matrix,
                          row_labels, space.class_names("primary"),
                          corner="component")
        stage.path("probe_dendrogram.nwk").write_text(
            result.dendrogram.newick() + "\n", encoding="utf-8")
        figures.matrix_png(stage.path("probe_matrix.png"), result.matrix,
                           "single-component class probabilities",
                           "primary class", "component")
        figures.dendrogram_png(stage.path("probe_dendrogram.png"),
                               result.dendrogram)
    print(f"probed {len(component_ids)} components against "
          f"{space.n_diseases} classes")
    return 0


def cmd_tsne(args) -> int:
    from .. import translator
    from ..analysis import tsne
    from . import figures

    config = resolve_config(args)
    run = open_run(config)
    model = translator.load(_default(args.checkpoint, run, "arnn"))
    vocab = model.config.target_vocab
    embeddings = translator.export_decoder_embeddings(model)
    kept = [i for i, token in enumerate(vocab.tokens) if ":" in token]
    tokens = [vocab.tokens[i] for i in kept]
    section = config.analysis

    result = tsne(embeddings[kept], out_dim=section.tsne_out_dim,
                  perplexity=section.tsne_perplexity,
                  iterations=section.tsne_iterations, seed=config.seed,
                  learning_rate=section.tsne_learning_rate or None)

    with run.stage("tsne") as stage:
        _write_rows(stage.path("tsne_coords.csv"),
                    ["token", *[f"dim{i}" for i in range(result.coords.shape[1])]],
                    [[token, *[f"{v:.10g}" for v in row]]
                     for token, row in zip(tokens, result.coords)])
        _write_rows(stage.path("tsne_kl.csv"), ["iteration", "kl"],
                    [[it, f"{kl:.10g}"] for it, kl in result.kl_checkpoints])
        kinds = [token.partition(":")[0] for token in tokens]
        figures.scatter_png(stage.path("tsne_coords.png"), result.coords,
                            kinds, "decoder-embedding t-SNE")
    print(f"embedded {len(tokens)} target tokens; "
          f"final KL {result.kl_checkpoints[-1][1]:.4f}")
    return 0


def cmd_roundtrip(args) -> int:
    from .. import classifier, translator
    from ..corpus.labels import LabelSpace
    from . import figures
    from .roundtrip import ROUNDTRIP_HEADS, roundtrip_check

    config = resolve_config(args)
    run = open_run(config)
    rcnn = classifier.load(_default(args.rcnn, run, "rcnn"))
    arnn = translator.load(_default(args.arnn, run, "arnn"))
    records = _read_records(_default(args.corpus, run, "corpus.jsonl"))
    space = LabelSpace.from_records(records)

    _, test_idx = classifier.split_train_test(len(records), config.seed)
    section = config.roundtrip
    phenotypes = [records[i].phenotype
                  for i in test_idx[:section.n_phenotypes]]
    report = roundtrip_check(rcnn, arnn, phenotypes, space)

    chance = 1.0 / space.n_diseases
    ratio = report.primary_match / chance
    met = (report.primary_match >= section.min_primary_match
           and ratio >= section.min_chance_ratio)
    summary_lines = [
        f"phenotypes: {len(report.rows)}",
        *[f"match_{head}: {rate:.4f}"
          for head, rate in zip(ROUNDTRIP_HEADS, report.match_rates)],
        f"grammar_failure: {report.grammar_failure_rate:.4f}",
        f"chance_primary: {chance:.4f}",
        f"chance_ratio: {ratio:.2f}",
        f"thresholds: primary >= {section.min_primary_match} "
        f"and ratio >= {section.min_chance_ratio}",
        f"thresholds_met: {'yes' if met else 'no'}",
    ]

    rows = []
    for i, row in enumerate(report.rows):
        ph = row.phenotype
        translated = (translator.render_prescription(row.prescription)
                      if row.prescription else "")
        predicted_primary = (space.class_names("primary")[row.predicted[0]]
                             if row.predicted else "")
        rows.append([i, ph.primary_icd9, ph.sex, ph.age, ph.month, ph.year,
                     int(row.grammar_failure), predicted_primary,
                     *[int(flag) for flag in row.matches], translated])

    with run.stage("roundtrip") as stage:
        _write_rows(stage.path("roundtrip.csv"),
                    ["index", "primary_icd9", "sex", "age", "month", "year",
                     "grammar_failure", "predicted_primary",
                     *[f"match_{head}" for head in ROUNDTRIP_HEADS],
                     "translated"],
                    rows)
        stage.path("roundtrip_summary.txt").write_text(
            "\n".join(summary_lines) + "\n", encoding="utf-8")
        figures.bars_png(stage.path("roundtrip_rates.png"),
                         list(ROUNDTRIP_HEADS), list(report.match_rates),
                         "round-trip match rates", "match rate")
    print(f"primary match {report.primary_match:.4f} "
          f"({ratio:.1f}x chance) over {len(report.rows)} phenotypes; "
          f"thresholds {'met' if met else 'NOT met'}")
    return 0


def cmd_checkpoint_inspect(args) -> int:
    from ..nn.checkpoint import load_checkpoint

    arrays, meta = load_checkpoint(Path(args.checkpoint))
    total = sum(int(a.size) for a in arrays.values())
    print(f"kind: {meta.get('kind', 'unknown')}")
    for key, value in sorted(meta.get("config", {}).items()):
        print(f"config.{key}: {value}")
    for key in ("source_tokens", "target_tokens"):
        if key in meta:
            print(f"{key}: {len(meta[key])}")
    print(f"parameters: {total}")
    for name, array in arrays.items():
        print(f"  {name}: {'x'.join(str(d) for d in array.shape)}")
    return 0


# ----------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="phenorx",
        description="bidirectional prescription/phenotype pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", parents=[common],
                       help="generate the synthetic corpus")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("balance", parents=[common],
                       help="flatten the primary-disease class histogram")
    p.add_argument("--corpus", help="input corpus (default: <run>/corpus.jsonl)")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train-rcnn", parents=[common],
                       help="train the prescription classifier")
    p.add_argument("--corpus", help="training corpus (default: "
                   "<run>/balanced.jsonl if present, else corpus.jsonl)")
    p.set_defaults(func=cmd_train_rcnn)

    p = sub.add_parser("train-arnn", parents=[common],
                       help="train the phenotype-to-prescription translator")
    p.add_argument("--corpus", help="training corpus (default: <run>/corpus.jsonl)")
    p.set_defaults(func=cmd_train_arnn)

    p = sub.add_parser("classify", parents=[common],
                       help="classify a corpus with a trained checkpoint")
    p.add_argument("--checkpoint", help="classifier stem (default: <run>/rcnn)")
    p.add_argument("--corpus", help="corpus file (default: <run>/corpus.jsonl)")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("translate", parents=[common],
                       help="translate one phenotype into a prescription")
    p.add_argument("--checkpoint", help="translator stem (default: <run>/arnn)")
    p.add_argument("--icd9", required=True, help="primary ICD-9 code")
    p.add_argument("--secondary", default="0",
                   help="secondary ICD-9 code (0 = absent)")
    p.add_argument("--tertiary", default="0",
                   help="tertiary ICD-9 code (0 = absent)")
    p.add_argument("--sex", choices=("male", "female"), default="male")
    p.add_argument("--age", type=int, default=0)
    p.add_argument("--month", type=int, default=1, help="calendar month 1-12")
    p.add_argument("--year", type=int, default=None,
                   help="year offset (omit for unspecified)")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("perplexity", parents=[common],
                       help="evaluate translator perplexity per bucket")
    p.add_argument("--checkpoint", help="translator stem (default: <run>/arnn)")
    p.add_argument("--corpus", help="corpus file (default: <run>/corpus.jsonl)")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.set_defaults(func=cmd_perplexity)

    p = sub.add_parser("analyze", parents=[common],
                       help="spectral embedding and clustering of the "
                            "confusion matrix")
    p.add_argument("--confusion",
                   help="confusion CSV (default: <run>/rcnn_confusion.csv)")
    p.add_argument("--profiles",
                   help="profiles CSV for category labels "
                        "(default: <run>/profiles.csv)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("probe", parents=[common],
                       help="single-component classifier probe")
    p.add_argument("--checkpoint", help="classifier stem (default: <run>/rcnn)")
    p.add_argument("--corpus", help="corpus file (default: <run>/corpus.jsonl)")
    p.add_argument("--components", help="comma-separated component ids "
                   "(default: every id used in the corpus)")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("tsne", parents=[common],
                       help="t-SNE of the translator's decoder embeddings")
    p.add_argument("--checkpoint", help="translator stem (default: <run>/arnn)")
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("roundtrip", parents=[common],
                       help="translate phenotypes and classify them back")
    p.add_argument("--rcnn", help="classifier stem (default: <run>/rcnn)")
    p.add_argument("--arnn", help="translator stem (default: <run>/arnn)")
    p.add_argument("--corpus", help="corpus file (default: <run>/corpus.jsonl)")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("checkpoint-inspect",
                       help="print checkpoint metadata and array shapes")
    p.add_argument("--checkpoint", required=True, help="checkpoint stem")
    p.set_defaults(func=cmd_checkpoint_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except Exception as exc:  # contract: one line on stderr, nonzero exit
        message = " ".join(str(exc).split()) or exc.__class__.__name__
        print(f"error: {exc.__class__.__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
