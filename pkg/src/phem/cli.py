"""Command-line orchestration of the full pipeline.

Subcommands: ``keywords`` (probe an MLM and cache domain keywords),
``embed`` (populate a vector store), ``cluster``, ``sweep-k``, ``expand``,
``ground``, and ``report``.  Metric records append to a JSON-lines results
file; every record embeds the resolved config hash and provider model name
so reports are self-describing.  Records carry no timestamps: identical
configs rerun to byte-identical lines.

Exit codes: 0 success, 2 usage/input error, 3 provider/transport error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .backend.mlm import MlmProvider, RemoteMlmProvider, StaticMlmProvider
from .backend.providers import (
    CachingProvider,
    EmbeddingProvider,
    ProviderUnavailableError,
    RemoteProvider,
    StoreProvider,
    SyntheticBlobProvider,
    SyntheticHashProvider,
    TextNotFoundError,
    TransportError,
    stack_vectors,
)
from .backend.store import write_store
from .clustering import clustering_accuracy, kmeans, nmi
from .config import DEFAULTS, config_hash, deep_merge, load_config_file, resolve
from .core import InvariantViolation, PhemError, Phrase, PromptConfig
from .expansion import ap_at_k, expand
from .grounding import build_grounded_vocab, grounding_ratio
from .ingest import LabeledCorpus, dedup_entities, load_entity_list, load_expansion_benchmark, parse_bio_corpus
from .prompting import build_mlm_query, load_keyword_cache, prompts_for, save_keyword_cache, select_keywords

log = logging.getLogger("phem")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_INTERNAL = 4


class InputError(PhemError):
    """Bad or missing command input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# shared resolution helpers


def _load_cfg(args: argparse.Namespace) -> dict[str, Any]:
    overrides = load_config_file(args.config) if args.config else {}
    return deep_merge(DEFAULTS, overrides)


def _dataset_id(args: argparse.Namespace, cfg: dict[str, Any]) -> str:
    ds = resolve(cfg, "dataset_id", flag=args.dataset_id)
    if ds:
        return ds
    for attr in ("entities", "bio", "vocab"):
        path = getattr(args, attr, None)
        if path:
            return Path(path).stem
    return "dataset"


def _load_phrases(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[list[Phrase], list[str], str]:
    """Phrases plus class inventory from either input family.

    Type-level by default; ``--mention-level`` keeps every span occurrence
    (surfaces may then repeat, so the result is not a LabeledCorpus).
    """
    dataset_id = _dataset_id(args, cfg)
    if getattr(args, "entities", None):
        corpus = load_entity_list(args.entities, dataset_id=dataset_id)
        return list(corpus.phrases), list(corpus.classes), dataset_id
    if getattr(args, "bio", None):
        with open(args.bio, "r", encoding="utf-8") as fh:
            parse = parse_bio_corpus(
                fh,
                excluded_classes=args.exclude_class or (),
                tag_column=args.tag_column,
                strict=args.strict_bio,
            )
        for issue in parse.issues:
            log.warning("%s: %s", args.bio, issue)
        if getattr(args, "mention_level", False):
            classes: list[str] = []
            index: dict[str, int] = {}
            phrases = []
            for surface, cls in parse.spans:
                if cls not in index:
                    index[cls] = len(classes)
                    classes.append(cls)
                phrases.append(Phrase(surface, label=index[cls], dataset_id=dataset_id))
            return phrases, classes, dataset_id
        result = dedup_entities(parse.spans, dataset_id=dataset_id)
        if result.dropped:
            log.info("dropped %d tied surface(s)", len(result.dropped))
        return list(result.corpus.phrases), list(result.corpus.classes), dataset_id
    raise InputError("no input: pass --entities FILE or --bio FILE")


def _prompt_config(args: argparse.Namespace, cfg: dict[str, Any]) -> PromptConfig:
    k = resolve(cfg, "prompt", "k", flag=getattr(args, "k", None))
    fetch_k = resolve(cfg, "prompt", "mlm_fetch_k", flag=getattr(args, "mlm_fetch_k", None))
    return PromptConfig(num_keywords=int(k), mlm_fetch_k=max(int(fetch_k), int(k) or 1))


def _keyword_cache_path(args: argparse.Namespace, cfg: dict[str, Any], dataset_id: str) -> Path:
    explicit = resolve(cfg, "prompt", "keyword_cache", flag=getattr(args, "keyword_cache", None))
    if explicit:
        return Path(explicit)
    cache_dir = resolve(cfg, "cache_dir", flag=getattr(args, "cache_dir", None)) or "."
    return Path(cache_dir) / f"{dataset_id}.keywords.tsv"


def _texts_for(
    args: argparse.Namespace,
    cfg: dict[str, Any],
    phrases: list[Phrase],
    dataset_id: str,
    num_keywords: int,
) -> tuple[list[str], bool]:
    """Prompt texts for the pipeline; (texts, prompted)."""
    if getattr(args, "no_prompt", False):
        return prompts_for(phrases, None, 0, prompted=False), False
    if num_keywords == 0:
        return prompts_for(phrases, None, 0), True
    cache_path = _keyword_cache_path(args, cfg, dataset_id)
    if not cache_path.exists():
        raise InputError(
            f"keyword cache {cache_path} not found; run `phem keywords` first or pass --k 0 / --no-prompt"
        )
    cache = load_keyword_cache(cache_path)
    return prompts_for(phrases, cache, num_keywords), True


def _embedding_provider(
    args: argparse.Namespace,
    cfg: dict[str, Any],
    *,
    class_of_text: dict[str, str] | None = None,
) -> EmbeddingProvider:
    kind = resolve(cfg, "provider", "kind", flag=getattr(args, "provider", None))
    model = resolve(cfg, "provider", "model", flag=getattr(args, "model", None)) or None
    dim = int(resolve(cfg, "provider", "dim", flag=getattr(args, "dim", None)))
    seed = int(resolve(cfg, "provider", "seed", flag=getattr(args, "provider_seed", None)))
    inner: EmbeddingProvider
    if kind == "remote":
        inner = RemoteProvider(
            resolve(cfg, "provider", "endpoint", flag=getattr(args, "endpoint", None)),
            model_name=model,
            max_batch=int(resolve(cfg, "provider", "max_batch", flag=getattr(args, "max_batch", None))),
            in_flight=int(resolve(cfg, "provider", "in_flight")),
        )
    elif kind == "store":
        store_path = resolve(cfg, "provider", "store", flag=getattr(args, "store", None))
        if not store_path:
            raise InputError("store provider needs --store PATH")
        inner = StoreProvider(store_path, model_name=model)
    elif kind == "synthetic-hash":
        inner = SyntheticHashProvider(dim=dim, seed=seed, model_name=model)
    elif kind == "synthetic-blob":
        if not class_of_text:
            raise InputError("synthetic-blob provider needs labeled input texts")
        sigma = float(resolve(cfg, "provider", "noise_sigma", flag=getattr(args, "noise_sigma", None)))
        inner = SyntheticBlobProvider.orthogonal(class_of_text, dim=dim, noise_sigma=sigma, seed=seed)
    else:
        raise InputError(f"unknown provider kind {kind!r}")
    cache_dir = resolve(cfg, "cache_dir", flag=getattr(args, "cache_dir", None)) or None
    return CachingProvider(inner, cache_dir=cache_dir)


def _mlm_provider(args: argparse.Namespace, cfg: dict[str, Any]) -> MlmProvider:
    kind = resolve(cfg, "mlm", "kind", flag=getattr(args, "mlm", None))
    if kind == "canned":
        path = resolve(cfg, "mlm", "canned", flag=getattr(args, "mlm_canned", None))
        if not path:
            raise InputError("canned MLM needs --mlm-canned PATH")
        return StaticMlmProvider.from_json(path)
    if kind == "remote":
        return RemoteMlmProvider(
            resolve(cfg, "mlm", "endpoint", flag=getattr(args, "mlm_endpoint", None)),
            max_batch=int(resolve(cfg, "mlm", "max_batch")),
        )
    raise InputError(f"unknown MLM provider kind {kind!r}")


def _normalized_matrix(provider: EmbeddingProvider, texts: list[str], normalize: bool) -> np.ndarray:
    vectors = provider.embed_batch(texts, normalize=False)
    x = stack_vectors(vectors)
    if normalize:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        if float(norms.min()) < 1e-12:
            raise InputError("cannot normalize: provider returned a zero vector")
        x = x / norms
    return x


def _results_path(args: argparse.Namespace, cfg: dict[str, Any]) -> Path:
    path = Path(resolve(cfg, "results", flag=getattr(args, "results", None)))
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _append_record(path: Path, record: dict[str, Any]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n")


def _hash_inputs(command: str, args: argparse.Namespace, cfg: dict[str, Any], **extra: Any) -> str:
    resolved = {
        "command": command,
        "dataset_id": getattr(args, "dataset_id", None),
        "entities": getattr(args, "entities", None),
        "bio": getattr(args, "bio", None),
        "provider": cfg.get("provider"),
        "prompt": cfg.get("prompt"),
        "clustering": cfg.get("clustering"),
        "expansion": cfg.get("expansion"),
        "grounding": cfg.get("grounding"),
        "flags": {
            k: v
            for k, v in vars(args).items()
            if k not in {"func", "config"} and not callable(v)
        },
        **extra,
    }
    return config_hash(resolved)


# ---------------------------------------------------------------------------
# commands


def cmd_keywords(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    phrases, _, dataset_id = _load_phrases(args, cfg)
    unique: dict[str, Phrase] = {}
    for p in phrases:
        unique.setdefault(p.surface, p)
    prompt_cfg = _prompt_config(args, cfg)
    cache_path = _keyword_cache_path(args, cfg, dataset_id)
    cache_path.parent.mkdir(parents=True, exist_ok=True)

    existing = load_keyword_cache(cache_path) if cache_path.exists() else {}
    missing = [p for s, p in unique.items() if s not in existing]
    probed = 0
    if missing:
        provider = _mlm_provider(args, cfg)
        queries = [build_mlm_query(p) for p in missing]
        predictions = provider.topk(queries, prompt_cfg.mlm_fetch_k)
        for p, preds in zip(missing, predictions):
            existing[p.surface] = select_keywords(
                p, preds, prompt_cfg, include_subwords=args.include_subwords
            )
            probed += 1

    ordered = [existing[s] for s in unique if s in existing]
    extras = [ks for s, ks in sorted(existing.items()) if s not in unique]
    save_keyword_cache(cache_path, ordered + extras)
    print(f"keywords: {len(unique)} phrase(s), probed {probed}, cache {cache_path}")
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    phrases, classes, dataset_id = _load_phrases(args, cfg)
    prompt_cfg = _prompt_config(args, cfg)
    texts, _ = _texts_for(args, cfg, phrases, dataset_id, prompt_cfg.num_keywords)

    class_of_text = {t: classes[p.label] for t, p in zip(texts, phrases) if p.label is not None}
    provider = _embedding_provider(args, cfg, class_of_text=class_of_text)

    seen: set[str] = set()
    ordered: list[str] = []
    for t in texts:
        if t not in seen:
            seen.add(t)
            ordered.append(t)
    if len(ordered) < len(texts):
        log.warning("deduplicated %d repeated prompt text(s)", len(texts) - len(ordered))
    vectors = provider.embed_batch(ordered, normalize=args.normalize)
    count = write_store(args.out, [(t, v.values) for t, v in zip(ordered, vectors)])
    print(f"embed: wrote {count} vector(s) (dim {vectors[0].dim}) to {args.out}")
    return EXIT_OK


def _run_clustering(
    args: argparse.Namespace,
    cfg: dict[str, Any],
    provider: EmbeddingProvider,
    texts: list[str],
    labels: list[int],
    n_classes: int,
    *,
    prompted: bool,
    num_keywords: int,
    dataset_id: str,
    results_path: Path,
    cfg_hash: str,
) -> dict[str, Any]:
    normalize = not args.no_normalize
    x = _normalized_matrix(provider, texts, normalize)
    seed = int(resolve(cfg, "clustering", "seed", flag=args.seed))
    result = kmeans(
        x,
        k=n_classes,
        n_restarts=int(resolve(cfg, "clustering", "restarts", flag=args.restarts)),
        max_iter=int(resolve(cfg, "clustering", "max_iter", flag=args.max_iter)),
        tol=float(resolve(cfg, "clustering", "tol", flag=args.tol)),
        seed=seed,
    )
    record = {
        "record": "cluster",
        "dataset": dataset_id,
        "model": provider.model_name,
        "K": num_keywords if prompted else 0,
        "prompted": prompted,
        "normalized": normalize,
        "acc": clustering_accuracy(result.assignments, labels),
        "nmi": nmi(result.assignments, labels),
        "inertia": result.inertia,
        "n": len(texts),
        "seed": seed,
        "config_hash": cfg_hash,
    }
    _append_record(results_path, record)
    print(
        f"cluster: {dataset_id} K={record['K']} acc={record['acc']:.4f} "
        f"nmi={record['nmi']:.4f} n={record['n']} -> {results_path}"
    )
    return record


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    phrases, classes, dataset_id = _load_phrases(args, cfg)
    prompt_cfg = _prompt_config(args, cfg)
    texts, prompted = _texts_for(args, cfg, phrases, dataset_id, prompt_cfg.num_keywords)
    labels = [p.label for p in phrases]
    class_of_text = {t: classes[p.label] for t, p in zip(texts, phrases)}
    provider = _embedding_provider(args, cfg, class_of_text=class_of_text)
    cfg_hash = _hash_inputs("cluster", args, cfg)
    _run_clustering(
        args,
        cfg,
        provider,
        texts,
        labels,
        len(classes),
        prompted=prompted,
        num_keywords=prompt_cfg.num_keywords,
        dataset_id=dataset_id,
        results_path=_results_path(args, cfg),
        cfg_hash=cfg_hash,
    )
    return EXIT_OK


def cmd_sweep_k(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    k_values = args.k_values if args.k_values is not None else cfg.get("sweep", {}).get("k_values")
    if k_values is None:
        k_values = list(range(7))
    if not k_values:
        raise InputError("sweep needs at least one keyword count")
    deduped: list[int] = []
    for k in k_values:
        if k in deduped:
            log.warning("duplicate keyword count %d ignored", k)
        else:
            deduped.append(int(k))
    if any(k < 0 for k in deduped):
        raise InputError("keyword counts must be non-negative")

    phrases, classes, dataset_id = _load_phrases(args, cfg)
    labels = [p.label for p in phrases]
    max_k = max(deduped)
    texts_by_k: dict[int, tuple[list[str], bool]] = {}
    for k in deduped:
        texts_by_k[k] = _texts_for(args, cfg, phrases, dataset_id, k)

    class_of_text: dict[str, str] = {}
    for texts, _ in texts_by_k.values():
        for t, p in zip(texts, phrases):
            class_of_text[t] = classes[p.label]
    provider = _embedding_provider(args, cfg, class_of_text=class_of_text)
    results_path = _results_path(args, cfg)
    if max_k > 0:
        cache = load_keyword_cache(_keyword_cache_path(args, cfg, dataset_id))
        short = sum(1 for ks in cache.values() if len(ks) < max_k)
        if short:
            log.warning(
                "%d cached phrase(s) hold fewer than %d keywords; regenerate the cache with a larger --k for a full sweep",
                short,
                max_k,
            )
    for k in deduped:
        texts, prompted = texts_by_k[k]
        cfg_hash = _hash_inputs("sweep-k", args, cfg, sweep_k=k)
        _run_clustering(
            args,
            cfg,
            provider,
            texts,
            labels,
            len(classes),
            prompted=prompted,
            num_keywords=k,
            dataset_id=dataset_id,
            results_path=results_path,
            cfg_hash=cfg_hash,
        )
    return EXIT_OK


def cmd_expand(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    dataset_id = _dataset_id(args, cfg)
    bench = load_expansion_benchmark(args.vocab, args.seeds, dataset_id=dataset_id)
    print(f"expand: benchmark {dataset_id} {bench.counts()}")
    phrases = list(bench.vocabulary)
    prompt_cfg = _prompt_config(args, cfg)
    texts, prompted = _texts_for(args, cfg, phrases, dataset_id, prompt_cfg.num_keywords)
    class_of_text = {t: bench.classes[p.label] for t, p in zip(texts, phrases)}
    provider = _embedding_provider(args, cfg, class_of_text=class_of_text)

    vectors = provider.embed_batch(texts, normalize=False)
    pairs = list(zip(phrases, vectors))
    map_ks = [int(k) for k in resolve(cfg, "expansion", "map_k", flag=args.map_k)]
    top_n = int(resolve(cfg, "expansion", "top_n", flag=args.top_n))
    depth = min(max(top_n, max(map_ks)), len(phrases) - 3)
    if depth < 1:
        raise InputError("vocabulary too small to rank any candidates")

    per_query = []
    ap_sums = {k: 0.0 for k in map_ks}
    for query in bench.queries:
        ranked = expand(query, pairs, depth)
        relevant = {
            p.surface for p in phrases if p.label == query.class_id
        } - set(query.seed_surfaces)
        entry: dict[str, Any] = {
            "class": bench.classes[query.class_id],
            "seeds": list(query.seed_surfaces),
        }
        for k in map_ks:
            ap = ap_at_k(ranked, relevant, k)
            entry[f"ap{k}"] = ap
            ap_sums[k] += ap
        per_query.append(entry)

    num_k = prompt_cfg.num_keywords if prompted else 0
    record: dict[str, Any] = {
        "record": "expansion",
        "dataset": dataset_id,
        "model": provider.model_name,
        "K": num_k,
        "K_keywords": num_k,
        "prompted": prompted,
        "n": len(phrases),
        "queries": len(bench.queries),
        "per_query": per_query,
        "config_hash": _hash_inputs("expand", args, cfg),
    }
    for k in map_ks:
        record[f"map{k}"] = ap_sums[k] / len(bench.queries)
    _append_record(_results_path(args, cfg), record)
    summary = " ".join(f"map{k}={record[f'map{k}']:.4f}" for k in map_ks)
    print(f"expand: {dataset_id} K={record['K']} {summary}")
    return EXIT_OK


def cmd_ground(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    phrases, _, dataset_id = _load_phrases(args, cfg)
    prompt_cfg = _prompt_config(args, cfg)
    threshold = int(resolve(cfg, "grounding", "threshold", flag=args.threshold))

    with open(args.captions, "r", encoding="utf-8") as fh:
        vocab = build_grounded_vocab(fh, threshold=threshold, corpus_id=Path(args.captions).stem)

    cache_path = _keyword_cache_path(args, cfg, dataset_id)
    if not cache_path.exists():
        raise InputError(f"keyword cache {cache_path} not found; run `phem keywords` first")
    cache = load_keyword_cache(cache_path)
    keywords: list[str] = []
    for p in phrases:
        ks = cache.get(p.surface)
        if ks is not None:
            keywords.extend(ks.truncated(prompt_cfg.num_keywords).keywords)

    surfaces = [p.surface for p in phrases]
    record = {
        "record": "grounding",
        "dataset": dataset_id,
        "corpus_id": vocab.corpus_id,
        "threshold": threshold,
        "vocab_size": len(vocab),
        "phrase_level": bool(args.phrase_level),
        "phrase_ratio": grounding_ratio(surfaces, vocab, phrase_level=args.phrase_level),
        "keyword_ratio": grounding_ratio(keywords, vocab, phrase_level=args.phrase_level),
        "n": len(surfaces),
        "n_keywords": len(keywords),
        "config_hash": _hash_inputs("ground", args, cfg),
    }
    _append_record(_results_path(args, cfg), record)
    print(
        f"ground: {dataset_id} phrases={record['phrase_ratio']:.4f} "
        f"keywords={record['keyword_ratio']:.4f} (vocab {len(vocab)} words)"
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from .report import read_records, render_figures, write_table

    cfg = _load_cfg(args)
    results_path = Path(resolve(cfg, "results", flag=args.results))
    if not results_path.exists():
        raise InputError(f"results file {results_path} not found")
    records = read_records(results_path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "report.tsv"
    rows = write_table(records, table)
    print(f"report: {rows} record(s) -> {table}")
    if not args.no_figures:
        for fig in render_figures(records, out_dir):
            print(f"report: figure -> {fig}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phem", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="INFO", help="python logging level name")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--dataset-id", help="name recorded with every metric")
    common.add_argument("--results", help="JSON-lines results file to append to")
    common.add_argument("--cache-dir", help="directory for keyword/embedding caches")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--entities", help="canonical entity-list file (surface<TAB>class)")
    data.add_argument("--bio", help="BIO token/tag file")
    data.add_argument("--tag-column", type=int, default=-1, help="tag column index in BIO lines")
    data.add_argument("--exclude-class", action="append", help="drop spans of this class (repeatable)")
    data.add_argument("--strict-bio", action="store_true", help="abort on malformed BIO lines")
    data.add_argument("--mention-level", action="store_true", help="keep duplicate mentions instead of type-level dedup")

    provider = argparse.ArgumentParser(add_help=False)
    provider.add_argument(
        "--provider",
        choices=["remote", "store", "synthetic-hash", "synthetic-blob"],
        help="embedding provider kind",
    )
    provider.add_argument("--endpoint", help="base URL of the embedding service")
    provider.add_argument("--store", help="embedding store file (store provider)")
    provider.add_argument("--model", help="model name recorded in outputs")
    provider.add_argument("--dim", type=int, help="vector dimension for synthetic providers")
    provider.add_argument("--noise-sigma", type=float, help="blob provider noise level")
    provider.add_argument("--provider-seed", type=int, help="seed for synthetic providers")
    provider.add_argument("--max-batch", type=int, help="max texts per remote request")

    prompt = argparse.ArgumentParser(add_help=False)
    prompt.add_argument("--k", type=int, help="number of keywords per phrase")
    prompt.add_argument("--mlm-fetch-k", type=int, help="raw predictions fetched per probe")
    prompt.add_argument("--keyword-cache", help="keyword cache file path")
    prompt.add_argument("--no-prompt", action="store_true", help="embed raw surfaces without any template")
    prompt.add_argument("--include-subwords", action="store_true", help="keep subword-marked predictions")

    clustering = argparse.ArgumentParser(add_help=False)
    clustering.add_argument("--restarts", type=int, help="k-means restarts")
    clustering.add_argument("--max-iter", type=int, help="k-means iteration cap")
    clustering.add_argument("--tol", type=float, help="centroid-shift convergence threshold")
    clustering.add_argument("--seed", type=int, help="k-means seed")
    clustering.add_argument("--no-normalize", action="store_true", help="skip L2 normalization before k-means")

    p = sub.add_parser("keywords", parents=[common, data, prompt], help="probe the MLM and cache keywords")
    p.add_argument("--mlm", choices=["canned", "remote"], help="MLM provider kind")
    p.add_argument("--mlm-canned", help="JSON file of canned predictions")
    p.add_argument("--mlm-endpoint", help="base URL of the MLM service")
    p.set_defaults(func=cmd_keywords)

    p = sub.add_parser("embed", parents=[common, data, provider, prompt], help="populate an embedding store")
    p.add_argument("--out", required=True, help="store file to write")
    p.add_argument("--normalize", action="store_true", help="store unit-norm vectors")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", parents=[common, data, provider, prompt, clustering], help="cluster and score ACC/NMI")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep-k", parents=[common, data, provider, prompt, clustering], help="cluster across keyword counts")
    p.add_argument("--k-values", type=int, nargs="*", help="keyword counts to sweep (default 0..6)")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("expand", parents=[common, provider, prompt], help="seed-set expansion MAP@K")
    p.add_argument("--vocab", required=True, help="entity-list vocabulary file")
    p.add_argument("--seeds", required=True, help="seed-query file")
    p.add_argument("--top-n", type=int, help="ranking depth")
    p.add_argument("--map-k", type=int, nargs="+", help="MAP cutoffs (default 10 30 50)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("ground", parents=[common, data, prompt], help="visual grounding ratios")
    p.add_argument("--captions", required=True, help="caption corpus, one caption per line")
    p.add_argument("--threshold", type=int, help="occurrence threshold (strictly greater keeps)")
    p.add_argument("--phrase-level", action="store_true", help="score whole texts instead of tokens")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("report", parents=[common], help="aggregate records into a table and figures")
    p.add_argument("--out-dir", default="report", help="directory for the table and figures")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InvariantViolation as exc:
        log.error("internal invariant violated: %s", exc)
        return EXIT_INTERNAL
    except (ProviderUnavailableError, TransportError, TextNotFoundError) as exc:
        log.error("provider failure: %s", exc)
        return EXIT_PROVIDER
    except (PhemError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
