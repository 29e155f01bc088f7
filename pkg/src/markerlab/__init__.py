"""Toolkit for backchannel/filler analysis in two-party dialogue corpora.

Pipeline surface, end to end:

- corpus: parse/serialize line-delimited utterance records, merge dialogues
  into speaker-tagged token sequences, deterministic train/eval splits.
- lexicon: bundled English/Japanese marker lexicons with boundary-aware,
  ambiguity-filtered span detection and corpus annotation.
- datasetgen: masked-span, next-token, and turn-shift fine-tuning datasets,
  plus context windows for embedding extraction.
- embeddings: interchange I/O, span pooling, standardization, PCA.
- cluster: seeded k-means, silhouette scoring, k sweeps, marker
  representatives, and inter-marker distance matrices.
- nlgeval: frequency, diversity, marker perplexity, BLEU, and greedy-match F1
  over generated continuations.

The `markerlab` console script (markerlab.cli) ties the stages together.
"""

from .corpus import (
    Dialogue,
    Language,
    MergedSequence,
    Speaker,
    Utterance,
    merge_dialogue,
    parse_corpus,
    serialize_corpus,
    split_corpus,
    unmerge_sequence,
)
from .datasetgen import (
    ContextSetting,
    MaskedExample,
    MaskingPolicy,
    TurnLabeledSequence,
    build_masking_dataset,
    build_ntp_dataset,
    build_ttp_dataset,
    default_random_pool,
    extract_context,
)
from .embeddings import (
    EmbeddingSet,
    Provenance,
    SpanEmbeddingRecord,
    SpanKey,
    pca_fit,
    pca_reduce,
    pool_span,
    read_embeddings,
    standardize,
    write_embeddings,
)
from .cluster import (
    Clustering,
    DistanceMatrix,
    SilhouetteReport,
    distance_matrix,
    kmeans,
    marker_representative,
    silhouette_score,
    sweep_k,
)
from .lexicon import (
    AnnotatedCorpus,
    MarkerEntry,
    MarkerLexicon,
    MarkerSpan,
    annotate_corpus,
    find_spans,
    load_builtin_lexicon,
    load_lexicon,
    marker_stats,
)
from .nlgeval import (
    GenerationRecord,
    MarkerLogProb,
    MetricReport,
    bertscore_f1,
    bleu,
    evaluate,
    marker_diversity,
    marker_frequency,
    read_generations,
    weighted_perplexity,
)

__version__ = "0.1.0"
