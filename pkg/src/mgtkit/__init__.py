"""mgtkit: classical machinery for machine-generated text detection.

Corpus handling, TF-IDF and document-level PPMI features, linear regressors
and a softmax classifier, weighted ensembles, and the paragraph-snapping
boundary pipeline, plus a CLI that wires them into batch runs.
"""

from .corpus import (
    CLEANING_MODES,
    Corpus,
    Document,
    LabelScheme,
    clean_text,
    load_jsonl,
    paragraph_starts,
    tokenize_words,
    write_predictions,
)
from .features import (
    EmbeddingSet,
    FeatureMatrix,
    PpmiModel,
    TfidfConfig,
    TfidfModel,
    Vocabulary,
    featurize,
    featurizer_from_dict,
    featurizer_to_dict,
    fit_ppmi,
    fit_tfidf,
    load_embeddings,
    transform_ppmi,
    transform_tfidf,
)
from .regress import (
    ClassifierModel,
    ElasticNetConfig,
    RegressorModel,
    fit_elasticnet,
    fit_ols,
    fit_softmax,
    load_model,
    predict,
    predict_classes,
    predict_proba,
    save_model,
    softmax_loss_and_grad,
)
from .ensemble import (
    EnsembleSpec,
    PredictionSet,
    accuracy_weights,
    average_predictions,
    combine_prob_predictions,
    combine_probs,
    inverse_mae_weights,
    load_prediction_set,
    vote_predictions,
    weighted_average,
    weighted_vote,
)
from .boundary import (
    BoundaryComponent,
    BoundaryPipeline,
    build_pipeline,
    clip_round,
    component_predictions,
    evaluate_boundary,
    fit_boundary_component,
    predict_raw,
    round_half_away,
    run_pipeline,
    snap_to_paragraph,
)
from .metrics import (
    ConfusionMatrix,
    RunReport,
    accuracy,
    confusion,
    emit_report,
    mean_absolute_error,
    report_to_dict,
    write_confusion_csv,
)

__version__ = "0.1.0"
