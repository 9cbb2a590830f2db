from .layers import (
    LRN_ALPHA,
    LRN_BETA,
    LRN_K,
    LRN_N,
    LayerSpec,
    layer_backward,
    layer_forward,
)
from .model import (
    EnsembleModel,
    NetworkParams,
    NetworkSpec,
    default_spec,
    ensemble_features,
    ensemble_features_batch,
    ensemble_probs_batch,
    extract_features,
    extract_features_batch,
    features_chunked,
    forward,
    forward_batch,
    init_params,
    loss_and_gradients,
    predict_probs,
)
from .svm import LinearSVM, svm_decision, svm_predict, train_svm
from .train import TrainConfig, accuracy, sgd_step, train_sgd
from .io import (
    load_ensemble,
    load_model,
    load_svm,
    save_ensemble,
    save_model,
    save_svm,
)
