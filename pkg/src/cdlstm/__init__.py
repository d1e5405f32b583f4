"""Contextual decomposition attributions for LSTM sentiment classifiers."""

from .baselines import (
    AttributionReport,
    cell_decomposition_scores,
    gradient_input_scores,
    integrated_gradients_scores,
    leave_one_out_scores,
    loo_phrase_score,
    phrase_score_by_sum,
    word_scores,
)
from .cd import (
    CdResult,
    CdState,
    PhraseSpan,
    cd_decompose,
    cd_decompose_spans,
    cd_scalar_score,
    cd_word_scores,
)
from .linearization import Term, TermGroup, linearize, linearize_pair_closed_form
from .lstm import (
    ForwardTrace,
    LstmModel,
    LstmParams,
    TrainConfig,
    classify,
    lstm_backward,
    lstm_forward,
    train_lstm,
)
from .modelfile import ModelFileError, load_model, load_params, save_model, save_params

__version__ = "0.1.0"
