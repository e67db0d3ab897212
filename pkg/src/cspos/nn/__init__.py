"""Minimal differentiable core: layers with hand-written backward passes, CRF, Adam."""

from .crf import CRF, crf_log_partition, crf_marginals, crf_neg_log_likelihood, crf_viterbi, path_score
from .layers import BiLSTM, Dropout, Embedding, LSTM, Linear, bilstm_encode, dropout_apply, lstm_step
from .optim import Adam, sgd_adam_step
from .params import Module, Parameter
