"""
Oracle Module
Templated questions and the Yes/No/NA answer models
"""

from .questions import (
    QuestionBank,
    QuestionSampler,
    encode_question,
    ground_truth_answer,
    holds,
    load_templates,
    type_row,
)
from .model import (
    BASELINES,
    FEATURES,
    OracleModel,
    answer,
    answer_from_probs,
    oracle_forward,
    oracle_forward_batch,
    parse_feature_set,
)
from .training import OracleExample, evaluate_oracle, majority_distribution, sample_examples, train_oracle

__all__ = [
    "QuestionBank",
    "QuestionSampler",
    "encode_question",
    "ground_truth_answer",
    "holds",
    "load_templates",
    "type_row",
    "BASELINES",
    "FEATURES",
    "OracleModel",
    "answer",
    "answer_from_probs",
    "oracle_forward",
    "oracle_forward_batch",
    "parse_feature_set",
    "OracleExample",
    "evaluate_oracle",
    "majority_distribution",
    "sample_examples",
    "train_oracle",
]
