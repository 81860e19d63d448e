"""Question-and-answer labeling toolkit.

Simulates and serves the two questioning procedures (which-one, is-in),
computes their exact label generative models and recipient-confidence
mixtures, rewrites the ordinary classification risk into unbiased losses
over the set-valued labels, evaluates the matching generalization bounds,
and trains a small softmax classifier on the labeled output.
"""

from .combinatorics import ClassSpace, LabelSubset, binomial, complement, enumerate_subsets
from .generative import (
    LabelPmf,
    ReceiverConfidence,
    candidate_beta,
    candidate_pmf,
    conditional_pmf,
    invert_to_posterior,
    isin_pmf,
    oracle_pmf,
    receiver_confidence,
    receiver_confidence_candidate,
    receiver_marginal_from_pmf,
    whichone_pmf,
)
from .labeling import (
    Answer,
    AnnotatorModel,
    LabelingEvent,
    QuestionSpec,
    QuestionType,
    answer_question,
    assign_label,
    draw_question_set,
    simulate_arrays,
    simulate_dataset,
)
from .losses import (
    coeff_isin,
    coeff_whichone,
    empirical_qa_risk,
    empirical_test_risk,
    exact_risk_identity_check,
    mae,
    qa_loss,
)
from .rng import CounterRng

__version__ = "0.1.0"
