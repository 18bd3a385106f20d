import logging

import numpy as np
from sklearn.discriminant_analysis import LinearDiscriminantAnalysis

from app.schemas.csp import CSPModel
from app.schemas.recording import WindowSet
from app.services.csp_service import log_variance_features

logger = logging.getLogger(__name__)


def fit_baseline(csp: CSPModel, train_set: WindowSet) -> LinearDiscriminantAnalysis:
    """
    Fit linear discriminant analysis on CSP log-variance features.
    """
    classifier = LinearDiscriminantAnalysis()
    classifier.fit(log_variance_features(csp, train_set), train_set.labels)
    return classifier


def baseline_accuracy(csp: CSPModel, train_set: WindowSet, test_set: WindowSet) -> float:
    """
    Test accuracy of the CSP + LDA reference classifier.

    Args:
        csp (CSPModel): Filters fitted on ``train_set``.
        train_set (WindowSet): Training windows.
        test_set (WindowSet): Held-out windows.

    Returns:
        float: Fraction of correctly classified test windows.
    """
    classifier = fit_baseline(csp, train_set)
    predicted = classifier.predict(log_variance_features(csp, test_set))
    accuracy = float(np.mean(predicted == test_set.labels))
    logger.info(f"CSP+LDA baseline accuracy {accuracy:.4f} on {len(test_set)} windows")
    return accuracy
