import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from scipy import linalg

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.csp import CSPDocument, CSPModel
from app.schemas.recording import WindowSet
from app.services.utils.validators import (
    ensure_both_classes,
    ensure_channel_match,
    ensure_valid_components,
    ensure_valid_shrinkage,
)

logger = logging.getLogger(__name__)

# Relative eigenvalue floor below which a covariance counts as singular.
_SINGULAR_TOLERANCE = 1e-10


def _numerical_error(detail: str) -> ApplicationError:
    logger.error(detail)
    return ApplicationError(detail=detail, category=ErrorCategory.NUMERICAL)


def window_covariance(window: np.ndarray, shrinkage: float) -> np.ndarray:
    """
    Trace-normalized spatial covariance of one [C_raw, T] window, shrunk toward the
    identity scaled to the same trace.

    Args:
        window (np.ndarray): Raw-channel window.
        shrinkage (float): Weight of the identity target in [0, 1).

    Returns:
        np.ndarray: Symmetric [C_raw, C_raw] matrix with unit trace.
    """
    centered = window.astype(np.float64) - window.mean(axis=1, keepdims=True)
    covariance = centered @ centered.T
    trace = np.trace(covariance)
    if not trace > 0:
        raise _numerical_error("A window has zero variance on every channel")
    covariance /= trace
    channels = covariance.shape[0]
    return (1 - shrinkage) * covariance + shrinkage * np.eye(channels) / channels


def class_covariances(windows: WindowSet, shrinkage: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Average window covariance per class.
    """
    labels = windows.labels
    ensure_both_classes(labels)
    sums = [None, None]
    for window, label in zip(windows.windows, labels):
        covariance = window_covariance(window.data, shrinkage)
        sums[label] = covariance if sums[label] is None else sums[label] + covariance
    counts = np.bincount(labels, minlength=2)
    averaged = tuple(total / count for total, count in zip(sums, counts))
    return tuple(0.5 * (sigma + sigma.T) for sigma in averaged)


def csp_from_covariances(
    sigma_0: np.ndarray,
    sigma_1: np.ndarray,
    c_out: int,
    shrinkage: float = 0.0,
) -> CSPModel:
    """
    Solve Σ₀w = λ(Σ₀ + Σ₁)w by whitening the composite covariance.

    Args:
        sigma_0 (np.ndarray): Class-0 covariance.
        sigma_1 (np.ndarray): Class-1 covariance.
        c_out (int): Number of filters, half taken from each end of the spectrum.
        shrinkage (float): Recorded on the model.

    Returns:
        CSPModel: Filters as rows, ordered by max(λ, 1 - λ) descending.

    Raises:
        ApplicationError: If a covariance is not positive semi-definite or the
            composite is singular.
    """
    ensure_valid_components(c_out, sigma_0.shape[0])
    for label, sigma in enumerate((sigma_0, sigma_1)):
        smallest = linalg.eigh(sigma, eigvals_only=True)[0]
        if smallest < -_SINGULAR_TOLERANCE * max(1.0, np.abs(sigma).max()):
            raise _numerical_error(
                f"Class {label} covariance is not positive semi-definite (eigenvalue {smallest:.3e})"
            )

    composite_values, composite_vectors = linalg.eigh(sigma_0 + sigma_1)
    if composite_values[0] <= _SINGULAR_TOLERANCE * composite_values[-1]:
        raise _numerical_error(
            "Composite covariance is singular; increase csp_shrinkage or use more windows"
        )
    whitening = np.diag(composite_values**-0.5) @ composite_vectors.T
    ratios, rotation = linalg.eigh(whitening @ sigma_0 @ whitening.T)
    filters = rotation.T @ whitening

    half = c_out // 2
    picked = np.concatenate([np.arange(half), np.arange(len(ratios) - half, len(ratios))])
    discriminability = np.maximum(ratios[picked], 1 - ratios[picked])
    order = picked[np.argsort(-discriminability, kind="stable")]
    filters, ratios = filters[order], ratios[order]

    peaks = filters[np.arange(c_out), np.argmax(np.abs(filters), axis=1)]
    filters = filters * np.sign(peaks)[:, None]
    return CSPModel(
        filters=filters,
        eigenvalues=ratios,
        shrinkage=shrinkage,
        class_covariances=(sigma_0, sigma_1),
    )


def fit_csp(train_windows: WindowSet, c_out: int, shrinkage: float) -> CSPModel:
    """
    Fit common spatial patterns on the training windows.

    Args:
        train_windows (WindowSet): Labelled raw-channel windows.
        c_out (int): Even number of components to keep.
        shrinkage (float): Shrinkage toward the scaled identity in [0, 1).

    Returns:
        CSPModel: The fitted, immutable model.
    """
    ensure_valid_shrinkage(shrinkage)
    sigma_0, sigma_1 = class_covariances(train_windows, shrinkage)
    model = csp_from_covariances(sigma_0, sigma_1, c_out, shrinkage)
    logger.info(
        f"Fitted CSP on {len(train_windows)} windows: {model.c_raw} -> {model.c_out} "
        f"components, top ratio {model.eigenvalues[0]:.3f}"
    )
    return model


def apply_csp(model: CSPModel, raw: np.ndarray) -> np.ndarray:
    """
    Project a [C_raw, T] window onto the spatial filters.

    Returns:
        np.ndarray: [C_out, T].
    """
    ensure_channel_match(raw.shape[0], model.c_raw, "Raw window")
    return model.filters @ raw


def project_windows(model: CSPModel, windows: WindowSet) -> np.ndarray:
    """
    Network input for a window set, laid out [N, C_out, 1, T].
    """
    if len(windows) == 0:
        return np.zeros((0, model.c_out, 1, 0))
    raw = windows.stack()
    ensure_channel_match(raw.shape[1], model.c_raw, "Window set")
    projected = np.einsum("oc,nct->not", model.filters, raw)
    return projected[:, :, None, :]


def log_variance_features(model: CSPModel, windows: WindowSet) -> np.ndarray:
    """
    Normalized log-variance of every CSP component, [N, C_out].
    """
    variances = project_windows(model, windows)[:, :, 0, :].var(axis=2)
    return np.log(variances / variances.sum(axis=1, keepdims=True))


def eigen_residuals(model: CSPModel) -> np.ndarray:
    """
    Relative residual ||Σ₀w - λ(Σ₀+Σ₁)w|| / ||λ(Σ₀+Σ₁)w|| of every filter.

    Raises:
        ApplicationError: If the model carries no class covariances.
    """
    if model.class_covariances is None:
        raise ApplicationError(
            detail="Eigen residuals need the class covariances of a freshly fitted model",
            category=ErrorCategory.USAGE,
        )
    sigma_0, sigma_1 = model.class_covariances
    lhs = model.filters @ sigma_0
    rhs = model.eigenvalues[:, None] * (model.filters @ (sigma_0 + sigma_1))
    return np.linalg.norm(lhs - rhs, axis=1) / np.linalg.norm(rhs, axis=1)


def save_csp(model: CSPModel, path: Path) -> None:
    path.write_text(model.to_document().model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"CSP model saved to {path}")


def load_csp(path: Path) -> CSPModel:
    """
    Read a CSP JSON document.

    Raises:
        ApplicationError: If the document is malformed.
    """
    try:
        document = CSPDocument.model_validate_json(path.read_bytes())
    except ValidationError as ex:
        logger.error(f"Malformed CSP document {path}")
        raise ApplicationError(
            detail=f"Malformed CSP document {path}: {ex.error_count()} validation errors",
            category=ErrorCategory.FORMAT,
        ) from ex
    if len(document.filters) != document.c_out * document.c_raw:
        raise ApplicationError(
            detail=f"CSP document {path} holds {len(document.filters)} filter values, "
            f"expected {document.c_out * document.c_raw}",
            category=ErrorCategory.FORMAT,
        )
    return CSPModel.from_document(document)
