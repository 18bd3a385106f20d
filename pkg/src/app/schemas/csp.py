import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class CSPDocument(BaseModel):
    """
    JSON form of a fitted CSP model. ``filters`` is row-major [c_out, c_raw].
    """

    c_raw: int = Field(gt=0)
    c_out: int = Field(gt=0)
    shrinkage: float = Field(ge=0, lt=1)
    filters: list[float]
    eigenvalues: list[float]


class CSPModel(BaseModel):
    """
    Fitted common spatial patterns.

    Attributes:
        filters (np.ndarray): Spatial filters, one per row, [c_out, c_raw].
        eigenvalues (np.ndarray): Variance ratio of class 0 for each filter, sorted by
            discriminability max(l, 1 - l) descending.
        shrinkage (float): Shrinkage applied to each window covariance.
        class_covariances (tuple[np.ndarray, np.ndarray] | None): The averaged class
            covariances the filters were derived from; absent for models loaded from JSON.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    filters: np.ndarray
    eigenvalues: np.ndarray
    shrinkage: float = 0.0
    class_covariances: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def c_raw(self) -> int:
        return self.filters.shape[1]

    @property
    def c_out(self) -> int:
        return self.filters.shape[0]

    def to_document(self) -> CSPDocument:
        return CSPDocument(
            c_raw=self.c_raw,
            c_out=self.c_out,
            shrinkage=self.shrinkage,
            filters=self.filters.reshape(-1).tolist(),
            eigenvalues=self.eigenvalues.tolist(),
        )

    @classmethod
    def from_document(cls, document: CSPDocument) -> "CSPModel":
        filters = np.asarray(document.filters, dtype=np.float64).reshape(
            document.c_out, document.c_raw
        )
        return cls(
            filters=filters,
            eigenvalues=np.asarray(document.eigenvalues, dtype=np.float64),
            shrinkage=document.shrinkage,
        )
