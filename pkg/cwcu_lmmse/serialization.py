"""
cwcu-model-v1 JSON documents and the report writers used by the CLI.

Complex numbers are [re, im] pairs and matrices are row-major nested arrays.
A document carries explicit "n" and "m" fields and a "kind" tag:

    {"version": "cwcu-model-v1", "kind": "linear", "n": 2, "m": 3,
     "H": [[[1, 0], [0, 0]], ...], "mean_x": [[0, 0], [0, 0]],
     "C_xx": ..., "C_nn": ..., "V": null}
"""

from __future__ import annotations

import csv
import json
import logging
import re
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    PositiveInt,
    TypeAdapter,
    ValidationError,
    model_validator,
)

from .exceptions import CwcuValidationError
from .models import JointGaussianModel, LinearModel, SubspaceConstraint, encode_complex

logger = logging.getLogger(__name__)

MODEL_VERSION = "cwcu-model-v1"
CSV_FLOAT_FORMAT = "{:.9g}"


def decode_complex(v) -> np.ndarray:
    if isinstance(v, np.ndarray) and np.iscomplexobj(v):
        return v
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValueError(f"complex entries must be numeric [re, im] pairs: {e}") from e
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


JsonComplexArray = Annotated[
    np.ndarray,
    BeforeValidator(decode_complex),
    PlainSerializer(encode_complex, return_type=list, when_used="json"),
]


def _require_shape(name: str, arr: np.ndarray | None, shape: tuple[int, ...]) -> None:
    if arr is not None and arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")


class LinearModelDocument(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    version: Literal["cwcu-model-v1"] = MODEL_VERSION
    kind: Literal["linear"] = "linear"
    n: PositiveInt
    m: PositiveInt
    H: JsonComplexArray
    mean_x: JsonComplexArray
    C_xx: JsonComplexArray
    C_nn: JsonComplexArray
    V: JsonComplexArray | None = None

    @model_validator(mode="after")
    def check_shapes(self) -> LinearModelDocument:
        n, m = self.n, self.m
        _require_shape("H", self.H, (m, n))
        _require_shape("mean_x", self.mean_x, (n,))
        _require_shape("C_xx", self.C_xx, (n, n))
        _require_shape("C_nn", self.C_nn, (m, m))
        if self.V is not None and (self.V.ndim != 2 or self.V.shape[0] != n):
            raise ValueError(f"V must have {n} rows, got shape {self.V.shape}")
        return self

    def to_model(self) -> LinearModel:
        return LinearModel(H=self.H, mean_x=self.mean_x, C_xx=self.C_xx, C_nn=self.C_nn)

    def subspace(self) -> SubspaceConstraint | None:
        return None if self.V is None else SubspaceConstraint(V=self.V)


class JointGaussianDocument(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    version: Literal["cwcu-model-v1"] = MODEL_VERSION
    kind: Literal["joint_gaussian"] = "joint_gaussian"
    n: PositiveInt
    m: PositiveInt
    mean_x: JsonComplexArray
    mean_y: JsonComplexArray
    C_xx: JsonComplexArray
    C_xy: JsonComplexArray
    C_yy: JsonComplexArray

    @model_validator(mode="after")
    def check_shapes(self) -> JointGaussianDocument:
        n, m = self.n, self.m
        _require_shape("mean_x", self.mean_x, (n,))
        _require_shape("mean_y", self.mean_y, (m,))
        _require_shape("C_xx", self.C_xx, (n, n))
        _require_shape("C_xy", self.C_xy, (n, m))
        _require_shape("C_yy", self.C_yy, (m, m))
        return self

    def to_model(self) -> JointGaussianModel:
        return JointGaussianModel.validated(
            strict=True,
            mean_x=self.mean_x,
            mean_y=self.mean_y,
            C_xx=self.C_xx,
            C_xy=self.C_xy,
            C_yy=self.C_yy,
        )

    def subspace(self) -> None:
        return None


ModelDocument = Annotated[LinearModelDocument | JointGaussianDocument, Field(discriminator="kind")]
_documents = TypeAdapter(ModelDocument)


def _line_of_key(text: str, key: str) -> int | None:
    pattern = re.compile(rf'"{re.escape(key)}"\s*:')
    for lineno, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return lineno
    return None


def parse_model_document(text: str, source: str = "<string>") -> LinearModelDocument | JointGaussianDocument:
    logger.debug(f"Parsing model document from {source}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {source}: {e}")
        raise CwcuValidationError(
            f"{source}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}", line=e.lineno, column=e.colno
        ) from e
    try:
        return _documents.validate_python(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first["loc"]
        location = ".".join(str(part) for part in loc) or "<root>"
        line = _line_of_key(text, str(loc[1])) if len(loc) > 1 else None
        where = f"{source}:{line}" if line is not None else source
        logger.error(f"Validation error in {source} at {location}: {first['msg']}")
        raise CwcuValidationError(
            f"{where}: invalid model document at {location}: {first['msg']}", line=line, location=location
        ) from e


def load_model(path: str | Path) -> LinearModelDocument | JointGaussianDocument:
    path = Path(path)
    logger.info(f"Loading model from {path}")
    try:
        text = path.read_text()
    except OSError as e:
        logger.error(f"Cannot read {path}: {e}")
        raise CwcuValidationError(f"cannot read model file {path}: {e}", location=str(path)) from e
    return parse_model_document(text, source=str(path))


def document_from_model(model: LinearModel, sub: SubspaceConstraint | None = None) -> LinearModelDocument:
    return LinearModelDocument(
        n=model.n,
        m=model.m,
        H=model.H,
        mean_x=model.mean_x,
        C_xx=model.C_xx,
        C_nn=model.C_nn,
        V=None if sub is None else sub.V,
    )


def dump_model(model: LinearModel, path: str | Path, sub: SubspaceConstraint | None = None) -> Path:
    path = Path(path)
    path.write_text(document_from_model(model, sub).model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote model document to {path}")
    return path


def write_json_report(report: BaseModel, path: str | Path) -> Path:
    """Write a report with sorted keys so identical runs produce identical bytes."""
    path = Path(path)
    payload = json.loads(report.model_dump_json(by_alias=True))
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path


def format_float(value: float) -> str:
    """Nine significant digits; NaN becomes an empty cell."""
    value = float(value)
    return "" if np.isnan(value) else CSV_FLOAT_FORMAT.format(value)


def write_table_csv(path: str | Path, header: list[str], index: list[int], columns: list[np.ndarray]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row, idx in enumerate(index):
            writer.writerow([idx, *(format_float(col[row]) for col in columns)])
    logger.info(f"Wrote {len(index)} rows to {path}")
    return path


def write_pairs_csv(path: str | Path, pairs_x: np.ndarray, pairs_xhat: np.ndarray) -> Path:
    """One row per retained (component, trial) pair."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["component", "re_x", "im_x", "re_xhat", "im_xhat"])
        for i in range(pairs_x.shape[0]):
            for x, xhat in zip(pairs_x[i], pairs_xhat[i]):
                writer.writerow([i, *(format_float(v) for v in (x.real, x.imag, xhat.real, xhat.imag))])
    logger.info(f"Wrote {pairs_x.size} raw pairs to {path}")
    return path
