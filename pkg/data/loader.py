"""
Data Loader
CSV ingestion, preprocessing and the person-time (long format) expansion
"""
import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from errors import ConfigError, DataError, ParseError, SchemaError
from .models import LongRow, Observation, SurvivalDataset

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "NA", "N/A", "NaN", "nan", "null", "NULL", "None", "."}


class CsvSchema(BaseModel):
    """Named-column mapping of an input CSV"""
    model_config = ConfigDict(extra="forbid")

    time: str = "time"
    event: str = "event"
    treatment: str = "treatment"
    id: Optional[str] = None
    covariates: Optional[List[str]] = None  # None means every remaining column
    discretize: str = "none"  # "none" or "ceil"


def _parse_error_line(message: str) -> Optional[int]:
    match = re.search(r"line (\d+)", message)
    return int(match.group(1)) if match else None


def load_csv(path: Union[str, Path], schema: Optional[CsvSchema] = None) -> SurvivalDataset:
    """
    Load a survival dataset from a headed UTF-8 CSV.

    Rows with any missing value are dropped and counted (complete-case analysis).

    Raises:
        ParseError: malformed row or non-numeric value, with its line number
        SchemaError: missing columns, non-binary treatment/event, invalid times
        DataError: no usable rows
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Input file not found: {path}", {"path": str(path)})

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"Input file is empty: {path}", {"path": str(path)})
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed CSV {path}: {e}", line=_parse_error_line(str(e)), context={"path": str(path)})
    except UnicodeDecodeError as e:
        raise ParseError(f"Input file is not valid UTF-8: {e}", context={"path": str(path)})

    df.columns = [c.strip() for c in df.columns]
    reserved = [c for c in (schema.id, schema.time, schema.event, schema.treatment) if c]
    missing_cols = [c for c in reserved if c not in df.columns]
    if schema.covariates:
        missing_cols += [c for c in schema.covariates if c not in df.columns]
    if missing_cols:
        raise SchemaError(f"Missing columns: {missing_cols}", {"columns": list(df.columns)})
    if df.empty:
        raise DataError(f"Input file has a header but no rows: {path}")

    covariates = schema.covariates if schema.covariates is not None else [c for c in df.columns if c not in reserved]
    columns = reserved + [c for c in covariates if c not in reserved]
    raw = df[columns].apply(lambda s: s.str.strip())
    missing = raw.isin(MISSING_TOKENS)
    numeric = raw.apply(pd.to_numeric, errors="coerce")

    bad = numeric.isna() & ~missing
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        # +2: one for the header, one for 1-based lines
        raise ParseError(
            f"Non-numeric value {raw.iat[row, col]!r} in column {columns[col]!r}",
            line=int(row) + 2, context={"column": columns[col]},
        )

    complete = ~missing.any(axis=1).to_numpy()
    dropped = int((~complete).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} rows with missing values from {path}")
    numeric = numeric[complete]
    if numeric.empty:
        raise DataError(f"No complete rows in {path}", {"dropped_rows": dropped})

    for col in (schema.treatment, schema.event):
        values = set(numeric[col].unique().tolist())
        if not values <= {0.0, 1.0}:
            raise SchemaError(f"Column {col!r} must be binary 0/1, found {sorted(values)}", {"column": col})

    times = numeric[schema.time].to_numpy(dtype=float)
    if np.any(times <= 0):
        raise SchemaError(f"Column {schema.time!r} must hold positive times", {"column": schema.time})
    if np.any(times != np.floor(times)):
        if schema.discretize != "ceil":
            raise SchemaError(
                f"Column {schema.time!r} has non-integer times; declare discretize: ceil",
                {"column": schema.time},
            )
        times = np.ceil(times)

    if schema.id:
        ids = numeric[schema.id].to_numpy()
        if np.any(ids != np.floor(ids)):
            raise SchemaError(f"Id column {schema.id!r} must hold integers")
    else:
        ids = numeric.index.to_numpy() + 1

    ds = SurvivalDataset.from_arrays(
        W=numeric[covariates].to_numpy(dtype=float).reshape(len(numeric), len(covariates)),
        A=numeric[schema.treatment].to_numpy().astype(int),
        T=times.astype(int),
        delta=numeric[schema.event].to_numpy().astype(int),
        ids=ids.astype(int),
        covariate_names=list(covariates),
        dropped_rows=dropped,
    )
    logger.info(f"Loaded {ds.n} subjects from {path} (t_max={ds.t_max}, {len(covariates)} covariates)")
    return ds


def preprocess(ds: SurvivalDataset, truncate_at: Optional[float] = None, rescale: int = 1) -> SurvivalDataset:
    """
    Administrative truncation followed by time rescaling, both in the input's
    original time units.

    Follow-up beyond truncate_at becomes censored at truncate_at; times then map
    to ceil(t / rescale), and rescale is recorded as the dataset's time_scale.
    A dataset already on a time_scale is only coarsened by the remaining factor,
    so applying preprocess twice with the same arguments changes nothing.
    """
    if truncate_at is not None and truncate_at < 1:
        raise ConfigError(f"truncate_at must be >= 1, got {truncate_at}")
    if rescale < 1 or int(rescale) != rescale:
        raise ConfigError(f"rescale must be a positive integer, got {rescale}")
    scale = ds.time_scale
    target = max(int(rescale), scale)
    if target % scale != 0:
        raise ConfigError(f"rescale={rescale} is not a multiple of the dataset's time scale {scale}")

    T = ds.T.copy()
    delta = ds.delta.copy()
    t_max = ds.t_max
    if truncate_at is not None and math.isfinite(truncate_at):
        cut = int(math.ceil(math.floor(truncate_at) / scale))
        over = T > cut
        T[over] = cut
        delta[over] = 0
        t_max = min(t_max, cut)
        if over.any():
            logger.info(f"Censored {int(over.sum())} subjects at t={cut}")
    factor = target // scale
    if factor > 1:
        T = np.ceil(T / factor).astype(int)
        t_max = int(math.ceil(t_max / factor))

    return SurvivalDataset.from_arrays(
        W=ds.W, A=ds.A, T=T, delta=delta, ids=ds.ids, t_max=t_max,
        covariate_names=ds.covariate_names, dropped_rows=ds.dropped_rows, time_scale=target,
    )


def to_long_frame(ds: SurvivalDataset) -> pd.DataFrame:
    """Person-time table: subject i contributes rows k = 1..t_tilde_i"""
    subject, k = ds.row_index()
    terminal = k == ds.T[subject]
    frame = pd.DataFrame({
        "id": ds.ids[subject],
        "k": k,
        "dN": (terminal & (ds.delta[subject] == 1)).astype(int),
        "dAc": (terminal & (ds.delta[subject] == 0)).astype(int),
        "at_risk": np.ones(subject.size, dtype=int),
        "a": ds.A[subject],
    })
    for j, name in enumerate(ds.covariate_names):
        frame[name] = ds.W[subject, j]
    return frame


def to_long(ds: SurvivalDataset) -> List[LongRow]:
    """Person-time rows as records"""
    frame = to_long_frame(ds)
    W = frame[ds.covariate_names].to_numpy()
    return [
        LongRow(id=int(r.id), k=int(r.k), dN=int(r.dN), dAc=int(r.dAc), at_risk=int(r.at_risk),
                a=int(r.a), w=tuple(float(x) for x in W[pos]))
        for pos, r in enumerate(frame.itertuples(index=False))
    ]


def export_long(ds: SurvivalDataset, path: Union[str, Path]) -> Path:
    """Write the long format as CSV with columns id,k,dN,dAc,a,w1..wp"""
    frame = to_long_frame(ds).drop(columns=["at_risk"])
    frame.columns = ["id", "k", "dN", "dAc", "a"] + [f"w{j + 1}" for j in range(len(ds.covariate_names))]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Long format written: {path} ({len(frame)} rows)")
    return path


def subsample(ds: SurvivalDataset, size: int, rng: np.random.Generator) -> SurvivalDataset:
    """Random subset without replacement, keeping the time grid"""
    if size > ds.n:
        raise ConfigError(f"Subsample size {size} exceeds n={ds.n}")
    return ds.subset(np.sort(rng.choice(ds.n, size=size, replace=False)))
