"""Sequential feature-by-feature generation, imputation, and decoding.

Rows are independent: row r consumes uniforms from its own RNG substream,
derived from (seed, row index), so changing the row count never reshuffles
earlier rows and generating n rows equals generating them one at a time.
Conditioned/observed sub-columns are injected without consuming randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import nn
from .encoders import EncodedTable, decode_table
from .model import ArgnModel
from .tables import RawTable

_ROW_DOMAIN = 0
_DECODE_DOMAIN = 1


@dataclass
class GenerationRequest:
    n_rows: int
    order: Optional[Sequence[int]] = None  # sub-column indices; None = canonical
    conditions: dict = field(default_factory=dict)  # parent name -> raw value, or sub index -> code
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 0:
            raise ValueError("n_rows must be non-negative")
        if not (np.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError("temperature must be finite and > 0")


def _row_rng(seed: int, row_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_ROW_DOMAIN, row_index))
    return np.random.Generator(np.random.PCG64(ss))


def decode_rng(seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_DECODE_DOMAIN,))
    return np.random.Generator(np.random.PCG64(ss))


def _resolve_conditions(model: ArgnModel, conditions: dict) -> dict[int, int]:
    """Normalize conditions to {sub-column index: category code}.

    String keys are parent columns whose raw value is pushed through the
    fitted encoder (fixing every sub-column of that parent); int keys fix a
    single sub-column directly.
    """
    fixed: dict[int, int] = {}
    for key, value in conditions.items():
        if isinstance(key, str):
            if model.encoders is None:
                raise ValueError("model has no encoders; condition by sub-column index instead")
            enc = model.encoders.encoder_for(key)
            indices = model.encoders.sub_indices_of(key)
            if enc.kind == "quadtile":
                raise ValueError(f"column {key!r}: conditioning on latlong columns is not supported")
            codes = enc.encode_value(None if value == "" else str(value))
            for i, code in zip(indices, codes):
                fixed[i] = int(code)
        else:
            i = int(key)
            if not 0 <= i < model.d_total:
                raise ValueError(f"sub-column index {i} out of range")
            fixed[i] = int(value)
    for i, code in fixed.items():
        card = model.sub_columns[i].cardinality
        if not 0 <= code < card:
            raise ValueError(
                f"column {model.sub_columns[i].name!r}: condition code {code} out of range"
            )
    return fixed


def _effective_order(model: ArgnModel, requested: Optional[Sequence[int]],
                     fixed: dict[int, int]) -> tuple[int, ...]:
    d = model.d_total
    order = tuple(requested) if requested is not None else tuple(range(d))
    if sorted(order) != list(range(d)):
        raise ValueError("order must be a permutation of all sub-columns")
    conditioned = sorted(fixed)
    free = [i for i in order if i not in fixed]
    effective = tuple(conditioned + free)
    if model.order_mode == "fixed" and effective != model.fixed_order:
        raise ValueError(
            "model was trained with a fixed order; requested order (after moving "
            "conditioned sub-columns first) differs"
        )
    return effective


def _sample_codes(model: ArgnModel, row_indices: Sequence[int], order: Sequence[int],
                  fixed_codes: dict[int, np.ndarray], temperature: float, seed: int) -> np.ndarray:
    """Inner sampling loop shared by generate() and impute().

    ``fixed_codes`` maps a sub-column index to per-row codes (length =
    len(row_indices)) that are injected instead of drawn.
    """
    n = len(row_indices)
    d = model.d_total
    out = np.zeros((n, d), dtype=np.int32)
    if n == 0:
        return out
    free_positions = [i for i in order if i not in fixed_codes]
    uniforms = np.empty((n, len(free_positions)), dtype=np.float64)
    for r, row_index in enumerate(row_indices):
        uniforms[r] = _row_rng(seed, int(row_index)).random(len(free_positions))

    dtype = model.params["E0"].value.dtype
    ctx = np.zeros((n, model.sizes.context_width), dtype=dtype)
    u_col = 0
    for i in order:
        if i in fixed_codes:
            codes = np.asarray(fixed_codes[i], dtype=np.int32)
            if codes.ndim == 0:
                codes = np.full(n, int(codes), dtype=np.int32)
        else:
            logits, _ = model.column_logits(ctx, i, train_mode=False)
            p = nn.softmax(logits / temperature)
            cum = np.cumsum(p, axis=1)
            u = uniforms[:, u_col]
            u_col += 1
            codes = np.minimum(
                (u[:, None] >= cum).sum(axis=1), model.sub_columns[i].cardinality - 1
            ).astype(np.int32)
        out[:, i] = codes
        ctx[:, model.slot(i)] = model.params[f"E{i}"].value[codes]
    return out


def generate(model: ArgnModel, req: GenerationRequest) -> EncodedTable:
    """Sample complete encoded rows feature-by-feature.

    Conditioned sub-columns are moved to the front of the order and their
    codes injected; everything else is drawn from the temperature-scaled
    conditional distribution.
    """
    if not model.trained:
        raise ValueError("model is not trained")
    fixed = _resolve_conditions(model, req.conditions)
    order = _effective_order(model, req.order, fixed)
    fixed_arrays = {i: np.full(req.n_rows, code, dtype=np.int32) for i, code in fixed.items()}
    codes = _sample_codes(model, range(req.n_rows), order, fixed_arrays, req.temperature, req.seed)
    return EncodedTable(model.sub_columns, codes)


def impute(model: ArgnModel, partial: EncodedTable, observed: np.ndarray,
           temperature: float = 1.0, seed: int = 0) -> EncodedTable:
    """Fill the unobserved sub-columns of each row.

    ``observed`` is a boolean (rows, sub-columns) mask; True cells are kept
    verbatim and conditioned on (observed-first canonical order), False cells
    are sampled. Requires an any-order-trained model.
    """
    if not model.trained:
        raise ValueError("model is not trained")
    if model.order_mode != "any_order":
        raise ValueError("imputation needs an any-order-trained model")
    observed = np.asarray(observed, dtype=bool)
    data = partial.data
    if observed.shape != data.shape:
        raise ValueError("observed mask shape does not match the table")

    out = data.copy()
    patterns: dict[tuple, list[int]] = {}
    for r in range(data.shape[0]):
        patterns.setdefault(tuple(observed[r]), []).append(r)
    for pattern, rows in patterns.items():
        obs_cols = [i for i, flag in enumerate(pattern) if flag]
        missing_cols = [i for i, flag in enumerate(pattern) if not flag]
        if not missing_cols:
            continue
        order = tuple(obs_cols + missing_cols)
        fixed = {i: data[rows, i] for i in obs_cols}
        sampled = _sample_codes(model, rows, order, fixed, temperature, seed)
        out[rows] = sampled
    return EncodedTable(model.sub_columns, out)


def synthesize(model: ArgnModel, req: GenerationRequest) -> RawTable:
    """generate() then decode back to the original column format."""
    if model.encoders is None:
        raise ValueError("model has no fitted encoders; cannot decode")
    encoded = generate(model, req)
    return decode_table(encoded, model.encoders, decode_rng(req.seed))
