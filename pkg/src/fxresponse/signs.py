"""Trade-sign inference from midpoint changes.

Trade scale: the sign of a trade is the sign of the midpoint change into it;
when the midpoint did not move the previous sign is carried forward. Signs
before the first midpoint move are undefined and stored as 0.

Physical scale: the sign of a second is the sign of the sum of that second's
trade signs, 0 for an empty second or an exact buy/sell balance.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

UNDEFINED = 0


@dataclass
class SignDiagnostics:
    undefined_trade_signs: int = 0
    zero_no_trades: int = 0
    zero_balance: int = 0
    zero_undefined_only: int = 0

    def merge(self, other: "SignDiagnostics") -> None:
        self.undefined_trade_signs += other.undefined_trade_signs
        self.zero_no_trades += other.zero_no_trades
        self.zero_balance += other.zero_balance
        self.zero_undefined_only += other.zero_undefined_only

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def classify_trade_scale(midpoints: np.ndarray) -> np.ndarray:
    """Return int8 signs in {-1, 0, +1}; 0 marks the undefined leading run."""
    m = np.asarray(midpoints, dtype=np.float64)
    out = np.zeros(len(m), dtype=np.int8)
    if len(m) < 2:
        return out
    step = np.sign(np.diff(m)).astype(np.int8)
    # index of the most recent move at or before each position
    moved = np.where(step != 0, np.arange(len(step)), -1)
    np.maximum.accumulate(moved, out=moved)
    defined = moved >= 0
    out[1:][defined] = step[moved[defined]]
    return out


def classify_physical_scale(
    trade_signs: np.ndarray,
    n_trades: np.ndarray,
    diagnostics: SignDiagnostics | None = None,
) -> np.ndarray:
    """Net sign per second.

    Args:
        trade_signs: Trade-scale signs of the week, in event order.
        n_trades: Events per second; must sum to ``len(trade_signs)``.
        diagnostics: Optional tally updated in place.
    """
    eps = np.asarray(trade_signs, dtype=np.int8)
    counts = np.asarray(n_trades, dtype=np.int64)
    if counts.sum() != len(eps):
        raise ValueError(f"slot counts sum to {counts.sum()} but there are {len(eps)} trade signs")
    slot = np.repeat(np.arange(len(counts)), counts)
    net = np.bincount(slot, weights=eps, minlength=len(counts))
    out = np.sign(net).astype(np.int8)
    if diagnostics is not None:
        n_defined = np.bincount(slot, weights=(eps != UNDEFINED), minlength=len(counts))
        has_trades = counts > 0
        diagnostics.undefined_trade_signs += int(np.count_nonzero(eps == UNDEFINED))
        diagnostics.zero_no_trades += int(np.count_nonzero(~has_trades))
        diagnostics.zero_undefined_only += int(np.count_nonzero(has_trades & (n_defined == 0)))
        diagnostics.zero_balance += int(np.count_nonzero(has_trades & (n_defined > 0) & (out == 0)))
    return out


def sign_accuracy(inferred: np.ndarray, true_signs: np.ndarray) -> float:
    """Fraction of defined inferred signs that match the true ones."""
    inferred = np.asarray(inferred)
    mask = inferred != UNDEFINED
    if not mask.any():
        return float("nan")
    return float(np.mean(inferred[mask] == np.asarray(true_signs)[mask]))
