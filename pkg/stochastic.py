"""Self-play of the probabilistic DUPOC under different couplings.

Each agent first verifies, by Löb's theorem, that the opponent cooperates
with probability at least q; the verification is settled once by the GL
evaluator on ``p <-> []p``. What remains random is the pair of runtime coin
flips, whose joint law is the coupling:

    independent      two independent uniforms, each compared to q
    comonotone       one shared uniform for both agents
    anticomonotone   one uniform u; cooperate on u <= q and on u >= 1 - q

Trial t draws its uniforms from the Philox block at counter t + 1 under the
key ``seed``, so counts do not depend on how trials are split across workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from enum import Enum
from functools import lru_cache

import numpy as np

from config import worker_count
from errors import DomainError, InternalEvaluationError
from gl_eval import FixedPointSystem, evaluate_system
from modal_core import Box, Var

logger = logging.getLogger(__name__)

CHUNK_TRIALS = 65_536
SEED_LIMIT = 2**64


class CouplingMode(Enum):
    INDEPENDENT = "independent"
    COMONOTONE = "comonotone"
    ANTICOMONOTONE = "anticomonotone"


@dataclass(frozen=True)
class JointFrequency:
    q: float
    mode: CouplingMode
    n: int
    seed: int
    cc: int
    cd: int
    dc: int
    dd: int

    def frequency(self, outcome: str) -> float:
        return getattr(self, outcome.lower()) / self.n

    def to_row(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self)}
        row["mode"] = self.mode.value
        return row


CSV_COLUMNS = ["q", "mode", "n", "seed", "cc", "cd", "dc", "dd"]


def _check_probability(q: float) -> None:
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"q must lie in [0, 1], got {q}")


def coop_bound(q: float, mode: CouplingMode) -> float:
    """Probability of mutual cooperation when each agent cooperates with probability q."""
    _check_probability(q)
    match mode:
        case CouplingMode.ANTICOMONOTONE:
            return max(0.0, 2 * q - 1)
        case CouplingMode.INDEPENDENT:
            return q * q
    return q


def cooperation_sigma(q: float, n: int) -> float:
    return math.sqrt(q * (1 - q) / n)


@lru_cache(maxsize=1)
def verification_passes() -> bool:
    """Whether "the opponent provably cooperates with probability q" holds.

    The sentence refers to itself through the opponent's identical check, so it
    is the fixed point of ``p <-> []p``.
    """
    result = evaluate_system(FixedPointSystem(("p",), (Box(Var("p")),)))
    return result.stable["p"]


def _count_chunk(q: float, mode: CouplingMode, seed: int, start: int, stop: int) -> np.ndarray:
    generator = np.random.Generator(np.random.Philox(key=seed, counter=start))
    # one Philox block (four outputs) per trial keeps trial t on counter t + 1
    draws = generator.random((stop - start, 4))
    first = draws[:, 0]
    match mode:
        case CouplingMode.INDEPENDENT:
            row, col = first <= q, draws[:, 1] <= q
        case CouplingMode.COMONOTONE:
            row = col = first <= q
        case CouplingMode.ANTICOMONOTONE:
            row, col = first <= q, first >= 1 - q
    return np.array(
        [
            np.count_nonzero(row & col),
            np.count_nonzero(row & ~col),
            np.count_nonzero(~row & col),
            np.count_nonzero(~row & ~col),
        ],
        dtype=np.int64,
    )


def sample_pdupoc_selfplay(q: float, mode: CouplingMode, n: int, seed: int) -> JointFrequency:
    """Counts the four outcomes of n self-play trials.

    Args:
        q: Cooperation probability of each agent.
        mode: Coupling of the two coin flips.
        n: Number of trials.
        seed: Philox key in [0, 2**64).

    Returns:
        JointFrequency: Counts summing to n, identical for identical inputs.

    Raises:
        DomainError: On q outside [0, 1], n < 1 or a seed out of range.
    """
    _check_probability(q)
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if not (0 <= seed < SEED_LIMIT):
        raise DomainError(f"seed must lie in [0, 2**64), got {seed}")
    if not verification_passes():
        raise InternalEvaluationError("the self-referential verification did not settle true")

    bounds = [(start, min(start + CHUNK_TRIALS, n)) for start in range(0, n, CHUNK_TRIALS)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        counts = pool.map(lambda span: _count_chunk(q, mode, seed, *span), bounds)
        total = sum(counts, np.zeros(4, dtype=np.int64))
    cc, cd, dc, dd = (int(value) for value in total)
    logger.debug("q=%s %s n=%d seed=%d -> %d %d %d %d", q, mode.value, n, seed, cc, cd, dc, dd)
    return JointFrequency(q, mode, n, seed, cc, cd, dc, dd)
