"""Draw-dependent permutation that shrinks the interval-splitting rate.

Long cells are pushed toward the interval boundaries and short cells
toward the draw, so the cell straddling the wrap point tends to be short.
The permutation depends only on the draw and the weights, never on the
message, so token selection probabilities are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import QuantizedDistribution


@dataclass(frozen=True)
class Permutation:
    """A bijection on cell indices, front list then reversed back list."""

    order: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.order)


def reorder(q: QuantizedDistribution, u64: int) -> Permutation:
    """Arrange cells so the draw lands near short ones.

    Scan indices by weight descending (ties to lower token id); an index
    joins the front list while the accumulated front mass plus its weight
    stays strictly below u * 2**q_bits (compared exactly in integers),
    otherwise it is prepended to the back list.
    """
    if not 0 <= u64 < (1 << 64):
        raise ValueError("u64 must be a 64-bit fraction numerator")
    target = u64 << q.q_bits
    # front_sum + w < target / 2**64  <=>  front_sum + w <= limit
    limit = (target - 1) >> 64 if target else -1
    weights = q.weights
    front: list[int] = []
    back: list[int] = []
    front_sum = 0
    for i in q.descending_order():
        candidate = front_sum + weights[i]
        if candidate <= limit:
            front_sum = candidate
            front.append(i)
        else:
            back.append(i)
    back.reverse()
    return Permutation(tuple(front + back))


def apply_permutation(q: QuantizedDistribution, perm: Permutation) -> QuantizedDistribution:
    """Rebuild the quantized distribution in permuted cell order."""
    n = len(q.weights)
    if len(perm.order) != n or set(perm.order) != set(range(n)):
        raise ValueError("permutation is not a bijection on the cell indices")
    ids = q.token_ids
    ws = q.weights
    return QuantizedDistribution(
        tuple(ids[i] for i in perm.order),
        tuple(ws[i] for i in perm.order),
        q.q_bits,
    )


def reordered_cells(
    q: QuantizedDistribution, u64: int
) -> tuple[tuple[int, ...], QuantizedDistribution]:
    """Reorder and apply in one pass, skipping re-validation.

    Returns the permutation order alongside the rebuilt cells. The cells
    carry weights and boundaries only (token ids resolve through the
    order against the base distribution), which keeps the per-step cost
    to the two unavoidable O(n) passes.
    """
    order = reorder(q, u64).order
    weights = q.weights
    new_weights = tuple(weights[i] for i in order)
    cum = [0]
    acc = 0
    for w in new_weights:
        acc += w
        cum.append(acc)
    cells = QuantizedDistribution._trusted(None, new_weights, q.q_bits, tuple(cum))
    return order, cells


__all__ = ["Permutation", "reorder", "apply_permutation", "reordered_cells"]
