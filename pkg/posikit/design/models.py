"""
Submodel identifiers
"""
from dataclasses import dataclass
from typing import Iterable, Iterator

from posikit.errors import DataError


@dataclass(frozen=True, order=True)
class ModelId:
    """
    Nonempty set of 1-based predictor indices stored as a bitmask:
    bit j-1 is set iff predictor j is in the model
    """
    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise DataError('model must be nonempty')

    @classmethod
    def from_members(cls, members: Iterable[int]) -> "ModelId":
        mask = 0
        for j in members:
            j = int(j)
            if j < 1:
                raise DataError(f'predictor indices are 1-based, got {j}')
            mask |= 1 << (j - 1)
        return cls(mask)

    @classmethod
    def parse(cls, text: str) -> "ModelId":
        """
        Args:
            text (str): comma-separated indices, e.g. "1,3,4"
        """
        try:
            members = [int(t) for t in text.split(',') if t.strip()]
        except ValueError:
            raise DataError(f'bad model: "{text}"')
        if not members:
            raise DataError('model must be nonempty')
        return cls.from_members(members)

    @property
    def members(self) -> list[int]:
        """
        Sorted 1-based indices
        """
        return list(iter(self))

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def last(self) -> int:
        return self.mask.bit_length()

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length()
            mask ^= low

    def __contains__(self, j: int) -> bool:
        return j >= 1 and bool(self.mask >> (j - 1) & 1)

    def __len__(self) -> int:
        return self.size

    def issubset(self, other: "ModelId") -> bool:
        return self.mask & other.mask == self.mask

    def with_predictor(self, j: int) -> "ModelId":
        return ModelId(self.mask | 1 << (j - 1))

    def without_predictor(self, j: int) -> "ModelId | None":
        """
        Returns:
            ModelId | None: model without j or None if nothing is left
        """
        mask = self.mask & ~(1 << (j - 1))
        return ModelId(mask) if mask else None

    def position(self, j: int) -> int:
        """
        0-based position of predictor j among the sorted members
        """
        if j not in self:
            raise DataError(f'predictor {j} is not in model {self}')
        return (self.mask & ((1 << (j - 1)) - 1)).bit_count()

    def __str__(self) -> str:
        return ','.join(str(j) for j in self)


def full_model(p: int) -> ModelId:
    return ModelId((1 << p) - 1)
