"""
Classes that must be instantiated from configs (for minihydra and selector tests)
"""
from dataclasses import dataclass, field

from posikit.design.models import ModelId
from posikit.selectors import Selector


class TestObject:

    def __init__(self, a, b) -> None:
        self.a = a
        self.b = b


@dataclass(frozen=True)
class FixedModelSelector(Selector):
    """
    Always returns the same model, whatever the data
    """
    members: list[int] = field(default_factory=lambda: [1])

    def select(self, design, y, sigma_hat):
        return ModelId.from_members(self.members)

    def __str__(self):
        return f'fixed({",".join(map(str, self.members))})'
