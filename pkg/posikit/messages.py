"""
The module represents a logic for diagnostic messages: non-fatal events
(degenerate adjusted predictors, bound fall-backs, large universes)
are counted exactly, logged, and the first ones are kept for reports
"""
from threading import Lock
from dataclasses import dataclass, field
from enum import IntEnum

from posikit.utils import logger


class MessageType(IntEnum):
    """
    Types of messages
    """
    info = 0
    warning = 1
    error = 2


@dataclass
class Message:
    """
    Dataclass to represent message
    """
    message: str
    """
    Message
    """
    type: MessageType
    """
    Type of message
    """
    details: str = ''
    """
    Details, e.g. the model and predictor that caused the event
    """


@dataclass
class MessageLog:
    """
    Bounded log of messages with exact per-type counters.
    Safe to share between worker threads
    """
    max_messages: int = 20
    """
    Only this amount of messages is stored, the counters are always exact
    """
    use_log: bool = True
    """
    If True, each message is also passed to the package logger
    """
    messages: list[Message] = field(default_factory=list)
    counts: dict[MessageType, int] = field(
        default_factory=lambda: {t: 0
                                 for t in MessageType})

    def __post_init__(self):
        self._lock = Lock()

    def add(self,
            message: str,
            type: MessageType = MessageType.warning,
            details: str = ''):
        """
        Adds a message

        Args:
            message (str): message text
            type (MessageType): type of message. Defaults to warning.
            details (str, optional): additional message info. Defaults to ''.
        """
        type = MessageType(type)
        with self._lock:
            self.counts[type] += 1
            stored = len(self.messages) < self.max_messages
            if stored:
                self.messages.append(Message(message, type, details))
        if self.use_log and stored:
            if type == MessageType.info:
                msg_func = logger.info
            elif type == MessageType.warning:
                msg_func = logger.warning
            else:
                msg_func = logger.error
            msg_func(f'{message}. Details: {details}' if details else message)

    def count(self, type: MessageType = MessageType.warning) -> int:
        """
        Args:
            type (MessageType): type of message. Defaults to warning.

        Returns:
            int: number of messages of this type added so far, including not stored ones
        """
        return self.counts[MessageType(type)]

    def merge(self, other: "MessageLog"):
        """
        Adds counters and stored messages of another log (e.g. from a worker)

        Args:
            other (MessageLog): log to merge
        """
        with self._lock:
            for t, c in other.counts.items():
                self.counts[t] += c
            free = self.max_messages - len(self.messages)
            if free > 0:
                self.messages.extend(other.messages[:free])
