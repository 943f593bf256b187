import pytest

from posikit.messages import MessageLog, MessageType
from posikit.workers import map_ordered


def test_add_and_count():
    log = MessageLog(max_messages=3, use_log=False)
    for i in range(5):
        log.add(f'skip {i}', details=f'model {i}')
    log.add('note', MessageType.info)
    assert log.count() == 5
    assert log.count(MessageType.info) == 1
    assert log.count(MessageType.error) == 0
    assert len(log.messages) == 3
    assert log.messages[0].details == 'model 0'


def test_merge():
    main = MessageLog(max_messages=2, use_log=False)
    main.add('a')
    other = MessageLog(use_log=False)
    other.add('b')
    other.add('c', MessageType.error)
    main.merge(other)
    assert main.count() == 2
    assert main.count(MessageType.error) == 1
    assert [m.message for m in main.messages] == ['a', 'b']


def test_threads():
    log = MessageLog(max_messages=1, use_log=False)
    map_ordered(lambda i: log.add(str(i)), range(100), threads=4)
    assert log.count() == 100
    assert len(log.messages) == 1


def test_bad_type():
    with pytest.raises(ValueError):
        MessageLog().add('x', 7)
