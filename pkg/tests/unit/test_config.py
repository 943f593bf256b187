import math

import pytest
from ruamel.yaml import YAML

from posikit.config import (RunConfig, build_example, dump_with_comments,
                            parse_df, parse_model, validate_config)
from posikit.errors import UsageError


def test_parse_df():
    assert parse_df('inf') == math.inf
    assert parse_df('Infinity') == math.inf
    assert parse_df(12) == 12.0
    assert parse_df('7') == 7.0
    for bad in ['0', '-3', '2.5', 'ten']:
        with pytest.raises(UsageError):
            parse_df(bad)


def test_parse_model():
    assert parse_model('3,1, 4') == [1, 3, 4]
    assert parse_model('2,2') == [2]
    with pytest.raises(UsageError):
        parse_model('')
    with pytest.raises(UsageError):
        parse_model('1,x')


def test_validate_defaults():
    validate_config(RunConfig(command='scheffe', d=3))
    validate_config(RunConfig(command='k', design_path='x.csv'))
    validate_config(RunConfig(command='family', family='rate'))


@pytest.mark.parametrize('config', [
    RunConfig(command='nope'),
    RunConfig(command='k'),
    RunConfig(command='k1', design_path='x.csv'),
    RunConfig(command='k', design_path='x.csv', alpha=1.5),
    RunConfig(command='k', design_path='x.csv', df='0'),
    RunConfig(command='k', design_path='x.csv', output='xml'),
    RunConfig(command='k', design_path='x.csv', form='lower'),
    RunConfig(command='k', design_path='x.csv', mc_samples=0),
    RunConfig(command='intervals', design_path='x.csv', response_path='y.csv'),
    RunConfig(command='intervals', design_path='x.csv', response_path='y.csv',
              model='1', sigma_hat=-1.0),
    RunConfig(command='scheffe'),
    RunConfig(command='orth', d=0),
    RunConfig(command='bound', d=3),
    RunConfig(command='coverage', design_path='x.csv', constant='bonferroni'),
    RunConfig(command='coverage', design_path='x.csv', selector='spar1'),
    RunConfig(command='coverage', design_path='x.csv', selector='forward'),
    RunConfig(command='coverage', design_path='x.csv', replications=0),
    RunConfig(command='family', family='circulant'),
    RunConfig(command='family', family='worst-posi1'),
    RunConfig(command='family', family='exchangeable', p_list=[]),
])
def test_validate_errors(config):
    with pytest.raises(UsageError):
        validate_config(config)


def test_example_dump(tmp_path):
    data, comments = build_example(RunConfig)
    assert data['alpha'] == 0.05
    assert data['p_list'] == [5, 8, 11]
    assert 'Error level' in comments['alpha']
    doc = dump_with_comments(data, comments)
    yaml = YAML()
    with open(tmp_path / 'example.yaml', 'w') as out:
        yaml.dump(doc, out)
    text = (tmp_path / 'example.yaml').read_text()
    assert '# Error level' in text
    assert 'universe: all' in text
