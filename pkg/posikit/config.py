"""
Module describes configuration scheme.
For the main config class, see RunConfig
"""
import math
from dataclasses import dataclass, field, fields, is_dataclass, MISSING
from typing import Any

from ruamel.yaml.comments import CommentedMap
from ruamel.yaml import YAML

from posikit.consts import (DEFAULT_ALPHA, DEFAULT_MC_SAMPLES,
                            DEFAULT_RANK_TOLERANCE)
from posikit.errors import UsageError

COMMANDS = ('k', 'k1', 'scheffe', 'orth', 'bound', 'intervals', 'spar',
            'coverage', 'analyze', 'family')
OUTPUTS = ('json', 'csv', 'text')
FAMILIES = ('exchangeable', 'worst-posi1', 'rate')
FORMS = ('upper_triangular', 'symmetric')
CONSTANTS = ('posi', 'posi1', 'scheffe', 'naive')


@dataclass
class RunConfig:
    """
    One invocation of the tool
    """
    command: str = field(
        default='k',
        metadata={"help": f"Command to run, one of {', '.join(COMMANDS)}"},
    )

    design_path: str | None = field(
        default=None,
        metadata={
            "help":
            "Path to a comma- or whitespace-separated design table (n x p)"
        },
    )

    alpha: float = field(
        default=DEFAULT_ALPHA,
        metadata={"help": "Error level, the intervals are two-sided 1-alpha"},
    )

    df: str = field(
        default="inf",
        metadata={
            "help":
            ("Degrees of freedom r of the error estimate. "
             "'inf' means that sigma is known")
        },
    )

    universe: str = field(
        default="all",
        metadata={
            "help":
            ("Model universe: all, size<=m, size>p-m, forced=1,2, nested, file=PATH, vif<=c. "
             "Constraints are combined with '&'")
        },
    )

    mc_samples: int = field(
        default=DEFAULT_MC_SAMPLES,
        metadata={"help": "Number of Monte-Carlo draws N"},
    )

    seed: int = field(
        default=0,
        metadata={"help": "Seed of the counter-based generator"},
    )

    threads: str = field(
        default="auto",
        metadata={
            "help":
            ("Number of threads or 'auto'. "
             "Does not change the results, only the time")
        },
    )

    output: str = field(
        default="json",
        metadata={"help": f"Output format, one of {', '.join(OUTPUTS)}"},
    )

    predictor: int | None = field(
        default=None,
        metadata={
            "help":
            ("1-based predictor index for k1 and spar. "
             "With spar, switches to the single-predictor selector")
        },
    )

    response_path: str | None = field(
        default=None,
        metadata={"help": "Path to a response file, one value per line"},
    )

    sigma_hat: float | None = field(
        default=None,
        metadata={
            "help":
            ("Error estimate. If not set, it is estimated from the full-model residuals "
             "and r = n - d is used instead of df")
        },
    )

    model: str | None = field(
        default=None,
        metadata={"help": "Submodel for intervals, e.g. '1,3,4'"},
    )

    selector: str = field(
        default="spar",
        metadata={
            "help":
            ("Selector for coverage: spar, spar1, forward, best_subset. "
             "Ignored if selector_config is set")
        },
    )

    selector_config: dict[str, Any] | None = field(
        default=None,
        metadata={
            "help":
            ("Pluggable selector as a mapping with a '_target_' classpath. "
             "The class must derive from posikit.selectors.Selector")
        },
    )

    selector_size: int | None = field(
        default=None,
        metadata={
            "help": "Model size for forward and best_subset selectors"
        },
    )

    constant: str = field(
        default="posi",
        metadata={
            "help":
            (f"Constant used by coverage, one of {', '.join(CONSTANTS)}. "
             "'naive' is the marginal normal or t quantile")
        },
    )

    replications: int = field(
        default=1000,
        metadata={"help": "Number of coverage replications"},
    )

    mu_path: str | None = field(
        default=None,
        metadata={
            "help":
            "Path to the mean vector E[y] of length n. If not set, zero mean is used"
        },
    )

    d: int | None = field(
        default=None,
        metadata={
            "help":
            "Rank for scheffe, orth and bound. If not set, taken from the design"
        },
    )

    p: int | None = field(
        default=None,
        metadata={
            "help":
            ("Number of predictors for bound (with d = p and p * 2^(p-1) directions) "
             "and for the worst-posi1 family")
        },
    )

    direction_count: int | None = field(
        default=None,
        metadata={
            "help":
            "Direction count for bound. If not set, computed from the design or from p"
        },
    )

    cap_a: float | None = field(
        default=None,
        metadata={
            "help":
            ("Growth base a of the direction count (|L| ~ a^d) for the asymptotic bound. "
             "If not set, derived from direction_count and d")
        },
    )

    family: str = field(
        default="exchangeable",
        metadata={"help": f"Design family, one of {', '.join(FAMILIES)}"},
    )

    p_list: list[int] = field(
        default_factory=lambda: [5, 8, 11],
        metadata={"help": "Dimensions for the exchangeable family table"},
    )

    a_grid: list[float] = field(
        default_factory=lambda: [0.0, 0.1, 0.3, 1.0, 3.0, 10.0],
        metadata={
            "help":
            ("Nonnegative exchangeable parameters. Negative ones are covered by duality")
        },
    )

    c_grid: list[float] = field(
        default_factory=list,
        metadata={
            "help":
            ("Values of c for the worst-posi1 family. "
             "If empty, c^2 approaches 1/(p-1) geometrically")
        },
    )

    c_grid_size: int = field(
        default=12,
        metadata={"help": "Size of the default worst-posi1 c grid"},
    )

    header: bool = field(
        default=False,
        metadata={"help": "If set, the first line of the design holds names"},
    )

    intercept: bool = field(
        default=False,
        metadata={"help": "If set, a constant column is prepended"},
    )

    rank_tolerance: float = field(
        default=DEFAULT_RANK_TOLERANCE,
        metadata={"help": "Relative singular-value cutoff for ranks"},
    )

    form: str = field(
        default="upper_triangular",
        metadata={
            "help": f"Canonical form, one of {', '.join(FORMS)}"
        },
    )

    dedup: bool = field(
        default=False,
        metadata={
            "help":
            "If set, directions equal up to sign are counted once"
        },
    )

    census_tolerance: float = field(
        default=1e-10,
        metadata={
            "help": "Inner products below this value count as orthogonal"
        },
    )

    log_level: str = field(
        default="WARNING",
        metadata={
            "help":
            ("Log level used for the project: [DEBUG, INFO, WARNING, ERROR]")
        },
    )

    log_path: str | None = field(
        default=None,
        metadata={"help": "Path to save logs. If not set, logs go to stderr only"},
    )


REQUIRED = {
    'k': ('design_path', ),
    'k1': ('design_path', 'predictor'),
    'intervals': ('design_path', 'response_path', 'model'),
    'spar': ('design_path', 'response_path'),
    'coverage': ('design_path', ),
    'analyze': ('design_path', ),
}
"""
Fields that must be set for a command
"""


def parse_df(df: str | int | float) -> float:
    """
    Parses degrees of freedom

    Args:
        df (str | int | float): positive integer or "inf"

    Returns:
        float: r as a float, math.inf for known sigma
    """
    text = str(df).strip().lower()
    if text in ('inf', 'infinity'):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f'bad df: {df}')
    if value == math.inf:
        return value
    if value < 1 or value != int(value):
        raise UsageError(f'df must be a positive integer or inf, got {df}')
    return float(int(value))


def parse_model(model: str) -> list[int]:
    """
    Parses a comma-separated list of 1-based predictor indices

    Args:
        model (str): e.g. "1,3,4"

    Returns:
        list[int]: sorted indices
    """
    try:
        members = sorted({int(m) for m in str(model).split(',') if m.strip()})
    except ValueError:
        raise UsageError(f'bad model: {model}')
    if not members:
        raise UsageError('model must be nonempty')
    return members


def validate_config(config: RunConfig):
    """
    Checks the fields required by the command, before any computation

    Args:
        config (RunConfig): config to check
    """
    if config.command not in COMMANDS:
        raise UsageError(
            f'unknown command {config.command}, expected one of {", ".join(COMMANDS)}'
        )
    if config.output not in OUTPUTS:
        raise UsageError(f'unknown output format {config.output}')
    if config.form not in FORMS:
        raise UsageError(f'unknown canonical form {config.form}')
    if not 0 < config.alpha < 1:
        raise UsageError(f'alpha must be in (0, 1), got {config.alpha}')
    parse_df(config.df)
    if config.mc_samples < 1:
        raise UsageError(f'mc_samples must be positive: {config.mc_samples}')
    if config.rank_tolerance < 0:
        raise UsageError('rank_tolerance must be nonnegative')
    for name in REQUIRED.get(config.command, ()):
        if getattr(config, name) is None:
            raise UsageError(
                f'command {config.command} requires {name.replace("_", "-")}')
    if config.model is not None:
        parse_model(config.model)
    if config.sigma_hat is not None and config.sigma_hat <= 0:
        raise UsageError(f'sigma_hat must be positive: {config.sigma_hat}')
    if config.command in ('scheffe', 'orth'):
        if config.d is None and config.design_path is None:
            raise UsageError(f'command {config.command} requires d or design')
        if config.d is not None and config.d < 1:
            raise UsageError(f'd must be positive: {config.d}')
    if config.command == 'bound':
        if config.design_path is None and config.p is None and (
                config.d is None or config.direction_count is None):
            raise UsageError(
                'command bound requires a design, p, or both d and direction-count'
            )
    if config.command == 'coverage':
        if config.constant not in CONSTANTS:
            raise UsageError(f'unknown constant {config.constant}')
        if config.replications < 1:
            raise UsageError('replications must be positive')
        uses_predictor = config.selector == 'spar1' or config.constant == 'posi1'
        if config.selector_config is None and uses_predictor and config.predictor is None:
            raise UsageError('spar1 selector and posi1 constant require predictor')
        if config.selector in ('forward', 'best_subset'
                               ) and config.selector_size is None:
            raise UsageError(f'selector {config.selector} requires selector-size')
    if config.command == 'family':
        if config.family not in FAMILIES:
            raise UsageError(f'unknown family {config.family}')
        if config.family == 'worst-posi1' and (config.p is None
                                               or config.p < 2):
            raise UsageError('family worst-posi1 requires p >= 2')
        if config.family == 'exchangeable' and not config.p_list:
            raise UsageError('family exchangeable requires p-list')


### Example config dump
REQUIRED_PLACEHOLDER = "<required>"


def build_example(cls) -> tuple[dict, dict]:
    """
    Builds example values and comments for a dataclass scheme

    Args:
        cls: dataclass scheme

    Returns:
        tuple[dict, dict]: values and help comments per field
    """
    data = {}
    comments = {}
    for f in fields(cls):
        if is_dataclass(f.type):
            data[f.name], comments[f.name] = build_example(f.type)
            continue
        if f.default is not MISSING:
            value = f.default
        elif f.default_factory is not MISSING:  # type: ignore
            value = f.default_factory()  # type: ignore
        else:
            value = REQUIRED_PLACEHOLDER
        data[f.name] = value
        comments[f.name] = f.metadata.get("help")
    return data, comments


def dump_with_comments(data: dict, comments: dict) -> CommentedMap:
    """
    Converts example values into a ruamel map with help comments before each key
    """
    cm = CommentedMap()
    for k, v in data.items():
        sub_c = comments.get(k)
        cm[k] = dump_with_comments(v, sub_c or {}) if isinstance(v,
                                                                 dict) else v
        if isinstance(sub_c, str) and sub_c.strip():
            cm.yaml_set_comment_before_after_key(k, before=sub_c)
    return cm


if __name__ == '__main__':
    data, comments = build_example(RunConfig)
    doc = dump_with_comments(data, comments)

    yaml = YAML()
    with open("example.yaml", "w") as out:
        yaml.dump(doc, out)
